#include <doctest.h>

#include <cmath>

#include "botdr/core_model.hpp"
#include "botdr/errors.hpp"

using namespace botdr;

TEST_CASE("lorentzian line shape hits its defining points") {
    model::BrillouinLine line;  // 10850 MHz, HWHM 15, unit peak
    CHECK(model::eval_brillouin(line, 10850.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(model::eval_brillouin(line, 10865.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(model::eval_brillouin(line, 10835.0) == doctest::Approx(0.5).epsilon(1e-12));
    // far tail falls off as 1/x^2
    const double r = model::eval_brillouin(line, 10850.0 + 1500.0) /
                     model::eval_brillouin(line, 10850.0 + 3000.0);
    CHECK(r == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("etalon comb: unit peaks at multiples of the FSR, clamped overlap") {
    model::FpiEtalon et;  // HWHM 60, FSR 4020
    et.comb_orders = 1;
    CHECK(model::eval_fpi(et, 0.0) == 1.0);      // clamp keeps the peak exactly at 1
    CHECK(model::eval_fpi(et, 4020.0) == 1.0);   // neighbouring order
    CHECK(model::eval_fpi(et, -4020.0) == 1.0);
    CHECK(model::eval_fpi(et, 60.0) == doctest::Approx(0.5).epsilon(2e-3));
    CHECK(model::eval_fpi(et, 2010.0) < 2e-3);   // valley between orders
}

TEST_CASE("measured response is a lorentzian with summed half widths") {
    model::BrillouinLine line;
    model::FpiEtalon et;
    // half maximum sits omega_b + omega_fpi away from the line center
    CHECK(model::eval_transmission(line, et, 10850.0) == doctest::Approx(1.0));
    CHECK(model::eval_transmission(line, et, 10850.0 + 75.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(model::eval_transmission(line, et, 10850.0 - 75.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("convolution spot check: lorentzians add their half widths") {
    // trapezoid convolution of the bare line with a single etalon order,
    // peak-normalized, against the closed-form combined response
    model::BrillouinLine line;
    line.nu_b_mhz = 0.0;
    model::FpiEtalon et;
    const double wc = line.omega_b_mhz + et.omega_fpi_mhz;
    const double R = 800.0 * wc, h = wc / 60.0;
    const int n = static_cast<int>(2.0 * R / h);
    auto conv = [&](double s) {
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double x = -R + i * h;
            const double weight = (i == 0 || i == n) ? 0.5 : 1.0;
            acc += weight * model::eval_brillouin(line, x) * model::eval_fpi(et, s - x);
        }
        return acc * h;
    };
    const double peak = conv(0.0);
    for (const double s : {-2.0 * wc, -wc, -0.3 * wc, 0.5 * wc, wc, 3.0 * wc}) {
        const double expect = model::eval_transmission(line, et, s);
        CHECK(conv(s) / peak == doctest::Approx(expect).epsilon(2e-3));
    }
}

TEST_CASE("sensitivity forward map at the documented rates") {
    model::SensitivityModel sm;
    model::Environment env;
    env.temperature_c = 35.0;  // +10 C
    env.strain_ue = 200.0;
    const auto line = model::line_from_environment(sm, env);
    CHECK(line.nu_b_mhz == doctest::Approx(10850.0 + 10.0 + 10.0).epsilon(1e-12));
    CHECK(line.omega_b_mhz == doctest::Approx(15.0 + 1.0 + 0.2).epsilon(1e-12));
}

TEST_CASE("environment round trip through the 2x2 solve") {
    model::SensitivityModel sm;
    for (const double t : {-40.0, 0.0, 25.0, 80.0}) {
        for (const double e : {-500.0, 0.0, 321.0, 2500.0}) {
            model::Environment env;
            env.temperature_c = t;
            env.strain_ue = e;
            const auto line = model::line_from_environment(sm, env);
            const auto back = model::environment_from_line(sm, line);
            CHECK(back.temperature_c == doctest::Approx(t).epsilon(1e-9));
            CHECK(back.strain_ue == doctest::Approx(e).epsilon(1e-9));
        }
    }
}

TEST_CASE("non-physical width is rejected, not propagated") {
    model::SensitivityModel sm;
    model::Environment env;
    env.temperature_c = 25.0 - 200.0;  // drives omega to 15 - 20 < 0
    env.strain_ue = 0.0;
    CHECK_THROWS_AS(model::line_from_environment(sm, env), Error);
    try {
        model::line_from_environment(sm, env);
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::NonPhysicalWidth);
    }
}

TEST_CASE("singular sensitivity matrix raises IllConditioned") {
    model::SensitivityModel sm;
    sm.c_w_t_mhz_per_c = 0.02;  // det = 1*0.001 - 0.05*0.02 = 0
    model::BrillouinLine line;
    try {
        model::environment_from_line(sm, line);
        FAIL("expected IllConditioned");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::IllConditioned);
    }
}

TEST_CASE("delta-method uncertainties against the hand-inverted matrix") {
    // M^-1 = [[-0.25, 12.5], [25, -250]] for the default rates
    model::SensitivityModel sm;
    double st = 0.0, se = 0.0;
    model::environment_sigma(sm, 1.0, 0.0, 0.0, st, se);
    CHECK(st == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(se == doctest::Approx(25.0).epsilon(1e-9));
    model::environment_sigma(sm, 0.0, 0.0, 1.0, st, se);
    CHECK(st == doctest::Approx(12.5).epsilon(1e-9));
    CHECK(se == doctest::Approx(250.0).epsilon(1e-9));
}

TEST_CASE("etalon validation refuses overlapping orders") {
    model::FpiEtalon et;
    et.omega_fpi_mhz = 5000.0;  // > fsr
    try {
        model::validate(et);
        FAIL("expected ValidationError");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ValidationError);
    }
}
