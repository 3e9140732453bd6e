#include <doctest.h>

#include <cmath>

#include "botdr/calibration.hpp"
#include "botdr/errors.hpp"
#include "botdr/scan_engine.hpp"

using namespace botdr;

namespace {

calib::HysteresisMap default_map(std::uint64_t seed = 1) {
    calib::PztModel pzt;
    model::FpiEtalon et;
    calib::HysteresisMap map;
    map.fsr_mhz = et.fsr_mhz;
    for (const auto branch : {calib::Branch::up, calib::Branch::down}) {
        const auto trace = calib::simulate_calibration_trace(pzt, et, branch, 20001, {}, seed);
        const auto one = calib::calibrate_branch(trace, et.fsr_mhz);
        if (branch == calib::Branch::up)
            map.up = one.up;
        else
            map.down = one.down;
    }
    return map;
}

scan::FiberProfile homogeneous(double length_m, double t_c = 25.0, double strain = 0.0) {
    scan::FiberSegment seg;
    seg.length_m = length_m;
    seg.environment.temperature_c = t_c;
    seg.environment.strain_ue = strain;
    scan::FiberProfile fiber;
    fiber.segments = {seg};
    return fiber;
}

}  // namespace

TEST_CASE("table defaults produce the documented derived quantities") {
    scan::InstrumentConfig cfg;
    CHECK(cfg.rep_period_ns() == doctest::Approx(125000.0));
    CHECK(cfg.n_bins() == 417);  // ceil(125000 / 300)
    CHECK(cfg.pulse_energy_j() == doctest::Approx(3.0e-8).epsilon(1e-12));
    CHECK(cfg.unambiguous_range_m() == doctest::Approx(12500.0));
    CHECK(cfg.smear_width_m() == doctest::Approx(30.0));
    CHECK(scan::time_to_range(300.0, 2.0e8) == doctest::Approx(30.0));
}

TEST_CASE("negative arrival time is rejected") {
    try {
        scan::time_to_range(-1.0, 2.0e8);
        FAIL("expected OutOfRange");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::OutOfRange);
    }
}

TEST_CASE("nonparalyzable censoring: cap, half point, exact inverse") {
    const double tau_ns = 23.0;
    const double tau_s = tau_ns * 1.0e-9;
    // never exceeds 1/tau no matter how hard it is driven
    for (double r = 1.0; r < 1.0e14; r *= 10.0)
        CHECK(scan::apply_dead_time(r, tau_ns) < 1.0 / tau_s);
    // r = 1/tau censors to exactly half
    const double r_half = 1.0 / tau_s;
    CHECK(scan::apply_dead_time(r_half, tau_ns) == r_half / 2.0);
    // invert(apply) is the identity well below saturation
    for (double r = 10.0; r < 4.0e7; r *= 3.0) {
        const double back = scan::invert_dead_time(scan::apply_dead_time(r, tau_ns), tau_ns);
        CHECK(back == doctest::Approx(r).epsilon(1e-12));
    }
    // zero dead time is a no-op
    CHECK(scan::apply_dead_time(123.0, 0.0) == 123.0);
}

TEST_CASE("inverting a rate at or past the ceiling fails loudly") {
    const double tau_ns = 23.0;
    try {
        scan::invert_dead_time(1.0 / (tau_ns * 1.0e-9), tau_ns);
        FAIL("expected OutOfRange");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::OutOfRange);
    }
}

TEST_CASE("expected rate sweeps out exactly the combined line shape") {
    const auto fiber = homogeneous(10000.0, 40.0, 300.0);
    scan::InstrumentConfig cfg;
    model::SensitivityModel sm;
    model::FpiEtalon et;
    cfg.rayleigh_to_brillouin = 0.0;  // pure spectral factor, no leak pedestal
    const auto line = model::line_from_environment(sm, fiber.segments[0].environment);
    const int bin = 150;
    const double r0 = scan::expected_rate(fiber, cfg, sm, et, line.nu_b_mhz, bin);
    for (double d = -280.0; d <= 280.0; d += 35.0) {
        const double r = scan::expected_rate(fiber, cfg, sm, et, line.nu_b_mhz + d, bin);
        const double shape = model::eval_transmission(line, et, line.nu_b_mhz + d);
        CHECK(r / r0 == doctest::Approx(shape).epsilon(1e-12));
    }
}

TEST_CASE("homogeneous fiber decays one bin at a time by the exact two-way loss") {
    const auto fiber = homogeneous(10000.0);
    scan::InstrumentConfig cfg;
    model::SensitivityModel sm;
    model::FpiEtalon et;
    // two-way power exponent per meter for 0.2 dB/km
    const double k = 2.0 * std::log(10.0) / 10.0 * 0.2 / 1000.0;
    const double expect = std::exp(-k * 30.0);
    double prev = scan::expected_rate(fiber, cfg, sm, et, 10850.0, 1);
    for (int bin = 2; bin <= 330; ++bin) {
        const double cur = scan::expected_rate(fiber, cfg, sm, et, 10850.0, bin);
        // the bin value is a double difference of a smooth antiderivative, so
        // cancellation eats ~5 digits by the fiber end; measured worst ~2e-10
        CHECK(cur / prev == doctest::Approx(expect).epsilon(1e-9));
        prev = cur;
    }
}

TEST_CASE("rayleigh leak adds the etalon pedestal at the laser comb") {
    const auto fiber = homogeneous(10000.0);
    scan::InstrumentConfig cfg;
    model::SensitivityModel sm;
    model::FpiEtalon et;
    et.comb_orders = 3;
    const int bin = 50;
    cfg.rayleigh_to_brillouin = 0.0;
    const double clean = scan::expected_rate(fiber, cfg, sm, et, 10850.0, bin);
    cfg.rayleigh_to_brillouin = 20.0;
    const double leaked = scan::expected_rate(fiber, cfg, sm, et, 10850.0, bin);
    const double pedestal = 20.0 * std::pow(10.0, -35.0 / 10.0) * model::eval_fpi(et, 10850.0);
    CHECK((leaked - clean) / clean ==
          doctest::Approx(pedestal / model::eval_transmission(
                                         model::BrillouinLine{}, et, 10850.0)).epsilon(1e-9));
}

TEST_CASE("schedule voltages land every step on its target frequency") {
    const auto map = default_map();
    scan::ScanSchedule sched;
    scan::build_voltages(sched, map);
    REQUIRE(sched.voltages.size() == 40);
    for (int i = 0; i < sched.n_steps; ++i) {
        const double f = sched.anchor_mhz + map.voltage_to_frequency(sched.branch, sched.voltages[i]);
        CHECK(f == doctest::Approx(sched.target_frequency(i)).epsilon(1e-9));
    }
    // a window outside the calibrated span must refuse
    scan::ScanSchedule wild;
    wild.center_mhz = 40000.0;
    try {
        scan::build_voltages(wild, map);
        FAIL("expected OutOfCalibratedRange");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::OutOfCalibratedRange);
    }
}

TEST_CASE("expected-value sampling equals rate x exposure cell by cell") {
    const auto map = default_map();
    const auto fiber = homogeneous(2000.0);
    scan::InstrumentConfig cfg;
    model::SensitivityModel sm;
    model::FpiEtalon et;
    scan::ScanSchedule sched;
    sched.dwell_s = 0.5;
    scan::build_voltages(sched, map);
    scan::SimulateOptions opt;
    opt.sampling = scan::Sampling::expected;
    const auto hist = scan::simulate_histogram(fiber, cfg, sm, et, sched, map, 5, opt);
    const double pulses = hist.pulses();
    const double dt_s = cfg.bin_width_ns * 1.0e-9;
    for (const int step : {0, 13, 39}) {
        const double nu = hist.step_frequency_mhz[step];
        for (const int bin : {0, 40, 66, 200, 416}) {
            const double sig = scan::expected_rate(fiber, cfg, sm, et, nu, bin);
            const double inst = sig / dt_s + cfg.noise_rate_cps;
            const double censored = scan::apply_dead_time(inst, cfg.dead_time_ns);
            CHECK(hist.at(step, bin) ==
                  doctest::Approx(censored * dt_s * pulses).epsilon(1e-10));
        }
    }
}

TEST_CASE("zero capture and zero noise yields an all-zero histogram") {
    const auto map = default_map();
    const auto fiber = homogeneous(2000.0);
    scan::InstrumentConfig cfg;
    cfg.capture_coefficient = 0.0;
    cfg.noise_rate_cps = 0.0;
    model::SensitivityModel sm;
    model::FpiEtalon et;
    scan::ScanSchedule sched;
    scan::build_voltages(sched, map);
    const auto hist = scan::simulate_histogram(fiber, cfg, sm, et, sched, map, 5, {});
    for (double c : hist.counts) CHECK(c == 0.0);
}

TEST_CASE("same seed, same histogram; different seed, different draws") {
    const auto map = default_map();
    const auto fiber = homogeneous(1000.0);
    scan::InstrumentConfig cfg;
    model::SensitivityModel sm;
    model::FpiEtalon et;
    scan::ScanSchedule sched;
    sched.dwell_s = 0.05;
    scan::build_voltages(sched, map);
    const auto a = scan::simulate_histogram(fiber, cfg, sm, et, sched, map, 99, {});
    const auto b = scan::simulate_histogram(fiber, cfg, sm, et, sched, map, 99, {});
    CHECK(a.counts == b.counts);
    const auto c = scan::simulate_histogram(fiber, cfg, sm, et, sched, map, 100, {});
    CHECK(a.counts != c.counts);
}

TEST_CASE("thread count never changes a single count") {
    const auto map = default_map();
    const auto fiber = homogeneous(3000.0);
    scan::InstrumentConfig cfg;
    model::SensitivityModel sm;
    model::FpiEtalon et;
    scan::ScanSchedule sched;
    sched.dwell_s = 0.2;
    scan::build_voltages(sched, map);
    scan::SimulateOptions serial, quad;
    quad.threads = 4;
    const auto a = scan::simulate_histogram(fiber, cfg, sm, et, sched, map, 7, serial);
    const auto b = scan::simulate_histogram(fiber, cfg, sm, et, sched, map, 7, quad);
    CHECK(a.counts == b.counts);
    CHECK(a.step_frequency_mhz == b.step_frequency_mhz);
}

TEST_CASE("histogram validation catches tampering") {
    const auto map = default_map();
    const auto fiber = homogeneous(1000.0);
    scan::InstrumentConfig cfg;
    model::SensitivityModel sm;
    model::FpiEtalon et;
    scan::ScanSchedule sched;
    sched.dwell_s = 0.05;
    scan::build_voltages(sched, map);
    auto hist = scan::simulate_histogram(fiber, cfg, sm, et, sched, map, 1, {});
    CHECK_NOTHROW(scan::validate(hist));
    hist.counts[5] = -1.0;
    CHECK_THROWS_AS(scan::validate(hist), Error);
}

TEST_CASE("instrument validation rejects the impossible") {
    scan::InstrumentConfig cfg;
    cfg.peak_power_w = 0.0;
    CHECK_THROWS_AS(scan::validate(cfg), Error);
    cfg = {};
    cfg.detector_efficiency = 1.5;
    CHECK_THROWS_AS(scan::validate(cfg), Error);
    cfg = {};
    cfg.bin_width_ns = 2.0e5;  // longer than the period
    CHECK_THROWS_AS(scan::validate(cfg), Error);
    cfg = {};
    cfg.noise_rate_cps = 0.0;  // zero background is allowed
    CHECK_NOTHROW(scan::validate(cfg));
}

TEST_CASE("fiber beyond the unambiguous range cannot be simulated") {
    const auto map = default_map();
    const auto fiber = homogeneous(13000.0);  // > 12500 m
    scan::InstrumentConfig cfg;
    model::SensitivityModel sm;
    model::FpiEtalon et;
    scan::ScanSchedule sched;
    scan::build_voltages(sched, map);
    try {
        scan::simulate_histogram(fiber, cfg, sm, et, sched, map, 1, {});
        FAIL("expected ConfigError");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ConfigError);
    }
}

TEST_CASE("entry-rate helper scales the capture coefficient consistently") {
    scan::InstrumentConfig cfg;
    const double cap = scan::capture_for_entry_rate(cfg, 1.0e5);
    CHECK(cap == doctest::Approx(1.0e5 / (3.0e-8 * 0.17)).epsilon(1e-12));
    CHECK(cap == doctest::Approx(cfg.capture_coefficient).epsilon(1e-12));
}
