#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "botdr/config.hpp"
#include "botdr/csv.hpp"
#include "botdr/errors.hpp"
#include "botdr/toml.hpp"
#include "doctest.h"

using namespace botdr;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path(name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

/// Expect `expr` to throw Error carrying a specific code.
#define CHECK_ERROR_CODE(expr, expected)                  \
    do {                                                  \
        try {                                             \
            expr;                                         \
            FAIL("expected " #expected " from " #expr);   \
        } catch (const Error& e_) {                       \
            CHECK(e_.code() == ErrorCode::expected);      \
        }                                                 \
    } while (0)

TEST_CASE("toml parser handles the subset we emit") {
    const char* text =
        "seed = 42\n"
        "label = \"hello world\"\n"
        "ratio = 2.5\n"
        "flag = true\n"
        "coeffs = [1.0, -2.0, 3.5]\n"
        "\n"
        "[alpha]\n"
        "x = 1\n"
        "y.z = 7.25\n"
        "\n"
        "[[items]]\n"
        "v = 10\n"
        "[[items]]\n"
        "v = 20\n";
    auto doc = io::TomlDoc::parse_string(text, "test.toml");
    CHECK(doc.get_uint("seed", 0) == 42);
    CHECK(doc.get_string("label", "") == "hello world");
    CHECK(doc.get_real("ratio", 0.0) == 2.5);
    CHECK(doc.get_bool("flag", false));
    auto arr = doc.get_real_array("coeffs");
    REQUIRE(arr.size() == 3);
    CHECK(arr[1] == -2.0);
    CHECK(doc.get_int("alpha.x", 0) == 1);
    CHECK(doc.get_real("alpha.y.z", 0.0) == 7.25);
    CHECK(doc.table_array_size("items") == 2);
    CHECK(doc.get_int("items.0.v", 0) == 10);
    CHECK(doc.get_int("items.1.v", 0) == 20);
    // integers promote to reals, never the reverse
    CHECK(doc.get_real("seed", 0.0) == 42.0);
    CHECK_ERROR_CODE((void)doc.get_int("ratio", 0), ParseError);
    // fallbacks for absent keys
    CHECK(doc.get_real("absent", -1.5) == -1.5);
    CHECK_FALSE(doc.has("absent"));
}

TEST_CASE("toml parse errors carry the origin and line") {
    try {
        (void)io::TomlDoc::parse_string("a = 1\nb = 2\nc = = broken\n", "bad.toml");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bad.toml") != std::string::npos);
        CHECK(msg.find(":3") != std::string::npos);
    }
    CHECK_ERROR_CODE((void)io::TomlDoc::parse_string("[unterminated\n", "x"), ParseError);
    CHECK_ERROR_CODE((void)io::TomlDoc::parse_string("k = \"no close\n", "x"), ParseError);
}

TEST_CASE("get_uint rejects negative values") {
    auto doc = io::TomlDoc::parse_string("n = -3\n", "neg.toml");
    CHECK_ERROR_CODE((void)doc.get_uint("n", 0), ParseError);
}

TEST_CASE("empty config equals the documented defaults") {
    auto doc = io::TomlDoc::parse_string("", "empty.toml");
    auto cfg = io::config_from_toml(doc);
    CHECK(io::save_config(cfg) == io::save_config(io::default_config()));
    CHECK(io::config_hash(cfg) == io::config_hash(io::default_config()));
}

TEST_CASE("config serialization is a fixed point after one round trip") {
    auto cfg = io::default_config();
    cfg.seed = 987654321;
    cfg.instrument.pulse_duration_ns = 200.0;
    cfg.instrument.bin_width_ns = 200.0;
    cfg.fiber.segments.clear();
    cfg.fiber.segments.push_back({2500.0, {31.5, 120.0}, 0.19, 1.0});
    cfg.fiber.segments.push_back({4000.0, {24.0, 0.0}, 0.21, 0.9});
    cfg.schedule.center_mhz = 10870.0;
    cfg.retrieval.weighted_fit = true;

    const std::string once = io::save_config(cfg);
    auto reloaded = io::config_from_toml(io::TomlDoc::parse_string(once, "rt.toml"));
    const std::string twice = io::save_config(reloaded);
    CHECK(once == twice);
    CHECK(io::config_hash(cfg) == io::config_hash(reloaded));
}

TEST_CASE("config hash is stable and sensitive") {
    auto cfg = io::default_config();
    const std::string h = io::config_hash(cfg);
    CHECK(h.size() == 64);
    CHECK(h == io::config_hash(cfg));  // deterministic
    auto other = cfg;
    other.seed += 1;
    CHECK(io::config_hash(other) != h);
    other = cfg;
    other.fiber.segments[0].environment.temperature_c += 0.001;
    CHECK(io::config_hash(other) != h);
}

TEST_CASE("unknown config keys are rejected with their line") {
    try {
        auto doc = io::TomlDoc::parse_string("seed = 1\n\n[instrument]\npulse_wdith_ns = 300\n",
                                             "typo.toml");
        (void)io::config_from_toml(doc);
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("pulse_wdith_ns") != std::string::npos);
        CHECK(msg.find("typo.toml") != std::string::npos);
        CHECK(msg.find(":4") != std::string::npos);
    }
}

TEST_CASE("capture coefficient can be given as an entry rate") {
    // 1e5 counts/s at the fiber entry is exactly the default coefficient.
    auto doc = io::TomlDoc::parse_string(
        "[instrument]\ncapture_entry_rate_cps = 1.0e5\n", "rate.toml");
    auto cfg = io::config_from_toml(doc);
    CHECK(cfg.instrument.capture_coefficient ==
          doctest::Approx(io::default_config().instrument.capture_coefficient).epsilon(1e-12));

    // both spellings at once is ambiguous
    auto both = io::TomlDoc::parse_string(
        "[instrument]\ncapture_coefficient = 1.0\ncapture_entry_rate_cps = 1.0e5\n", "both.toml");
    CHECK_ERROR_CODE((void)io::config_from_toml(both), ConfigError);
}

TEST_CASE("configs that cannot be measured are rejected") {
    // fiber longer than the unambiguous range of the pulse train
    auto doc = io::TomlDoc::parse_string(
        "[[fiber.segments]]\nlength_m = 13000.0\n", "long.toml");
    CHECK_ERROR_CODE((void)io::config_from_toml(doc), ConfigError);

    // segment without a length
    auto doc2 = io::TomlDoc::parse_string(
        "[[fiber.segments]]\ntemperature_c = 25.0\n", "nolen.toml");
    CHECK_ERROR_CODE((void)io::config_from_toml(doc2), ParseError);
}

TEST_CASE("histogram csv round trips exactly") {
    scan::ScanHistogram h;
    h.n_steps = 3;
    h.n_bins = 4;
    h.counts = {0, 1, 2, 3, 10, 11, 12, 13, 7, 0, 5, 123456};
    h.step_frequency_mhz = {10800.0, 10850.5, 10901.25};
    h.voltages = {8.125, 8.5, 8.875};
    h.branch = calib::Branch::down;
    h.sampling = scan::Sampling::expected;
    h.dwell_s = 0.5;
    h.bin_width_ns = 300.0;
    h.rep_period_ns = 125000.0;
    h.group_velocity_mps = 2.0e8;
    h.pulse_duration_ns = 300.0;
    h.dead_time_ns = 23.0;
    h.seed = 555;
    h.config_hash = "deadbeef";

    TempFile f("hist_io_test.csv");
    io::write_histogram(h, f.path);
    auto back = io::read_histogram(f.path);
    CHECK(back.n_steps == h.n_steps);
    CHECK(back.n_bins == h.n_bins);
    CHECK(back.counts == h.counts);
    CHECK(back.step_frequency_mhz == h.step_frequency_mhz);
    CHECK(back.voltages == h.voltages);
    CHECK(back.branch == h.branch);
    CHECK(back.sampling == h.sampling);
    CHECK(back.dwell_s == h.dwell_s);
    CHECK(back.seed == h.seed);
    CHECK(back.config_hash == h.config_hash);
    // expected-value mode stores non-integral counts exactly too
    h.sampling = scan::Sampling::expected;
    h.counts[5] = 11.340000000000003;
    io::write_histogram(h, f.path);
    CHECK(io::read_histogram(f.path).counts[5] == 11.340000000000003);
}

TEST_CASE("readers reject a foreign schema token") {
    scan::ScanHistogram h;
    h.n_steps = 1;
    h.n_bins = 1;
    h.counts = {4};
    h.step_frequency_mhz = {10850.0};
    h.voltages = {8.0};
    TempFile f("hist_schema_test.csv");
    io::write_histogram(h, f.path);
    std::string text = slurp(f.path);
    auto pos = text.find("botdr-histogram-v1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("botdr-histogram-v1").size(), "botdr-histogram-v9");
    {
        std::ofstream out(f.path, std::ios::binary);
        out << text;
    }
    CHECK_ERROR_CODE((void)io::read_histogram(f.path), ParseError);
    // a profile reader fed a histogram file refuses as well
    io::write_histogram(h, f.path);
    CHECK_ERROR_CODE((void)io::read_profile(f.path), ParseError);
}

TEST_CASE("profile csv keeps NaNs and flags") {
    retrieval::RetrievedProfile p;
    p.config_hash = "cafe01";
    p.seed = 99;
    p.background_per_step = {1.25, 1.5};
    retrieval::BinResult good;
    good.bin = 0;
    good.range_m = 15.0;
    good.amplitude = 812.5;
    good.nu_b_mhz = 10851.75;
    good.sigma_nu_mhz = 0.375;
    good.omega_b_mhz = 15.5;
    good.sigma_omega_mhz = 0.5;
    good.temperature_c = 26.25;
    good.sigma_t_c = 0.4;
    good.strain_ue = -12.5;
    good.sigma_strain_ue = 11.0;
    good.flags = 0;
    good.n_iter = 9;
    retrieval::BinResult bad;
    bad.bin = 1;
    bad.range_m = 45.0;
    bad.amplitude = std::nan("");
    bad.nu_b_mhz = std::nan("");
    bad.temperature_c = std::nan("");
    bad.flags = retrieval::flag_noise_only | retrieval::flag_beyond_fiber;
    p.bins = {good, bad};

    TempFile f("profile_io_test.csv");
    io::write_profile(p, f.path);
    auto back = io::read_profile(f.path);
    REQUIRE(back.bins.size() == 2);
    CHECK(back.background_per_step == p.background_per_step);
    CHECK(back.bins[0].nu_b_mhz == good.nu_b_mhz);
    CHECK(back.bins[0].strain_ue == good.strain_ue);
    CHECK(back.bins[0].n_iter == 9);
    CHECK(back.bins[0].flags == 0);
    CHECK(std::isnan(back.bins[1].nu_b_mhz));
    CHECK(std::isnan(back.bins[1].temperature_c));
    CHECK(back.bins[1].flags == (retrieval::flag_noise_only | retrieval::flag_beyond_fiber));
    CHECK(back.seed == 99);
    CHECK(back.config_hash == "cafe01");
}

TEST_CASE("trace csv round trips") {
    calib::CalibrationTrace t;
    t.branch = calib::Branch::down;
    for (int i = 0; i < 50; ++i) {
        t.voltage_v.push_back(70.0 - i * 0.5);
        t.power.push_back(0.25 + 0.01 * i);
    }
    TempFile f("trace_io_test.csv");
    io::write_trace(t, f.path);
    auto back = io::read_trace(f.path);
    CHECK(back.branch == calib::Branch::down);
    CHECK(back.voltage_v == t.voltage_v);
    CHECK(back.power == t.power);
}

TEST_CASE("calibration map toml survives load/save") {
    // a small but valid two-branch map built by hand
    calib::HysteresisMap map;
    map.fsr_mhz = 4020.0;
    calib::BranchFit up;
    up.coeffs_mhz = {-500.0, 350.0, 0.5, 0.002};
    up.v_min = 0.0;
    up.v_max = 70.0;
    up.n_peaks = 7;
    up.max_residual_mhz = 0.01;
    calib::BranchFit down = up;
    down.coeffs_mhz = {-480.0, 352.0, 0.49, 0.00205};
    map.up = up;
    map.down = down;

    TempFile f("map_io_test.toml");
    io::write_map(map, f.path);
    auto back = io::load_map(f.path);
    REQUIRE(back.up.has_value());
    REQUIRE(back.down.has_value());
    CHECK(back.fsr_mhz == map.fsr_mhz);
    CHECK(back.up->coeffs_mhz == map.up->coeffs_mhz);
    CHECK(back.down->coeffs_mhz == map.down->coeffs_mhz);
    CHECK(io::save_map(back) == io::save_map(map));
    // same voltage maps to the same frequency after the round trip
    CHECK(back.voltage_to_frequency(calib::Branch::up, 35.0) ==
          map.voltage_to_frequency(calib::Branch::up, 35.0));
}

TEST_CASE("real formatting is shortest and exact") {
    for (double v : {0.1, 1.0 / 3.0, 12345.6789, 1e-300, -2.5e17, 0.0,
                     10850.123456789, 2.0e8}) {
        const std::string s = io::TomlWriter::format_real(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(io::TomlWriter::format_real(0.1) == "0.1");
    CHECK(io::TomlWriter::format_real(2.0) == "2.0");  // stays a TOML float
}
