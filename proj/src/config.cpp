#include "botdr/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "botdr/detail/sha256.hpp"

namespace botdr::io {

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path + "'");
    out << content;
    if (!out) throw Error(ErrorCode::ConfigError, "write failed for '" + path + "'");
}

scan::Sampling sampling_from_string(const std::string& s) {
    if (s == "poisson") return scan::Sampling::poisson;
    if (s == "expected") return scan::Sampling::expected;
    throw Error(ErrorCode::ConfigError, "sampling must be \"poisson\" or \"expected\", got \"" + s + "\"");
}

const char* sampling_to_string(scan::Sampling s) {
    return s == scan::Sampling::poisson ? "poisson" : "expected";
}

const std::set<std::string> kTopLevelKeys = {"seed", "sampling", "threads"};

const std::set<std::string> kSectionKeys = {
    "instrument.pulse_duration_ns", "instrument.peak_power_w", "instrument.rep_rate_khz",
    "instrument.group_velocity_mps", "instrument.detector_efficiency",
    "instrument.noise_rate_cps", "instrument.dead_time_ns", "instrument.fbg_suppression_db",
    "instrument.rayleigh_to_brillouin", "instrument.bin_width_ns",
    "instrument.capture_coefficient", "instrument.capture_entry_rate_cps",
    "sensitivity.nu_ref_mhz", "sensitivity.omega_ref_mhz", "sensitivity.t_ref_c",
    "sensitivity.c_nu_t_mhz_per_c", "sensitivity.c_nu_e_mhz_per_ue",
    "sensitivity.c_w_t_mhz_per_c", "sensitivity.c_w_e_mhz_per_ue", "sensitivity.cond_limit",
    "etalon.omega_fpi_mhz", "etalon.fsr_mhz", "etalon.comb_orders",
    "pzt.up_coeffs_mhz", "pzt.hysteresis_depth_mhz", "pzt.v_min", "pzt.v_max",
    "schedule.n_steps", "schedule.freq_step_mhz", "schedule.center_mhz", "schedule.dwell_s",
    "schedule.branch", "schedule.anchor_mhz",
    "calibration.n_samples", "calibration.noise_multiplicative", "calibration.noise_additive",
    "calibration.min_prominence",
    "retrieval.dead_time_correction", "retrieval.weighted_fit", "retrieval.noise_floor_sigma",
    "retrieval.threads",
};

const std::set<std::string> kSegmentKeys = {"length_m", "temperature_c", "strain_ue",
                                            "attenuation_db_per_km", "amplitude"};

void check_known_keys(const TomlDoc& doc) {
    for (const auto& key : doc.keys()) {
        if (kTopLevelKeys.count(key) || kSectionKeys.count(key)) continue;
        if (key.rfind("fiber.segments.", 0) == 0) {
            const size_t tail = key.rfind('.');
            if (tail != std::string::npos && kSegmentKeys.count(key.substr(tail + 1))) continue;
        }
        throw Error(ErrorCode::ConfigError, doc.origin() + ":" + std::to_string(doc.line_of(key)) +
                                                ": unknown config key '" + key + "'");
    }
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    scan::FiberSegment seg;
    seg.length_m = 10000.0;
    seg.environment = {25.0, 0.0};
    seg.attenuation_db_per_km = 0.2;
    seg.amplitude = 1.0;
    cfg.fiber.segments = {seg};
    return cfg;
}

ExperimentConfig config_from_toml(const TomlDoc& doc) {
    check_known_keys(doc);
    ExperimentConfig cfg = default_config();

    cfg.seed = doc.get_uint("seed", cfg.seed);
    cfg.sampling = sampling_from_string(doc.get_string("sampling", sampling_to_string(cfg.sampling)));
    cfg.sim_threads = static_cast<int>(doc.get_int("threads", cfg.sim_threads));

    auto& in = cfg.instrument;
    in.pulse_duration_ns = doc.get_real("instrument.pulse_duration_ns", in.pulse_duration_ns);
    in.peak_power_w = doc.get_real("instrument.peak_power_w", in.peak_power_w);
    in.rep_rate_khz = doc.get_real("instrument.rep_rate_khz", in.rep_rate_khz);
    in.group_velocity_mps = doc.get_real("instrument.group_velocity_mps", in.group_velocity_mps);
    in.detector_efficiency = doc.get_real("instrument.detector_efficiency", in.detector_efficiency);
    in.noise_rate_cps = doc.get_real("instrument.noise_rate_cps", in.noise_rate_cps);
    in.dead_time_ns = doc.get_real("instrument.dead_time_ns", in.dead_time_ns);
    in.fbg_suppression_db = doc.get_real("instrument.fbg_suppression_db", in.fbg_suppression_db);
    in.rayleigh_to_brillouin = doc.get_real("instrument.rayleigh_to_brillouin", in.rayleigh_to_brillouin);
    in.bin_width_ns = doc.get_real("instrument.bin_width_ns", in.bin_width_ns);
    const bool has_coeff = doc.has("instrument.capture_coefficient");
    const bool has_rate = doc.has("instrument.capture_entry_rate_cps");
    if (has_coeff && has_rate)
        throw Error(ErrorCode::ConfigError,
                    "set either instrument.capture_coefficient or "
                    "instrument.capture_entry_rate_cps, not both");
    if (has_coeff)
        in.capture_coefficient = doc.get_real("instrument.capture_coefficient", 0.0);
    else if (has_rate)
        in.capture_coefficient =
            scan::capture_for_entry_rate(in, doc.get_real("instrument.capture_entry_rate_cps", 0.0));

    auto& sm = cfg.sensitivity;
    sm.nu_ref_mhz = doc.get_real("sensitivity.nu_ref_mhz", sm.nu_ref_mhz);
    sm.omega_ref_mhz = doc.get_real("sensitivity.omega_ref_mhz", sm.omega_ref_mhz);
    sm.t_ref_c = doc.get_real("sensitivity.t_ref_c", sm.t_ref_c);
    sm.c_nu_t_mhz_per_c = doc.get_real("sensitivity.c_nu_t_mhz_per_c", sm.c_nu_t_mhz_per_c);
    sm.c_nu_e_mhz_per_ue = doc.get_real("sensitivity.c_nu_e_mhz_per_ue", sm.c_nu_e_mhz_per_ue);
    sm.c_w_t_mhz_per_c = doc.get_real("sensitivity.c_w_t_mhz_per_c", sm.c_w_t_mhz_per_c);
    sm.c_w_e_mhz_per_ue = doc.get_real("sensitivity.c_w_e_mhz_per_ue", sm.c_w_e_mhz_per_ue);
    sm.cond_limit = doc.get_real("sensitivity.cond_limit", sm.cond_limit);

    auto& et = cfg.etalon;
    et.omega_fpi_mhz = doc.get_real("etalon.omega_fpi_mhz", et.omega_fpi_mhz);
    et.fsr_mhz = doc.get_real("etalon.fsr_mhz", et.fsr_mhz);
    et.comb_orders = static_cast<int>(doc.get_int("etalon.comb_orders", et.comb_orders));

    auto& pz = cfg.pzt;
    if (doc.has("pzt.up_coeffs_mhz")) {
        const auto coeffs = doc.get_real_array("pzt.up_coeffs_mhz");
        if (coeffs.size() != 4)
            throw Error(ErrorCode::ConfigError, "pzt.up_coeffs_mhz must hold exactly 4 numbers");
        std::copy(coeffs.begin(), coeffs.end(), pz.up_coeffs_mhz.begin());
    }
    pz.hysteresis_depth_mhz = doc.get_real("pzt.hysteresis_depth_mhz", pz.hysteresis_depth_mhz);
    pz.v_min = doc.get_real("pzt.v_min", pz.v_min);
    pz.v_max = doc.get_real("pzt.v_max", pz.v_max);

    const size_t n_segments = doc.table_array_size("fiber.segments");
    if (n_segments > 0) {
        cfg.fiber.segments.clear();
        for (size_t i = 0; i < n_segments; ++i) {
            const std::string p = "fiber.segments." + std::to_string(i) + ".";
            scan::FiberSegment seg;
            seg.length_m = doc.require_real(p + "length_m");
            seg.environment.temperature_c = doc.get_real(p + "temperature_c", 25.0);
            seg.environment.strain_ue = doc.get_real(p + "strain_ue", 0.0);
            seg.attenuation_db_per_km = doc.get_real(p + "attenuation_db_per_km", 0.2);
            seg.amplitude = doc.get_real(p + "amplitude", 1.0);
            cfg.fiber.segments.push_back(seg);
        }
    }

    auto& sc = cfg.schedule;
    sc.n_steps = static_cast<int>(doc.get_int("schedule.n_steps", sc.n_steps));
    sc.freq_step_mhz = doc.get_real("schedule.freq_step_mhz", sc.freq_step_mhz);
    sc.center_mhz = doc.get_real("schedule.center_mhz", sc.center_mhz);
    sc.dwell_s = doc.get_real("schedule.dwell_s", sc.dwell_s);
    sc.branch = calib::branch_from_string(doc.get_string("schedule.branch", calib::to_string(sc.branch)));
    sc.anchor_mhz = doc.get_real("schedule.anchor_mhz", sc.anchor_mhz);

    auto& ca = cfg.calibration;
    ca.n_samples = static_cast<int>(doc.get_int("calibration.n_samples", ca.n_samples));
    ca.noise_multiplicative = doc.get_real("calibration.noise_multiplicative", ca.noise_multiplicative);
    ca.noise_additive = doc.get_real("calibration.noise_additive", ca.noise_additive);
    ca.min_prominence = doc.get_real("calibration.min_prominence", ca.min_prominence);

    auto& re = cfg.retrieval;
    re.dead_time_correction = doc.get_bool("retrieval.dead_time_correction", re.dead_time_correction);
    re.weighted_fit = doc.get_bool("retrieval.weighted_fit", re.weighted_fit);
    re.noise_floor_sigma = doc.get_real("retrieval.noise_floor_sigma", re.noise_floor_sigma);
    re.threads = static_cast<int>(doc.get_int("retrieval.threads", re.threads));

    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    return config_from_toml(TomlDoc::parse_file(path));
}

std::string save_config(const ExperimentConfig& cfg) {
    TomlWriter w;
    w.comment("botdr experiment configuration");
    w.kv("seed", cfg.seed);
    w.kv("sampling", sampling_to_string(cfg.sampling));
    /// thread counts are accepted on load but never serialized: they cannot
    /// change any result, so they stay out of the canonical form and the hash

    w.section("instrument");
    const auto& in = cfg.instrument;
    w.kv("pulse_duration_ns", in.pulse_duration_ns);
    w.kv("peak_power_w", in.peak_power_w);
    w.kv("rep_rate_khz", in.rep_rate_khz);
    w.kv("group_velocity_mps", in.group_velocity_mps);
    w.kv("detector_efficiency", in.detector_efficiency);
    w.kv("noise_rate_cps", in.noise_rate_cps);
    w.kv("dead_time_ns", in.dead_time_ns);
    w.kv("fbg_suppression_db", in.fbg_suppression_db);
    w.kv("rayleigh_to_brillouin", in.rayleigh_to_brillouin);
    w.kv("bin_width_ns", in.bin_width_ns);
    w.kv("capture_coefficient", in.capture_coefficient);

    w.section("sensitivity");
    const auto& sm = cfg.sensitivity;
    w.kv("nu_ref_mhz", sm.nu_ref_mhz);
    w.kv("omega_ref_mhz", sm.omega_ref_mhz);
    w.kv("t_ref_c", sm.t_ref_c);
    w.kv("c_nu_t_mhz_per_c", sm.c_nu_t_mhz_per_c);
    w.kv("c_nu_e_mhz_per_ue", sm.c_nu_e_mhz_per_ue);
    w.kv("c_w_t_mhz_per_c", sm.c_w_t_mhz_per_c);
    w.kv("c_w_e_mhz_per_ue", sm.c_w_e_mhz_per_ue);
    w.kv("cond_limit", sm.cond_limit);

    w.section("etalon");
    w.kv("omega_fpi_mhz", cfg.etalon.omega_fpi_mhz);
    w.kv("fsr_mhz", cfg.etalon.fsr_mhz);
    w.kv("comb_orders", cfg.etalon.comb_orders);

    w.section("pzt");
    w.kv("up_coeffs_mhz", std::vector<double>(cfg.pzt.up_coeffs_mhz.begin(), cfg.pzt.up_coeffs_mhz.end()));
    w.kv("hysteresis_depth_mhz", cfg.pzt.hysteresis_depth_mhz);
    w.kv("v_min", cfg.pzt.v_min);
    w.kv("v_max", cfg.pzt.v_max);

    w.section("schedule");
    const auto& sc = cfg.schedule;
    w.kv("n_steps", sc.n_steps);
    w.kv("freq_step_mhz", sc.freq_step_mhz);
    w.kv("center_mhz", sc.center_mhz);
    w.kv("dwell_s", sc.dwell_s);
    w.kv("branch", calib::to_string(sc.branch));
    w.kv("anchor_mhz", sc.anchor_mhz);

    w.section("calibration");
    const auto& ca = cfg.calibration;
    w.kv("n_samples", ca.n_samples);
    w.kv("noise_multiplicative", ca.noise_multiplicative);
    w.kv("noise_additive", ca.noise_additive);
    w.kv("min_prominence", ca.min_prominence);

    w.section("retrieval");
    const auto& re = cfg.retrieval;
    w.kv("dead_time_correction", re.dead_time_correction);
    w.kv("weighted_fit", re.weighted_fit);
    w.kv("noise_floor_sigma", re.noise_floor_sigma);

    for (const auto& seg : cfg.fiber.segments) {
        w.array_section("fiber.segments");
        w.kv("length_m", seg.length_m);
        w.kv("temperature_c", seg.environment.temperature_c);
        w.kv("strain_ue", seg.environment.strain_ue);
        w.kv("attenuation_db_per_km", seg.attenuation_db_per_km);
        w.kv("amplitude", seg.amplitude);
    }
    return w.str();
}

void write_config(const ExperimentConfig& cfg, const std::string& path) {
    write_file(path, save_config(cfg));
}

std::string config_hash(const ExperimentConfig& cfg) {
    return detail::Sha256::hash_hex(save_config(cfg));
}

void validate(const ExperimentConfig& cfg) {
    scan::validate(cfg.instrument);
    model::validate(cfg.sensitivity);
    model::validate(cfg.etalon);
    calib::validate(cfg.pzt);
    scan::validate(cfg.fiber);

    const auto& sc = cfg.schedule;
    if (sc.n_steps < 2) throw Error(ErrorCode::ConfigError, "schedule.n_steps must be at least 2");
    if (!(sc.freq_step_mhz > 0.0))
        throw Error(ErrorCode::ConfigError, "schedule.freq_step_mhz must be positive");
    if (!(sc.center_mhz > 0.0))
        throw Error(ErrorCode::ConfigError, "schedule.center_mhz must be positive");
    if (!(sc.dwell_s > 0.0)) throw Error(ErrorCode::ConfigError, "schedule.dwell_s must be positive");
    if (!(sc.anchor_mhz >= 0.0))
        throw Error(ErrorCode::ConfigError, "schedule.anchor_mhz must be non-negative");

    const double round_trip_ns =
        2.0 * cfg.fiber.total_length_m() / cfg.instrument.group_velocity_mps * 1.0e9;
    if (round_trip_ns > cfg.instrument.rep_period_ns())
        throw Error(ErrorCode::ConfigError,
                    "fiber length " + std::to_string(cfg.fiber.total_length_m()) +
                        " m exceeds the unambiguous range " +
                        std::to_string(cfg.instrument.unambiguous_range_m()) + " m");

    const auto& ca = cfg.calibration;
    if (ca.n_samples < 64)
        throw Error(ErrorCode::ConfigError, "calibration.n_samples must be at least 64");
    if (!(ca.min_prominence > 0.0 && ca.min_prominence < 1.0))
        throw Error(ErrorCode::ConfigError, "calibration.min_prominence must lie in (0, 1)");
    if (ca.noise_multiplicative < 0.0 || ca.noise_additive < 0.0)
        throw Error(ErrorCode::ConfigError, "calibration noise levels must be non-negative");

    const auto& re = cfg.retrieval;
    if (!(re.noise_floor_sigma > 0.0))
        throw Error(ErrorCode::ConfigError, "retrieval.noise_floor_sigma must be positive");
    if (re.threads < 0) throw Error(ErrorCode::ConfigError, "retrieval.threads must be >= 0");
    if (cfg.sim_threads < 0) throw Error(ErrorCode::ConfigError, "threads must be >= 0");
}

calib::HysteresisMap load_map(const std::string& path) {
    const TomlDoc doc = TomlDoc::parse_file(path);
    calib::HysteresisMap map;
    map.fsr_mhz = doc.require_real("fsr_mhz");
    if (!(map.fsr_mhz > 0.0))
        throw Error(ErrorCode::ValidationError, path + ": fsr_mhz must be positive");
    bool any = false;
    for (const char* name : {"up", "down"}) {
        const std::string p = std::string(name) + ".";
        if (!doc.has(p + "coeffs_mhz")) continue;
        calib::BranchFit fit;
        const auto coeffs = doc.get_real_array(p + "coeffs_mhz");
        if (coeffs.size() != 4)
            throw Error(ErrorCode::ParseError,
                        path + ": " + name + ".coeffs_mhz must hold exactly 4 numbers");
        std::copy(coeffs.begin(), coeffs.end(), fit.coeffs_mhz.begin());
        fit.v_min = doc.require_real(p + "v_min");
        fit.v_max = doc.require_real(p + "v_max");
        fit.max_residual_mhz = doc.get_real(p + "max_residual_mhz", 0.0);
        fit.n_peaks = static_cast<int>(doc.get_int(p + "n_peaks", 0));
        calib::validate(fit);
        if (std::string(name) == "up")
            map.up = fit;
        else
            map.down = fit;
        any = true;
    }
    if (!any)
        throw Error(ErrorCode::ParseError, path + ": map contains neither an up nor a down branch");
    return map;
}

std::string save_map(const calib::HysteresisMap& map) {
    TomlWriter w;
    w.comment("botdr hysteresis calibration map (frequencies relative to the order-0 peak)");
    w.kv("fsr_mhz", map.fsr_mhz);
    for (const char* name : {"up", "down"}) {
        const auto& opt = std::string(name) == "up" ? map.up : map.down;
        if (!opt) continue;
        w.section(name);
        w.kv("coeffs_mhz", std::vector<double>(opt->coeffs_mhz.begin(), opt->coeffs_mhz.end()));
        w.kv("v_min", opt->v_min);
        w.kv("v_max", opt->v_max);
        w.kv("max_residual_mhz", opt->max_residual_mhz);
        w.kv("n_peaks", opt->n_peaks);
    }
    return w.str();
}

void write_map(const calib::HysteresisMap& map, const std::string& path) {
    write_file(path, save_map(map));
}

}  // namespace botdr::io
