#include "botdr/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include "botdr/rng.hpp"

namespace botdr::run {

namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error(ErrorCode::ConfigError, "write failed for '" + path.string() + "'");
}

calib::HysteresisMap build_map_from_config(const io::ExperimentConfig& cfg,
                                           calib::CalibrationTrace* trace_up,
                                           calib::CalibrationTrace* trace_down) {
    calib::TraceNoise noise{cfg.calibration.noise_multiplicative, cfg.calibration.noise_additive};
    calib::HysteresisMap map;
    map.fsr_mhz = cfg.etalon.fsr_mhz;
    for (const auto branch : {calib::Branch::up, calib::Branch::down}) {
        const auto trace = calib::simulate_calibration_trace(
            cfg.pzt, cfg.etalon, branch, cfg.calibration.n_samples, noise,
            trace_seed(cfg.seed, branch));
        const auto fitted =
            calib::calibrate_branch(trace, cfg.etalon.fsr_mhz, cfg.calibration.min_prominence);
        if (branch == calib::Branch::up) {
            map.up = fitted.up;
            if (trace_up) *trace_up = trace;
        } else {
            map.down = fitted.down;
            if (trace_down) *trace_down = trace;
        }
    }
    return map;
}

SimulationResult simulate_with_map(const io::ExperimentConfig& cfg, calib::HysteresisMap map,
                                   calib::CalibrationTrace trace_up,
                                   calib::CalibrationTrace trace_down) {
    SimulationResult result;
    result.map = std::move(map);
    result.trace_up = std::move(trace_up);
    result.trace_down = std::move(trace_down);
    result.schedule = cfg.schedule;
    scan::build_voltages(result.schedule, result.map);
    scan::SimulateOptions options;
    options.sampling = cfg.sampling;
    options.threads = cfg.sim_threads;
    result.hist = scan::simulate_histogram(cfg.fiber, cfg.instrument, cfg.sensitivity, cfg.etalon,
                                           result.schedule, result.map, cfg.seed, options);
    result.hist.config_hash = io::config_hash(cfg);
    return result;
}

/// Mean and root-mean-square error of (estimate - truth) pairs.
void bias_rmse(const std::vector<double>& errors, double* bias, double* rmse) {
    *bias = 0.0;
    *rmse = 0.0;
    if (errors.empty()) return;
    double sum = 0.0, sq = 0.0;
    for (double e : errors) {
        sum += e;
        sq += e * e;
    }
    *bias = sum / errors.size();
    *rmse = std::sqrt(sq / errors.size());
}

std::string iso_timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::uint64_t trace_seed(std::uint64_t seed, calib::Branch branch) {
    CellRng rng(seed, 0xCA11, branch == calib::Branch::up ? 0 : 1);
    return rng.next_u64();
}

SimulationResult simulate_experiment(const io::ExperimentConfig& cfg) {
    io::validate(cfg);
    calib::CalibrationTrace up, down;
    auto map = build_map_from_config(cfg, &up, &down);
    return simulate_with_map(cfg, std::move(map), std::move(up), std::move(down));
}

SimulationResult simulate_experiment(const io::ExperimentConfig& cfg,
                                     const calib::HysteresisMap& map) {
    io::validate(cfg);
    return simulate_with_map(cfg, map, {}, {});
}

retrieval::RetrievedProfile retrieve_experiment(const scan::ScanHistogram& hist,
                                                const calib::HysteresisMap& map,
                                                const io::ExperimentConfig& cfg) {
    io::validate(cfg);
    scan::ScanSchedule schedule = cfg.schedule;
    schedule.voltages = hist.voltages;  // the scan that actually ran
    schedule.branch = hist.branch;
    retrieval::RetrievalOptions options;
    options.fiber_length_m = cfg.fiber.total_length_m();
    options.dead_time_correction = cfg.retrieval.dead_time_correction;
    options.weighted_fit = cfg.retrieval.weighted_fit;
    options.noise_floor_sigma = cfg.retrieval.noise_floor_sigma;
    options.threads = cfg.retrieval.threads;
    auto profile =
        retrieval::retrieve_profile(hist, map, schedule, cfg.etalon, cfg.sensitivity, options);
    profile.config_hash = hist.config_hash;
    profile.seed = hist.seed;
    return profile;
}

double estimate_boundary_m(const retrieval::RetrievedProfile& profile, double z_lo, double z_hi) {
    std::vector<double> z, nu;
    for (const auto& r : profile.bins) {
        if (r.flags != 0) continue;
        if (r.range_m < z_lo || r.range_m > z_hi) continue;
        z.push_back(r.range_m);
        nu.push_back(r.nu_b_mhz);
    }
    const size_t n = z.size();
    if (n < 2) throw Error(ErrorCode::InsufficientPoints, "change point needs at least 2 clean bins");
    // prefix sums make every split's two plateau SSEs O(1)
    std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
        s1[i + 1] = s1[i] + nu[i];
        s2[i + 1] = s2[i] + nu[i] * nu[i];
    }
    auto sse = [&](size_t a, size_t b) {  // bins [a, b)
        const double cnt = static_cast<double>(b - a);
        const double sum = s1[b] - s1[a];
        return (s2[b] - s2[a]) - sum * sum / cnt;
    };
    size_t best_k = 1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (size_t k = 1; k < n; ++k) {
        const double cost = sse(0, k) + sse(k, n);
        if (cost < best_cost) {
            best_cost = cost;
            best_k = k;
        }
    }
    return 0.5 * (z[best_k - 1] + z[best_k]);
}

RoundtripSummary summarize_roundtrip(const io::ExperimentConfig& cfg,
                                     const scan::ScanHistogram& hist,
                                     const retrieval::RetrievedProfile& profile) {
    RoundtripSummary summary;
    const double w = cfg.instrument.smear_width_m();
    const double bin_len =
        scan::time_to_range(hist.bin_width_ns, hist.group_velocity_mps);
    const double fiber_len = cfg.fiber.total_length_m();

    std::vector<double> edges{0.0};
    for (const auto& seg : cfg.fiber.segments) edges.push_back(edges.back() + seg.length_m);

    for (const auto& r : profile.bins) {
        const double z1 = r.bin * bin_len;
        if (z1 >= fiber_len) continue;  // beyond-fiber bins score nothing
        if (r.flags == 0)
            ++summary.n_bins_clean;
        else
            ++summary.n_bins_flagged;
    }

    for (size_t i = 0; i < cfg.fiber.segments.size(); ++i) {
        const auto& seg = cfg.fiber.segments[i];
        SegmentSummary s;
        s.index = static_cast<int>(i);
        s.z_start_m = edges[i];
        s.z_end_m = edges[i + 1];
        s.temperature_true_c = seg.environment.temperature_c;
        s.strain_true_ue = seg.environment.strain_ue;
        const auto truth_line = model::line_from_environment(cfg.sensitivity, seg.environment);
        std::vector<double> et, ee, en, sigmas;
        for (const auto& r : profile.bins) {
            if (r.flags != 0) continue;
            const double z1 = r.bin * bin_len;
            const double z2 = z1 + bin_len;
            if (z1 - w < s.z_start_m || z2 > s.z_end_m) continue;  // touches a neighbour
            et.push_back(r.temperature_c - seg.environment.temperature_c);
            ee.push_back(r.strain_ue - seg.environment.strain_ue);
            en.push_back(r.nu_b_mhz - truth_line.nu_b_mhz);
            sigmas.push_back(r.sigma_t_c);
        }
        s.n_clean_bins = static_cast<int>(et.size());
        bias_rmse(et, &s.t_bias_c, &s.t_rmse_c);
        bias_rmse(ee, &s.strain_bias_ue, &s.strain_rmse_ue);
        bias_rmse(en, &s.nu_bias_mhz, &s.nu_rmse_mhz);
        if (!sigmas.empty()) {
            double sum = 0.0;
            for (double x : sigmas) sum += x;
            s.mean_sigma_t_c = sum / sigmas.size();
        }
        summary.segments.push_back(s);
    }

    for (size_t i = 0; i + 1 < cfg.fiber.segments.size(); ++i) {
        BoundarySummary b;
        b.z_true_m = edges[i + 1];
        const double z_lo = 0.5 * (edges[i] + edges[i + 1]);
        const double z_hi = 0.5 * (edges[i + 1] + edges[i + 2]);
        b.z_estimated_m = estimate_boundary_m(profile, z_lo, z_hi);
        b.error_m = b.z_estimated_m - b.z_true_m;
        summary.boundaries.push_back(b);
    }
    return summary;
}

std::string summary_to_toml(const io::ExperimentConfig& cfg, const RoundtripSummary& summary) {
    io::TomlWriter w;
    w.comment("closed-loop score: retrieval against the configured truth");
    w.kv("config_hash", io::config_hash(cfg));
    w.kv("seed", cfg.seed);
    w.kv("n_bins_clean", summary.n_bins_clean);
    w.kv("n_bins_flagged", summary.n_bins_flagged);
    for (const auto& s : summary.segments) {
        w.array_section("segments");
        w.kv("index", s.index);
        w.kv("z_start_m", s.z_start_m);
        w.kv("z_end_m", s.z_end_m);
        w.kv("temperature_true_c", s.temperature_true_c);
        w.kv("strain_true_ue", s.strain_true_ue);
        w.kv("n_clean_bins", s.n_clean_bins);
        w.kv("t_bias_c", s.t_bias_c);
        w.kv("t_rmse_c", s.t_rmse_c);
        w.kv("strain_bias_ue", s.strain_bias_ue);
        w.kv("strain_rmse_ue", s.strain_rmse_ue);
        w.kv("nu_bias_mhz", s.nu_bias_mhz);
        w.kv("nu_rmse_mhz", s.nu_rmse_mhz);
        w.kv("mean_sigma_t_c", s.mean_sigma_t_c);
    }
    for (const auto& b : summary.boundaries) {
        w.array_section("boundaries");
        w.kv("z_true_m", b.z_true_m);
        w.kv("z_estimated_m", b.z_estimated_m);
        w.kv("error_m", b.error_m);
    }
    return w.str();
}

io::ExperimentConfig load_config_for_cli(const std::string& path) {
    io::ExperimentConfig cfg = io::load_config(path);
    if (const char* env = std::getenv("BOTDR_SEED")) {
        const std::string s = env;
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw Error(ErrorCode::ConfigError,
                        "BOTDR_SEED must be a decimal unsigned integer, got \"" + s + "\"");
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (errno == ERANGE || end != s.c_str() + s.size())
            throw Error(ErrorCode::ConfigError, "BOTDR_SEED out of range: \"" + s + "\"");
        cfg.seed = v;
    }
    return cfg;
}

void cli_calibrate(const std::string& trace_path, const std::string& branch_name,
                   const std::string& out_path, double fsr_mhz, double min_prominence) {
    const auto branch = calib::branch_from_string(branch_name);
    const auto trace = io::read_trace(trace_path);
    if (trace.branch != branch)
        throw Error(ErrorCode::BranchMismatch, "trace file records branch '" +
                                                   std::string(calib::to_string(trace.branch)) +
                                                   "' but --branch says '" + branch_name + "'");
    const auto map = calib::calibrate_branch(trace, fsr_mhz, min_prominence);
    io::write_map(map, out_path);
}

void cli_simulate(const std::string& config_path, const std::string& out_path,
                  const std::string& cal_out_path, const std::string& cal_in_path) {
    const auto cfg = load_config_for_cli(config_path);
    SimulationResult result;
    if (!cal_in_path.empty()) {
        result = simulate_experiment(cfg, io::load_map(cal_in_path));
    } else {
        result = simulate_experiment(cfg);
    }
    io::write_histogram(result.hist, out_path);
    // retrieval needs the same map the scan was driven with, so persist it
    const std::string cal_path = cal_out_path.empty() ? out_path + ".cal.toml" : cal_out_path;
    io::write_map(result.map, cal_path);
}

void cli_retrieve(const std::string& hist_path, const std::string& cal_path,
                  const std::string& config_path, const std::string& out_path) {
    const auto cfg = load_config_for_cli(config_path);
    const auto hist = io::read_histogram(hist_path);
    const auto map = io::load_map(cal_path);
    const auto profile = retrieve_experiment(hist, map, cfg);
    io::write_profile(profile, out_path);
}

void cli_roundtrip(const std::string& config_path, const std::string& out_dir) {
    const auto cfg = load_config_for_cli(config_path);
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::ConfigError, "cannot create '" + out_dir + "': " + ec.message());

    const auto sim = simulate_experiment(cfg);
    const auto profile = retrieve_experiment(sim.hist, sim.map, cfg);
    const auto summary = summarize_roundtrip(cfg, sim.hist, profile);

    io::write_config(cfg, (dir / "config.toml").string());
    io::write_trace(sim.trace_up, (dir / "trace_up.csv").string());
    io::write_trace(sim.trace_down, (dir / "trace_down.csv").string());
    io::write_map(sim.map, (dir / "cal.toml").string());
    io::write_histogram(sim.hist, (dir / "histogram.csv").string());
    io::write_profile(profile, (dir / "profile.csv").string());
    write_text(dir / "summary.toml", summary_to_toml(cfg, summary));

    io::TomlWriter m;
    m.comment("run manifest");
    m.kv("tool", "botdr");
    m.kv("version", "0.1.0");
    m.kv("created_utc", iso_timestamp_utc());
    m.kv("config_hash", io::config_hash(cfg));
    m.kv("seed", cfg.seed);
    const std::vector<std::string> outputs = {"config.toml",    "trace_up.csv", "trace_down.csv",
                                              "cal.toml",       "histogram.csv", "profile.csv",
                                              "summary.toml"};
    std::string joined;
    for (size_t i = 0; i < outputs.size(); ++i) {
        if (i) joined += ", ";
        joined += '"' + outputs[i] + '"';
    }
    m.raw("outputs = [" + joined + "]");
    write_text(dir / "manifest.toml", m.str());
}

}  // namespace botdr::run
