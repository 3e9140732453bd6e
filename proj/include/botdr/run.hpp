#pragma once

// End-to-end orchestration shared by the CLI and the system tests: synthesize
// calibration sweeps, fit the map, run the forward model, run retrieval, and
// score a closed-loop run against the configured truth.

#include <cstdint>
#include <string>
#include <vector>

#include "botdr/config.hpp"
#include "botdr/csv.hpp"

namespace botdr::run {

/// Sub-seed for a synthetic calibration sweep so sweep noise and photon
/// counting never share a stream.
std::uint64_t trace_seed(std::uint64_t seed, calib::Branch branch);

struct SimulationResult {
    scan::ScanHistogram hist;
    calib::HysteresisMap map;
    scan::ScanSchedule schedule;  ///< with voltages resolved against the map
    calib::CalibrationTrace trace_up;
    calib::CalibrationTrace trace_down;
};

/// Self-calibrating forward run: sweep both branches, fit the map, resolve
/// the schedule voltages, simulate.  The optional external map skips the
/// synthetic sweeps (its traces stay empty then).
SimulationResult simulate_experiment(const io::ExperimentConfig& cfg);
SimulationResult simulate_experiment(const io::ExperimentConfig& cfg,
                                     const calib::HysteresisMap& map);

retrieval::RetrievedProfile retrieve_experiment(const scan::ScanHistogram& hist,
                                                const calib::HysteresisMap& map,
                                                const io::ExperimentConfig& cfg);

/// Truth-vs-retrieval statistics over the bins whose smeared footprint lies
/// entirely inside one segment.
struct SegmentSummary {
    int index = 0;
    double z_start_m = 0.0;
    double z_end_m = 0.0;
    double temperature_true_c = 0.0;
    double strain_true_ue = 0.0;
    int n_clean_bins = 0;
    double t_bias_c = 0.0;
    double t_rmse_c = 0.0;
    double strain_bias_ue = 0.0;
    double strain_rmse_ue = 0.0;
    double nu_bias_mhz = 0.0;
    double nu_rmse_mhz = 0.0;
    double mean_sigma_t_c = 0.0;
};

struct BoundarySummary {
    double z_true_m = 0.0;
    double z_estimated_m = 0.0;
    double error_m = 0.0;
};

struct RoundtripSummary {
    std::vector<SegmentSummary> segments;
    std::vector<BoundarySummary> boundaries;
    int n_bins_clean = 0;    ///< flag-free bins inside the fiber
    int n_bins_flagged = 0;  ///< in-fiber bins carrying any flag
};

/// Two-plateau change point on the retrieved frequency series restricted to
/// clean bins with centers in [z_lo, z_hi]; returns the estimated edge in m.
/// Throws InsufficientPoints when either plateau would be empty.
double estimate_boundary_m(const retrieval::RetrievedProfile& profile, double z_lo, double z_hi);

RoundtripSummary summarize_roundtrip(const io::ExperimentConfig& cfg,
                                     const scan::ScanHistogram& hist,
                                     const retrieval::RetrievedProfile& profile);

std::string summary_to_toml(const io::ExperimentConfig& cfg, const RoundtripSummary& summary);

/// Config loading as the CLI sees it: BOTDR_SEED (a strict decimal uint64)
/// overrides the file's seed when set.
io::ExperimentConfig load_config_for_cli(const std::string& path);

// File-level entry points behind the subcommands.
void cli_calibrate(const std::string& trace_path, const std::string& branch_name,
                   const std::string& out_path, double fsr_mhz, double min_prominence);
void cli_simulate(const std::string& config_path, const std::string& out_path,
                  const std::string& cal_out_path, const std::string& cal_in_path);
void cli_retrieve(const std::string& hist_path, const std::string& cal_path,
                  const std::string& config_path, const std::string& out_path);
void cli_roundtrip(const std::string& config_path, const std::string& out_dir);

}  // namespace botdr::run
