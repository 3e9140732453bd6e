#pragma once

#include <cstdint>
#include <string>

#include "botdr/calibration.hpp"
#include "botdr/core_model.hpp"
#include "botdr/scan_engine.hpp"
#include "botdr/toml.hpp"

namespace botdr::io {

struct CalibrationSettings {
    int n_samples = 20001;
    double noise_multiplicative = 0.002;  ///< relative sweep-power noise
    double noise_additive = 0.0;
    double min_prominence = 0.5;
};

struct RetrievalSettings {
    bool dead_time_correction = true;
    bool weighted_fit = false;
    double noise_floor_sigma = 5.0;
    int threads = 1;
};

/// Everything one run needs, loadable from a single TOML file.  An empty file
/// yields the documented defaults.  The schedule's voltages stay empty here;
/// they are built against a calibration map at run time.
struct ExperimentConfig {
    std::uint64_t seed = 20260822;
    scan::Sampling sampling = scan::Sampling::poisson;
    int sim_threads = 1;
    scan::InstrumentConfig instrument;
    model::SensitivityModel sensitivity;
    model::FpiEtalon etalon;
    calib::PztModel pzt;
    scan::FiberProfile fiber;
    scan::ScanSchedule schedule;
    CalibrationSettings calibration;
    RetrievalSettings retrieval;
};

ExperimentConfig default_config();

/// Overlay a parsed document onto the defaults.  Unknown keys raise
/// ConfigError naming the key and line; every component is validated.
ExperimentConfig config_from_toml(const TomlDoc& doc);
ExperimentConfig load_config(const std::string& path);

/// Canonical serialization: fixed key order, round-trip-exact numbers.
/// save(load(save(c))) is byte-identical to save(c).
std::string save_config(const ExperimentConfig& cfg);
void write_config(const ExperimentConfig& cfg, const std::string& path);

/// SHA-256 of the canonical serialization; stamped into every output file.
std::string config_hash(const ExperimentConfig& cfg);

void validate(const ExperimentConfig& cfg);

calib::HysteresisMap load_map(const std::string& path);
std::string save_map(const calib::HysteresisMap& map);
void write_map(const calib::HysteresisMap& map, const std::string& path);

}  // namespace botdr::io
