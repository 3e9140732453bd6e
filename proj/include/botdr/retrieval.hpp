#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "botdr/calibration.hpp"
#include "botdr/core_model.hpp"
#include "botdr/errors.hpp"
#include "botdr/scan_engine.hpp"

namespace botdr::retrieval {

/// Per-bin quality flags (bitmask).  A bin either carries a converged fit or
/// at least one flag; numeric outputs of flagged bins are NaN by design,
/// never silently.
enum Flag : unsigned {
    flag_noise_only = 1u << 0,         ///< no significant peak above background
    flag_degenerate = 1u << 1,         ///< peak too close to the scan-window edge
    flag_not_converged = 1u << 2,      ///< fit iteration limit hit
    flag_non_physical_width = 1u << 3, ///< deconvolved width <= 0
    flag_beyond_fiber = 1u << 4,       ///< bin lies past the configured fiber end
    flag_saturated = 1u << 5,          ///< counts at the dead-time ceiling, correction clamped
};

std::string flags_to_string(unsigned flags);  // "ok" for 0, else "a;b;c"
unsigned flags_from_string(const std::string& s);

/// Spectrum of one range bin: counts (dead-time corrected when enabled)
/// paired with calibrated absolute frequencies, plus the per-point background
/// estimate.
struct BinSpectrum {
    int bin = 0;
    double range_m = 0.0;
    std::vector<double> frequency_mhz;
    std::vector<double> counts;
    std::vector<double> background;
    unsigned flags = 0;
};

void validate(const BinSpectrum& spectrum);

struct FitOptions {
    bool weighted = false;  ///< 1/max(counts,1) Poisson-style weights
    int max_iter = 200;
};

/// Four-parameter Lorentzian fit result: model A/(1+((nu-center)/width)^2)+offset.
struct FitResult {
    double amplitude = 0.0;
    double center_mhz = 0.0;
    double width_mhz = 0.0;   ///< HWHM of the *measured* (convolved) line
    double offset = 0.0;
    double var_center = 0.0;
    double var_width = 0.0;
    double cov_center_width = 0.0;
    double rss = 0.0;
    int n_iter = 0;
    bool converged = false;
};

/// Per-step background level (counts per cell) estimated from bins beyond
/// the fiber end.  Throws NoDarkRegion when the histogram has no bins past
/// fiber_length plus the pulse smear.
std::vector<double> estimate_background(const scan::ScanHistogram& hist, double fiber_length_m,
                                        bool dead_time_correction);

/// Pair one bin's counts across scan steps with calibrated frequencies.
/// Applies the exact inverse of the simulator's dead-time censoring when
/// enabled (using the histogram's recorded dead time), flagging cells pinned
/// at the saturation ceiling.  Throws BranchMismatch when the map lacks the
/// histogram's branch.
BinSpectrum assemble_spectrum(const scan::ScanHistogram& hist, const calib::HysteresisMap& map,
                              const scan::ScanSchedule& schedule, int bin,
                              const std::vector<double>& background,
                              bool dead_time_correction);

/// Damped least-squares (Levenberg-Marquardt) Lorentzian fit on
/// background-subtracted counts, analytic Jacobian, free offset.
/// Throws InsufficientPoints (< 8 samples) and DegenerateSpectrum (no peak,
/// or peak less than one estimated HWHM inside the scan window).
/// Non-convergence is reported through FitResult.converged.
FitResult fit_lorentzian(const BinSpectrum& spectrum, const FitOptions& options = {});

/// Remove the etalon's contribution from a fitted (convolved) HWHM.  May
/// return <= 0; callers flag that as non-physical.
double deconvolve_width(double width_mhz, const model::FpiEtalon& etalon);

struct BinResult {
    int bin = 0;
    double range_m = 0.0;
    double amplitude = 0.0;
    double nu_b_mhz = 0.0;
    double sigma_nu_mhz = 0.0;
    double omega_b_mhz = 0.0;
    double sigma_omega_mhz = 0.0;
    double temperature_c = 0.0;
    double sigma_t_c = 0.0;
    double strain_ue = 0.0;
    double sigma_strain_ue = 0.0;
    unsigned flags = 0;
    int n_iter = 0;
};

struct RetrievedProfile {
    std::vector<BinResult> bins;
    std::vector<double> background_per_step;
    std::string config_hash;
    std::uint64_t seed = 0;
};

struct RetrievalOptions {
    double fiber_length_m = 0.0;  ///< required: defines the dark region
    bool dead_time_correction = true;
    bool weighted_fit = false;
    double noise_floor_sigma = 5.0;  ///< peak significance threshold
    int threads = 1;                 ///< 0 = hardware concurrency
};

/// Full inverse pipeline over every range bin: assemble, fit, deconvolve,
/// invert to (temperature, strain) with delta-method uncertainties.  Per-bin
/// failures become flags, never aborts; bin order in the result is fixed
/// regardless of thread count.
RetrievedProfile retrieve_profile(const scan::ScanHistogram& hist,
                                  const calib::HysteresisMap& map,
                                  const scan::ScanSchedule& schedule,
                                  const model::FpiEtalon& etalon,
                                  const model::SensitivityModel& sens,
                                  const RetrievalOptions& options);

}  // namespace botdr::retrieval
