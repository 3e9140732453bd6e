#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "botdr/calibration.hpp"
#include "botdr/core_model.hpp"
#include "botdr/errors.hpp"

namespace botdr::scan {

/// Homogeneous stretch of sensing fiber.
struct FiberSegment {
    double length_m = 0.0;
    model::Environment environment;
    double attenuation_db_per_km = 0.2;
    double amplitude = 1.0;  ///< relative backscatter strength
};

struct FiberProfile {
    std::vector<FiberSegment> segments;

    double total_length_m() const;
    /// Segment index owning position z (0 <= z < total length).
    int segment_at(double z_m) const;
};

void validate(const FiberProfile& profile);

/// Detection-chain parameters.  noise_rate, dead_time and the capture
/// coefficient may be zero (= feature disabled); everything else must be
/// strictly positive.
struct InstrumentConfig {
    double pulse_duration_ns = 300.0;
    double peak_power_w = 0.1;
    double rep_rate_khz = 8.0;
    double group_velocity_mps = 2.0e8;
    double detector_efficiency = 0.17;
    double noise_rate_cps = 700.0;
    double dead_time_ns = 23.0;
    double fbg_suppression_db = 35.0;
    double rayleigh_to_brillouin = 20.0;  ///< Rayleigh/Brillouin backscatter power ratio
    double bin_width_ns = 300.0;
    /// Overall photon-budget scale: expected signal counts per pulse and bin
    /// are capture * pulse_energy * efficiency * bin_width * (unit-amplitude
    /// spectral-geometric factor).  The default puts the detected rate at the
    /// fiber entry near 1e5 counts/s for the default pulse.
    double capture_coefficient = 1e5 / (3.0e-8 * 0.17);

    double rep_period_ns() const { return 1.0e6 / rep_rate_khz; }
    double pulse_energy_j() const { return peak_power_w * pulse_duration_ns * 1.0e-9; }
    int n_bins() const;
    double unambiguous_range_m() const;
    /// Half the pulse's spatial extent: the boxcar smearing width.
    double smear_width_m() const { return group_velocity_mps * pulse_duration_ns * 1.0e-9 / 2.0; }
};

void validate(const InstrumentConfig& cfg);

/// Capture coefficient that produces a given detected signal rate at the
/// fiber entry (before attenuation, unit amplitude, line peak on-center).
double capture_for_entry_rate(const InstrumentConfig& cfg, double entry_rate_cps);

/// One frequency scan: n_steps etalon positions around center, dwell seconds
/// each, realized through PZT voltages on one hysteresis branch.
struct ScanSchedule {
    int n_steps = 40;
    double freq_step_mhz = 15.0;
    double center_mhz = 10850.0;  ///< absolute offset-from-pump frequency
    double dwell_s = 1.0;
    calib::Branch branch = calib::Branch::up;
    /// Absolute frequency of the calibration map's order-0 peak.  The map is
    /// relative; this one constant ties it to the Brillouin frequency axis.
    double anchor_mhz = 8040.0;
    std::vector<double> voltages;  ///< one per step, filled by build_voltages

    double target_frequency(int step) const {
        return center_mhz + (step - 0.5 * (n_steps - 1)) * freq_step_mhz;
    }
};

void validate(const ScanSchedule& schedule);

/// Solve the calibrated map for the voltage realizing each frequency step.
/// Throws OutOfCalibratedRange if the scan window leaves the map's span and
/// BranchMismatch if the map lacks the schedule's branch.
void build_voltages(ScanSchedule& schedule, const calib::HysteresisMap& map);

enum class Sampling { poisson, expected };

/// Photon-count histogram of one complete scan: counts[step][bin] plus the
/// metadata retrieval needs.  Counts are doubles because expected-value
/// sampling produces non-integral means; Poisson counts are integral.
struct ScanHistogram {
    int n_steps = 0;
    int n_bins = 0;
    std::vector<double> counts;  ///< row-major [step][bin]
    std::vector<double> step_frequency_mhz;
    std::vector<double> voltages;
    calib::Branch branch = calib::Branch::up;
    Sampling sampling = Sampling::poisson;
    double dwell_s = 1.0;
    double bin_width_ns = 300.0;
    double rep_period_ns = 125000.0;
    double group_velocity_mps = 2.0e8;
    double pulse_duration_ns = 300.0;
    double dead_time_ns = 23.0;
    std::uint64_t seed = 0;
    std::string config_hash;

    double& at(int step, int bin) { return counts[static_cast<size_t>(step) * n_bins + bin]; }
    double at(int step, int bin) const { return counts[static_cast<size_t>(step) * n_bins + bin]; }
    /// Range of a bin's center.
    double range_m(int bin) const;
    double pulses() const { return dwell_s * rep_period_ns > 0 ? dwell_s * 1.0e9 / rep_period_ns : 0.0; }
};

void validate(const ScanHistogram& hist);

/// One-way travel time to two-way range.
double time_to_range(double t_ns, double group_velocity_mps);

/// Non-paralyzable dead-time censoring of a true rate, and its exact inverse.
double apply_dead_time(double rate_cps, double dead_time_ns);
double invert_dead_time(double measured_rate_cps, double dead_time_ns);

/// Expected detected *signal* counts per pulse in one range bin at one etalon
/// position (no noise, no dead time).  The geometric factor integrates the
/// pulse's boxcar smear and the two-way attenuation in closed form across
/// segment boundaries.  Throws OutOfRange for a bin outside the histogram.
double expected_rate(const FiberProfile& profile, const InstrumentConfig& cfg,
                     const model::SensitivityModel& sens, const model::FpiEtalon& etalon,
                     double nu_center_mhz, int bin);

struct SimulateOptions {
    Sampling sampling = Sampling::poisson;
    int threads = 1;  ///< 0 = hardware concurrency
};

/// Run the forward model: one histogram cell per (scan step, range bin).
/// Step frequencies come from the calibrated map applied to the schedule
/// voltages plus the schedule anchor.  Every cell draws from its own
/// (seed, step, bin) substream, so results are byte-identical for any thread
/// count.
ScanHistogram simulate_histogram(const FiberProfile& profile, const InstrumentConfig& cfg,
                                 const model::SensitivityModel& sens,
                                 const model::FpiEtalon& etalon, const ScanSchedule& schedule,
                                 const calib::HysteresisMap& map, std::uint64_t seed,
                                 const SimulateOptions& options = {});

}  // namespace botdr::scan
