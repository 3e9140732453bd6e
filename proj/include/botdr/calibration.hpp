#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "botdr/core_model.hpp"
#include "botdr/errors.hpp"

namespace botdr::calib {

/// PZT drive direction.  Hysteresis makes the voltage-to-frequency map
/// branch-dependent, so every calibrated quantity is tagged with one.
enum class Branch { up, down };

const char* to_string(Branch b);
Branch branch_from_string(const std::string& s);

/// Ground-truth piezo transfer: absolute optical frequency (MHz, offset from
/// the pump laser) as a cubic in drive voltage, with a loop-shaped up/down
/// separation that closes at both sweep ends.  Used to synthesize calibration
/// traces; the scan pipeline itself only ever sees the fitted map.
struct PztModel {
    std::array<double, 4> up_coeffs_mhz{7500.0, 350.0, 0.5, 0.002};
    double hysteresis_depth_mhz = 400.0;  ///< max up/down separation, at mid-sweep
    double v_min = 0.0;
    double v_max = 70.0;

    std::array<double, 4> coeffs(Branch b) const;
    double eval(Branch b, double voltage) const;
};

void validate(const PztModel& model);

/// Raw interferometer sweep: transmitted power vs drive voltage, recorded on
/// one branch.  Voltages run in the branch direction (up: increasing).
struct CalibrationTrace {
    Branch branch = Branch::up;
    std::vector<double> voltage_v;
    std::vector<double> power;
};

void validate(const CalibrationTrace& trace);

/// One detected transmission order.
struct Peak {
    double voltage_v = 0.0;   ///< sub-sample refined position
    double power = 0.0;       ///< raw height of the maximum sample
    int order = -1;           ///< comb order index (assigned later)
    double frequency_mhz = 0.0;  ///< order * FSR on the relative axis
};

/// Detect transmission peaks above min_prominence * (global max) and refine
/// each position to sub-sample accuracy.  Peaks return sorted by voltage.
/// Throws TooFewPeaks when fewer than three are found.
std::vector<Peak> find_peaks(const CalibrationTrace& trace, double min_prominence = 0.5);

/// Tag consecutive peaks with comb orders 0,1,2,... (ascending voltage) and
/// the corresponding relative frequency order * fsr.
void assign_orders(std::vector<Peak>& peaks, double fsr_mhz);

/// Cubic voltage-to-frequency fit for one branch, on the relative axis where
/// the order-0 peak sits at 0 MHz.
struct BranchFit {
    std::array<double, 4> coeffs_mhz{0.0, 0.0, 0.0, 0.0};  ///< cubic in volts
    double v_min = 0.0;  ///< first calibrated peak
    double v_max = 0.0;  ///< last calibrated peak
    double max_residual_mhz = 0.0;
    int n_peaks = 0;

    double eval(double voltage) const;
};

/// Least-squares cubic through order-tagged peaks.  Throws InsufficientPoints
/// (< 4 peaks) and NonMonotone (fit derivative changes sign in the span).
BranchFit fit_branch(const std::vector<Peak>& peaks);

/// Structural checks on a branch fit (also applied to maps loaded from disk):
/// finite coefficients, non-empty span, strictly monotone over the span.
void validate(const BranchFit& fit);

/// Calibrated voltage-to-frequency map, possibly covering both branches.
struct HysteresisMap {
    double fsr_mhz = 4020.0;
    std::optional<BranchFit> up;
    std::optional<BranchFit> down;

    bool has(Branch b) const { return b == Branch::up ? up.has_value() : down.has_value(); }

    /// Throws BranchMismatch if that branch was never calibrated.
    const BranchFit& branch(Branch b) const;

    /// Relative frequency at a voltage.  Throws OutOfCalibratedRange outside
    /// the branch's peak span.
    double voltage_to_frequency(Branch b, double voltage) const;

    /// Monotone inverse of voltage_to_frequency, same range policy.
    double frequency_to_voltage(Branch b, double frequency_mhz) const;
};

/// Full single-branch calibration: peaks -> orders -> cubic fit.
HysteresisMap calibrate_branch(const CalibrationTrace& trace, double fsr_mhz,
                               double min_prominence = 0.5);

struct TraceNoise {
    double multiplicative = 0.0;  ///< relative, e.g. 0.002 for 0.2 %
    double additive = 0.0;        ///< absolute, in units of the unit peak
};

/// Synthesize a calibration sweep from the ground-truth PZT model: etalon
/// transmission sampled uniformly in voltage along the branch direction.
CalibrationTrace simulate_calibration_trace(const PztModel& model,
                                            const model::FpiEtalon& etalon, Branch branch,
                                            int n_samples, TraceNoise noise,
                                            std::uint64_t seed);

}  // namespace botdr::calib
