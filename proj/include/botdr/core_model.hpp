#pragma once

#include "botdr/errors.hpp"

namespace botdr::model {

/// A single Brillouin gain line: center offset from the pump, half width at
/// half maximum, and peak amplitude.  Frequencies are MHz throughout.
struct BrillouinLine {
    double nu_b_mhz = 10850.0;   ///< line center (offset from the pump laser)
    double omega_b_mhz = 15.0;   ///< HWHM
    double g0 = 1.0;             ///< peak amplitude, arbitrary units
};

/// Scanning Fabry-Perot etalon used as the spectral discriminator.  The
/// transmission comb has orders at integer multiples of the free spectral
/// range; `comb_orders` side orders per side are included in evaluations
/// (0 keeps only the central order).
struct FpiEtalon {
    double omega_fpi_mhz = 60.0;  ///< HWHM of one transmission order
    double fsr_mhz = 4020.0;      ///< free spectral range
    int comb_orders = 0;
};

/// Fiber environment at a point: what the retrieval ultimately estimates.
struct Environment {
    double temperature_c = 25.0;
    double strain_ue = 0.0;  ///< microstrain
};

/// Linear sensitivity model tying (temperature, strain) to the Brillouin
/// line center and width around a reference state.
struct SensitivityModel {
    double nu_ref_mhz = 10850.0;  ///< line center at (t_ref, zero strain)
    double omega_ref_mhz = 15.0;  ///< HWHM at (t_ref, zero strain)
    double t_ref_c = 25.0;
    double c_nu_t_mhz_per_c = 1.0;     ///< d(nu_B)/dT
    double c_nu_e_mhz_per_ue = 0.05;   ///< d(nu_B)/d(strain)
    double c_w_t_mhz_per_c = 0.1;      ///< d(omega_B)/dT
    double c_w_e_mhz_per_ue = 0.001;   ///< d(omega_B)/d(strain)
    double cond_limit = 1e6;           ///< inversion conditioning bound
};

void validate(const BrillouinLine& line);
void validate(const FpiEtalon& etalon);
void validate(const SensitivityModel& model);

/// Lorentzian gain profile of the line at frequency nu.
inline double eval_brillouin(const BrillouinLine& line, double nu_mhz) {
    const double x = (nu_mhz - line.nu_b_mhz) / line.omega_b_mhz;
    return line.g0 / (1.0 + x * x);
}

/// Etalon transmission at nu: sum over the included comb orders, clamped to
/// the unit peak (adjacent-order tails can push the bare sum slightly over).
inline double eval_fpi(const FpiEtalon& etalon, double nu_mhz) {
    double sum = 0.0;
    for (int m = -etalon.comb_orders; m <= etalon.comb_orders; ++m) {
        const double x = (nu_mhz - m * etalon.fsr_mhz) / etalon.omega_fpi_mhz;
        sum += 1.0 / (1.0 + x * x);
    }
    return sum > 1.0 ? 1.0 : sum;
}

/// Measured spectral response with the etalon parked at nu_center: the
/// convolution of the two Lorentzians, itself a Lorentzian whose half width
/// is the sum of the two half widths.  Peak amplitude is the line's g0 (all
/// instrument scale factors are carried elsewhere).
inline double eval_transmission(const BrillouinLine& line, const FpiEtalon& etalon,
                                double nu_center_mhz) {
    const double w = etalon.omega_fpi_mhz + line.omega_b_mhz;
    const double x = (nu_center_mhz - line.nu_b_mhz) / w;
    return line.g0 / (1.0 + x * x);
}

/// Forward sensitivity map: line parameters for a given environment.
/// Throws NonPhysicalWidth if the linear model drives the width to <= 0.
BrillouinLine line_from_environment(const SensitivityModel& model, const Environment& env,
                                    double g0 = 1.0);

/// Inverse 2x2 sensitivity solve: environment from fitted line parameters.
/// Throws IllConditioned if the sensitivity matrix condition number exceeds
/// the model's bound.
Environment environment_from_line(const SensitivityModel& model, const BrillouinLine& line);

/// Delta-method propagation of fit uncertainties through the inverse solve.
/// Inputs are the covariance entries of (nu_b_hat, omega_b_hat); outputs are
/// one-sigma uncertainties on temperature and strain.
void environment_sigma(const SensitivityModel& model, double var_nu, double cov_nu_omega,
                       double var_omega, double& sigma_t, double& sigma_strain);

}  // namespace botdr::model
