#include "botdr/core_model.hpp"

#include <cmath>
#include <string>

#include "botdr/detail/linalg.hpp"

namespace botdr::model {

void validate(const BrillouinLine& line) {
    if (!(line.nu_b_mhz > 0.0))
        throw Error(ErrorCode::ValidationError,
                    "Brillouin line center must be positive, got " + std::to_string(line.nu_b_mhz));
    if (!(line.omega_b_mhz > 0.0))
        throw Error(ErrorCode::NonPhysicalWidth,
                    "Brillouin half width must be positive, got " + std::to_string(line.omega_b_mhz));
    if (!(line.g0 >= 0.0))
        throw Error(ErrorCode::ValidationError, "line amplitude must be non-negative");
}

void validate(const FpiEtalon& etalon) {
    if (!(etalon.omega_fpi_mhz > 0.0))
        throw Error(ErrorCode::ValidationError, "etalon half width must be positive");
    if (!(etalon.fsr_mhz > 0.0))
        throw Error(ErrorCode::ValidationError, "free spectral range must be positive");
    if (etalon.comb_orders < 0)
        throw Error(ErrorCode::ValidationError, "comb_orders must be non-negative");
    if (!(etalon.omega_fpi_mhz < etalon.fsr_mhz))
        throw Error(ErrorCode::ValidationError, "etalon orders must not overlap (omega_fpi < fsr)");
}

void validate(const SensitivityModel& model) {
    if (!(model.nu_ref_mhz > 0.0) || !(model.omega_ref_mhz > 0.0))
        throw Error(ErrorCode::ValidationError, "sensitivity reference line must be physical");
    if (!(model.cond_limit > 1.0))
        throw Error(ErrorCode::ValidationError, "condition bound must exceed 1");
    const double cond = detail::cond_2x2(model.c_nu_t_mhz_per_c, model.c_nu_e_mhz_per_ue,
                                         model.c_w_t_mhz_per_c, model.c_w_e_mhz_per_ue);
    if (!(cond < model.cond_limit))
        throw Error(ErrorCode::IllConditioned,
                    "sensitivity matrix condition number " + std::to_string(cond) +
                        " exceeds bound " + std::to_string(model.cond_limit));
}

BrillouinLine line_from_environment(const SensitivityModel& model, const Environment& env,
                                    double g0) {
    const double dt = env.temperature_c - model.t_ref_c;
    BrillouinLine line;
    line.nu_b_mhz = model.nu_ref_mhz + model.c_nu_t_mhz_per_c * dt + model.c_nu_e_mhz_per_ue * env.strain_ue;
    line.omega_b_mhz = model.omega_ref_mhz + model.c_w_t_mhz_per_c * dt + model.c_w_e_mhz_per_ue * env.strain_ue;
    line.g0 = g0;
    if (!(line.omega_b_mhz > 0.0))
        throw Error(ErrorCode::NonPhysicalWidth,
                    "environment (" + std::to_string(env.temperature_c) + " C, " +
                        std::to_string(env.strain_ue) + " ue) drives the line width to " +
                        std::to_string(line.omega_b_mhz) + " MHz");
    return line;
}

Environment environment_from_line(const SensitivityModel& model, const BrillouinLine& line) {
    const double cond = detail::cond_2x2(model.c_nu_t_mhz_per_c, model.c_nu_e_mhz_per_ue,
                                         model.c_w_t_mhz_per_c, model.c_w_e_mhz_per_ue);
    if (!(cond < model.cond_limit))
        throw Error(ErrorCode::IllConditioned,
                    "sensitivity matrix condition number " + std::to_string(cond) +
                        " exceeds bound " + std::to_string(model.cond_limit));
    const double det = model.c_nu_t_mhz_per_c * model.c_w_e_mhz_per_ue -
                       model.c_nu_e_mhz_per_ue * model.c_w_t_mhz_per_c;
    const double dnu = line.nu_b_mhz - model.nu_ref_mhz;
    const double dw = line.omega_b_mhz - model.omega_ref_mhz;
    Environment env;
    env.temperature_c = model.t_ref_c + (dnu * model.c_w_e_mhz_per_ue - dw * model.c_nu_e_mhz_per_ue) / det;
    env.strain_ue = (model.c_nu_t_mhz_per_c * dw - model.c_w_t_mhz_per_c * dnu) / det;
    return env;
}

void environment_sigma(const SensitivityModel& model, double var_nu, double cov_nu_omega,
                       double var_omega, double& sigma_t, double& sigma_strain) {
    const double det = model.c_nu_t_mhz_per_c * model.c_w_e_mhz_per_ue -
                       model.c_nu_e_mhz_per_ue * model.c_w_t_mhz_per_c;
    // rows of the inverse sensitivity matrix
    const double t_nu = model.c_w_e_mhz_per_ue / det;
    const double t_w = -model.c_nu_e_mhz_per_ue / det;
    const double e_nu = -model.c_w_t_mhz_per_c / det;
    const double e_w = model.c_nu_t_mhz_per_c / det;
    sigma_t = std::sqrt(std::fmax(0.0, t_nu * t_nu * var_nu + 2.0 * t_nu * t_w * cov_nu_omega +
                                           t_w * t_w * var_omega));
    sigma_strain = std::sqrt(std::fmax(0.0, e_nu * e_nu * var_nu + 2.0 * e_nu * e_w * cov_nu_omega +
                                                e_w * e_w * var_omega));
}

}  // namespace botdr::model
