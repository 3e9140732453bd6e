#include "botdr/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "botdr/detail/linalg.hpp"

namespace botdr::retrieval {

namespace {

constexpr struct {
    unsigned bit;
    const char* name;
} kFlagNames[] = {
    {flag_noise_only, "noise_only"},
    {flag_degenerate, "degenerate"},
    {flag_not_converged, "not_converged"},
    {flag_non_physical_width, "non_physical_width"},
    {flag_beyond_fiber, "beyond_fiber"},
    {flag_saturated, "saturated"},
};

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

/// Exact inverse of the simulator's non-paralyzable censoring, applied to one
/// cell's counts.  Cells whose apparent loss is at the ceiling cannot be
/// inverted and are clamped + flagged instead.
double decensor_counts(double counts, double pulses, double bin_dt_s, double dead_time_ns,
                       unsigned& flags) {
    if (dead_time_ns <= 0.0 || counts <= 0.0) return counts;
    const double measured_rate = counts / (pulses * bin_dt_s);
    double loss = measured_rate * dead_time_ns * 1.0e-9;
    if (loss >= 0.95) {
        flags |= flag_saturated;
        loss = 0.95;
    }
    return counts / (1.0 - loss);
}

}  // namespace

std::string flags_to_string(unsigned flags) {
    if (flags == 0) return "ok";
    std::string out;
    for (const auto& f : kFlagNames) {
        if (flags & f.bit) {
            if (!out.empty()) out += ';';
            out += f.name;
        }
    }
    return out;
}

unsigned flags_from_string(const std::string& s) {
    if (s.empty() || s == "ok") return 0;
    unsigned flags = 0;
    size_t pos = 0;
    while (pos <= s.size()) {
        const size_t sep = s.find(';', pos);
        const std::string tok = s.substr(pos, sep == std::string::npos ? std::string::npos : sep - pos);
        bool known = false;
        for (const auto& f : kFlagNames) {
            if (tok == f.name) {
                flags |= f.bit;
                known = true;
                break;
            }
        }
        if (!known)
            throw Error(ErrorCode::ParseError, "unknown quality flag '" + tok + "'");
        if (sep == std::string::npos) break;
        pos = sep + 1;
    }
    return flags;
}

void validate(const BinSpectrum& spectrum) {
    const size_t n = spectrum.frequency_mhz.size();
    if (n == 0 || spectrum.counts.size() != n ||
        (!spectrum.background.empty() && spectrum.background.size() != n))
        throw Error(ErrorCode::ValidationError, "bin spectrum arrays are empty or mismatched");
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(spectrum.counts[i]) || !std::isfinite(spectrum.frequency_mhz[i]))
            throw Error(ErrorCode::ValidationError, "non-finite spectrum sample");
        if (i > 0 && !(spectrum.frequency_mhz[i] > spectrum.frequency_mhz[i - 1]))
            throw Error(ErrorCode::NonMonotone, "spectrum frequencies must increase strictly");
    }
}

std::vector<double> estimate_background(const scan::ScanHistogram& hist, double fiber_length_m,
                                        bool dead_time_correction) {
    scan::validate(hist);
    if (!(fiber_length_m > 0.0))
        throw Error(ErrorCode::ValidationError, "fiber length must be positive to locate the dark region");

    const double bin_len = hist.group_velocity_mps * hist.bin_width_ns * 1.0e-9 / 2.0;
    const double smear = hist.group_velocity_mps * hist.pulse_duration_ns * 1.0e-9 / 2.0;
    // two guard bins past the last smeared signal
    const int first_dark = static_cast<int>(std::ceil((fiber_length_m + smear) / bin_len)) + 2;
    if (first_dark >= hist.n_bins)
        throw Error(ErrorCode::NoDarkRegion,
                    "no histogram bins beyond the fiber end at " + std::to_string(fiber_length_m) +
                        " m; cannot estimate background");

    const double bin_dt_s = hist.bin_width_ns * 1.0e-9;
    const double pulses = hist.pulses();
    const double tau = dead_time_correction ? hist.dead_time_ns : 0.0;
    std::vector<double> background(hist.n_steps, 0.0);
    for (int step = 0; step < hist.n_steps; ++step) {
        double sum = 0.0;
        unsigned scratch = 0;
        for (int bin = first_dark; bin < hist.n_bins; ++bin)
            sum += decensor_counts(hist.at(step, bin), pulses, bin_dt_s, tau, scratch);
        background[step] = sum / (hist.n_bins - first_dark);
    }
    return background;
}

BinSpectrum assemble_spectrum(const scan::ScanHistogram& hist, const calib::HysteresisMap& map,
                              const scan::ScanSchedule& schedule, int bin,
                              const std::vector<double>& background,
                              bool dead_time_correction) {
    if (bin < 0 || bin >= hist.n_bins)
        throw Error(ErrorCode::OutOfRange, "bin " + std::to_string(bin) + " outside histogram");
    if (hist.branch != schedule.branch)
        throw Error(ErrorCode::BranchMismatch,
                    std::string("histogram recorded on the ") + calib::to_string(hist.branch) +
                        " branch but the schedule expects " + calib::to_string(schedule.branch));
    if (hist.voltages.size() != static_cast<size_t>(hist.n_steps))
        throw Error(ErrorCode::ValidationError, "histogram is missing its voltage record");
    if (!background.empty() && background.size() != static_cast<size_t>(hist.n_steps))
        throw Error(ErrorCode::ValidationError, "background size does not match step count");

    BinSpectrum spec;
    spec.bin = bin;
    spec.range_m = hist.range_m(bin);
    spec.frequency_mhz.resize(hist.n_steps);
    spec.counts.resize(hist.n_steps);
    spec.background.assign(hist.n_steps, 0.0);

    const double bin_dt_s = hist.bin_width_ns * 1.0e-9;
    const double pulses = hist.pulses();
    const double tau = dead_time_correction ? hist.dead_time_ns : 0.0;
    for (int step = 0; step < hist.n_steps; ++step) {
        spec.frequency_mhz[step] =
            schedule.anchor_mhz + map.voltage_to_frequency(hist.branch, hist.voltages[step]);
        spec.counts[step] = decensor_counts(hist.at(step, bin), pulses, bin_dt_s, tau, spec.flags);
        if (!background.empty()) spec.background[step] = background[step];
    }
    validate(spec);
    return spec;
}

FitResult fit_lorentzian(const BinSpectrum& spectrum, const FitOptions& options) {
    validate(spectrum);
    const int n = static_cast<int>(spectrum.frequency_mhz.size());
    if (n < 8)
        throw Error(ErrorCode::InsufficientPoints,
                    "Lorentzian fit needs at least 8 samples, got " + std::to_string(n));
    if (spectrum.flags & flag_noise_only)
        throw Error(ErrorCode::DegenerateSpectrum, "spectrum is flagged as noise-only");

    const auto& f = spectrum.frequency_mhz;
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i)
        y[i] = spectrum.counts[i] - (spectrum.background.empty() ? 0.0 : spectrum.background[i]);

    std::vector<double> wt(n, 1.0);
    if (options.weighted)
        for (int i = 0; i < n; ++i) wt[i] = 1.0 / std::fmax(1.0, spectrum.counts[i]);

    // initial guess from the raw extremes and the half-maximum width
    int imax = 0;
    for (int i = 1; i < n; ++i)
        if (y[i] > y[imax]) imax = i;
    const double ymin = *std::min_element(y.begin(), y.end());
    const double a0 = y[imax] - ymin;
    if (!(a0 > 0.0))
        throw Error(ErrorCode::DegenerateSpectrum, "spectrum has no peak above its floor");
    if (imax == 0 || imax == n - 1)
        throw Error(ErrorCode::DegenerateSpectrum, "peak sits on the scan-window edge");

    const double span = f.back() - f.front();
    const double half = ymin + 0.5 * a0;
    double left = kNan, right = kNan;
    for (int i = imax; i > 0; --i) {
        if (y[i - 1] < half) {
            left = f[i - 1] + (f[i] - f[i - 1]) * (half - y[i - 1]) / (y[i] - y[i - 1]);
            break;
        }
    }
    for (int i = imax; i < n - 1; ++i) {
        if (y[i + 1] < half) {
            right = f[i] + (f[i + 1] - f[i]) * (half - y[i]) / (y[i + 1] - y[i]);
            break;
        }
    }
    double w0;
    if (std::isfinite(left) && std::isfinite(right))
        w0 = 0.5 * (right - left);
    else if (std::isfinite(left))
        w0 = f[imax] - left;
    else if (std::isfinite(right))
        w0 = right - f[imax];
    else
        w0 = 0.25 * span;
    w0 = std::clamp(w0, (f[1] - f[0]) * 0.5, span);

    const double c0 = f[imax];
    if (c0 - f.front() < w0 || f.back() - c0 < w0)
        throw Error(ErrorCode::DegenerateSpectrum,
                    "peak is less than one estimated HWHM inside the scan window");

    double p[4] = {a0, c0, w0, ymin};

    auto cost_of = [&](const double* q) {
        double c = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = (f[i] - q[1]) / q[2];
            const double r = q[0] / (1.0 + x * x) + q[3] - y[i];
            c += wt[i] * r * r;
        }
        return c;
    };

    FitResult out;
    double cost = cost_of(p);
    double lambda = 1e-3;
    bool converged = false;
    int iter = 0;
    for (; iter < options.max_iter && !converged; ++iter) {
        // gradient and Gauss-Newton Hessian with the analytic Jacobian
        double g[4] = {0, 0, 0, 0};
        double h[16] = {0};
        for (int i = 0; i < n; ++i) {
            const double x = (f[i] - p[1]) / p[2];
            const double u = 1.0 / (1.0 + x * x);
            const double r = p[0] * u + p[3] - y[i];
            const double j0 = u;
            const double j1 = p[0] * u * u * 2.0 * x / p[2];
            const double j2 = p[0] * u * u * 2.0 * x * x / p[2];
            const double j3 = 1.0;
            const double jr[4] = {j0, j1, j2, j3};
            for (int a = 0; a < 4; ++a) {
                g[a] += wt[i] * jr[a] * r;
                for (int b = a; b < 4; ++b) h[a * 4 + b] += wt[i] * jr[a] * jr[b];
            }
        }
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < a; ++b) h[a * 4 + b] = h[b * 4 + a];

        bool accepted = false;
        for (int tries = 0; tries < 30 && !accepted; ++tries) {
            double a[16];
            double rhs[4] = {-g[0], -g[1], -g[2], -g[3]};
            for (int k = 0; k < 16; ++k) a[k] = h[k];
            for (int d = 0; d < 4; ++d) a[d * 4 + d] += lambda * std::fmax(h[d * 4 + d], 1e-300);
            if (!detail::solve_inplace(a, rhs, 4)) {
                lambda *= 10.0;
                continue;
            }
            double q[4] = {p[0] + rhs[0], p[1] + rhs[1], p[2] + rhs[2], p[3] + rhs[3]};
            q[2] = std::fabs(q[2]);
            if (!(q[2] > 1e-9 * span)) {
                lambda *= 10.0;
                continue;
            }
            const double cost_new = cost_of(q);
            if (cost_new <= cost) {
                const double dcost = cost - cost_new;
                double step_rel = 0.0;
                for (int k = 0; k < 4; ++k)
                    step_rel = std::fmax(step_rel, std::fabs(rhs[k]) / (std::fabs(p[k]) + 1e-12));
                for (int k = 0; k < 4; ++k) p[k] = q[k];
                cost = cost_new;
                lambda = std::fmax(lambda / 3.0, 1e-12);
                accepted = true;
                if (dcost <= 1e-10 * std::fmax(cost, 1e-300) || step_rel <= 1e-8 || cost == 0.0)
                    converged = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) break;  // stalled against the damping ceiling
    }

    out.amplitude = p[0];
    out.center_mhz = p[1];
    out.width_mhz = p[2];
    out.offset = p[3];
    out.rss = cost;
    out.n_iter = iter;
    out.converged = converged;

    // covariance of the solution from the final Gauss-Newton Hessian
    double h[16] = {0};
    for (int i = 0; i < n; ++i) {
        const double x = (f[i] - p[1]) / p[2];
        const double u = 1.0 / (1.0 + x * x);
        const double jr[4] = {u, p[0] * u * u * 2.0 * x / p[2], p[0] * u * u * 2.0 * x * x / p[2],
                              1.0};
        for (int a = 0; a < 4; ++a)
            for (int b = a; b < 4; ++b) h[a * 4 + b] += wt[i] * jr[a] * jr[b];
    }
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < a; ++b) h[a * 4 + b] = h[b * 4 + a];
    if (detail::invert_inplace(h, 4)) {
        const double s2 = cost / std::fmax(1, n - 4);
        out.var_center = s2 * h[1 * 4 + 1];
        out.var_width = s2 * h[2 * 4 + 2];
        out.cov_center_width = s2 * h[1 * 4 + 2];
    } else {
        out.converged = false;
        out.var_center = out.var_width = out.cov_center_width = kNan;
    }
    return out;
}

double deconvolve_width(double width_mhz, const model::FpiEtalon& etalon) {
    model::validate(etalon);
    return width_mhz - etalon.omega_fpi_mhz;
}

RetrievedProfile retrieve_profile(const scan::ScanHistogram& hist, const calib::HysteresisMap& map,
                                  const scan::ScanSchedule& schedule,
                                  const model::FpiEtalon& etalon,
                                  const model::SensitivityModel& sens,
                                  const RetrievalOptions& options) {
    scan::validate(hist);
    model::validate(etalon);
    model::validate(sens);
    if (!(options.fiber_length_m > 0.0))
        throw Error(ErrorCode::ValidationError, "retrieval needs the fiber length (dark region)");
    if (hist.branch != schedule.branch)
        throw Error(ErrorCode::BranchMismatch,
                    std::string("histogram recorded on the ") + calib::to_string(hist.branch) +
                        " branch but the schedule expects " + calib::to_string(schedule.branch));
    (void)map.branch(hist.branch);  // fail fast when the branch is absent

    RetrievedProfile profile;
    profile.config_hash = hist.config_hash;
    profile.seed = hist.seed;
    profile.background_per_step =
        estimate_background(hist, options.fiber_length_m, options.dead_time_correction);
    double bkg_mean = 0.0;
    for (double b : profile.background_per_step) bkg_mean += b;
    bkg_mean /= profile.background_per_step.size();
    const double noise_sigma_ref = std::sqrt(std::fmax(1.0, bkg_mean));

    const double bin_len = hist.group_velocity_mps * hist.bin_width_ns * 1.0e-9 / 2.0;
    const double smear = hist.group_velocity_mps * hist.pulse_duration_ns * 1.0e-9 / 2.0;
    profile.bins.assign(hist.n_bins, BinResult{});

    auto run_bins = [&](int b_begin, int b_end) {
        for (int bin = b_begin; bin < b_end; ++bin) {
            BinResult br;
            br.bin = bin;
            br.range_m = hist.range_m(bin);
            br.amplitude = br.nu_b_mhz = br.sigma_nu_mhz = br.omega_b_mhz = br.sigma_omega_mhz =
                kNan;
            br.temperature_c = br.sigma_t_c = br.strain_ue = br.sigma_strain_ue = kNan;

            if (bin * bin_len >= options.fiber_length_m + smear) {
                br.flags = flag_beyond_fiber;
                profile.bins[bin] = br;
                continue;
            }

            BinSpectrum spec =
                assemble_spectrum(hist, map, schedule, bin, profile.background_per_step,
                                  options.dead_time_correction);
            br.flags = spec.flags;

            double peak = -std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < spec.counts.size(); ++i)
                peak = std::fmax(peak, spec.counts[i] - spec.background[i]);
            if (peak < options.noise_floor_sigma * noise_sigma_ref) {
                br.flags |= flag_noise_only;
                profile.bins[bin] = br;
                continue;
            }

            FitResult fit;
            try {
                FitOptions fo;
                fo.weighted = options.weighted_fit;
                fit = fit_lorentzian(spec, fo);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::DegenerateSpectrum ||
                    e.code() == ErrorCode::InsufficientPoints) {
                    br.flags |= flag_degenerate;
                    profile.bins[bin] = br;
                    continue;
                }
                throw;
            }

            br.n_iter = fit.n_iter;
            br.amplitude = fit.amplitude;
            br.nu_b_mhz = fit.center_mhz;
            br.sigma_nu_mhz = std::sqrt(std::fmax(0.0, fit.var_center));
            br.omega_b_mhz = deconvolve_width(fit.width_mhz, etalon);
            br.sigma_omega_mhz = std::sqrt(std::fmax(0.0, fit.var_width));
            if (!fit.converged) br.flags |= flag_not_converged;
            if (!(br.omega_b_mhz > 0.0)) br.flags |= flag_non_physical_width;

            if (br.flags == 0) {
                model::BrillouinLine line{br.nu_b_mhz, br.omega_b_mhz, fit.amplitude};
                const auto env = model::environment_from_line(sens, line);
                br.temperature_c = env.temperature_c;
                br.strain_ue = env.strain_ue;
                model::environment_sigma(sens, fit.var_center, fit.cov_center_width,
                                         fit.var_width, br.sigma_t_c, br.sigma_strain_ue);
            } else {
                br.temperature_c = br.strain_ue = br.sigma_t_c = br.sigma_strain_ue = kNan;
            }
            profile.bins[bin] = br;
        }
    };

    int n_threads = options.threads;
    if (n_threads == 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, hist.n_bins);
    if (n_threads == 1) {
        run_bins(0, hist.n_bins);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors;
        const int chunk = (hist.n_bins + n_threads - 1) / n_threads;
        errors.resize(n_threads);
        for (int t = 0; t < n_threads; ++t) {
            const int b0 = t * chunk;
            const int b1 = std::min(hist.n_bins, b0 + chunk);
            if (b0 >= b1) break;
            pool.emplace_back([&, t, b0, b1] {
                try {
                    run_bins(b0, b1);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    return profile;
}

}  // namespace botdr::retrieval
