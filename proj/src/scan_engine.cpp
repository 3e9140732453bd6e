#include "botdr/scan_engine.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "botdr/rng.hpp"

namespace botdr::scan {

double FiberProfile::total_length_m() const {
    double total = 0.0;
    for (const auto& seg : segments) total += seg.length_m;
    return total;
}

int FiberProfile::segment_at(double z_m) const {
    if (z_m < 0.0)
        throw Error(ErrorCode::OutOfRange, "position " + std::to_string(z_m) + " m before fiber start");
    double edge = 0.0;
    for (size_t i = 0; i < segments.size(); ++i) {
        edge += segments[i].length_m;
        if (z_m < edge) return static_cast<int>(i);
    }
    throw Error(ErrorCode::OutOfRange,
                "position " + std::to_string(z_m) + " m beyond fiber end " +
                    std::to_string(edge) + " m");
}

void validate(const FiberProfile& profile) {
    if (profile.segments.empty())
        throw Error(ErrorCode::ValidationError, "fiber profile has no segments");
    for (size_t i = 0; i < profile.segments.size(); ++i) {
        const auto& seg = profile.segments[i];
        if (!(seg.length_m > 0.0))
            throw Error(ErrorCode::ValidationError,
                        "segment " + std::to_string(i) + " has non-positive length");
        if (!(seg.attenuation_db_per_km >= 0.0))
            throw Error(ErrorCode::ValidationError,
                        "segment " + std::to_string(i) + " has negative attenuation");
        if (!(seg.amplitude >= 0.0))
            throw Error(ErrorCode::ValidationError,
                        "segment " + std::to_string(i) + " has negative amplitude");
    }
}

int InstrumentConfig::n_bins() const {
    return static_cast<int>(std::ceil(rep_period_ns() / bin_width_ns - 1e-9));
}

double InstrumentConfig::unambiguous_range_m() const {
    return group_velocity_mps * rep_period_ns() * 1.0e-9 / 2.0;
}

void validate(const InstrumentConfig& cfg) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0))
            throw Error(ErrorCode::ValidationError, std::string(name) + " must be positive");
    };
    auto non_negative = [](double v, const char* name) {
        if (!(v >= 0.0))
            throw Error(ErrorCode::ValidationError, std::string(name) + " must be non-negative");
    };
    positive(cfg.pulse_duration_ns, "pulse_duration_ns");
    positive(cfg.peak_power_w, "peak_power_w");
    positive(cfg.rep_rate_khz, "rep_rate_khz");
    positive(cfg.group_velocity_mps, "group_velocity_mps");
    positive(cfg.bin_width_ns, "bin_width_ns");
    if (!(cfg.detector_efficiency > 0.0 && cfg.detector_efficiency <= 1.0))
        throw Error(ErrorCode::ValidationError, "detector_efficiency must lie in (0, 1]");
    non_negative(cfg.noise_rate_cps, "noise_rate_cps");
    non_negative(cfg.dead_time_ns, "dead_time_ns");
    non_negative(cfg.fbg_suppression_db, "fbg_suppression_db");
    non_negative(cfg.rayleigh_to_brillouin, "rayleigh_to_brillouin");
    non_negative(cfg.capture_coefficient, "capture_coefficient");
    if (cfg.bin_width_ns > cfg.rep_period_ns())
        throw Error(ErrorCode::ValidationError, "bin_width_ns exceeds the repetition period");
}

double capture_for_entry_rate(const InstrumentConfig& cfg, double entry_rate_cps) {
    if (!(entry_rate_cps >= 0.0))
        throw Error(ErrorCode::ValidationError, "entry rate must be non-negative");
    return entry_rate_cps / (cfg.pulse_energy_j() * cfg.detector_efficiency);
}

void validate(const ScanSchedule& schedule) {
    if (schedule.n_steps < 2)
        throw Error(ErrorCode::ValidationError, "schedule needs at least 2 steps");
    if (!(schedule.freq_step_mhz > 0.0))
        throw Error(ErrorCode::ValidationError, "freq_step_mhz must be positive");
    if (!(schedule.dwell_s > 0.0))
        throw Error(ErrorCode::ValidationError, "dwell_s must be positive");
    if (!(schedule.center_mhz > 0.0))
        throw Error(ErrorCode::ValidationError, "center_mhz must be positive");
    if (!(schedule.anchor_mhz >= 0.0))
        throw Error(ErrorCode::ValidationError, "anchor_mhz must be non-negative");
    if (schedule.voltages.size() != static_cast<size_t>(schedule.n_steps))
        throw Error(ErrorCode::ValidationError, "schedule voltages not built (size mismatch)");
    for (int i = 1; i < schedule.n_steps; ++i) {
        const double d = schedule.voltages[i] - schedule.voltages[i - 1];
        const double d0 = schedule.voltages[1] - schedule.voltages[0];
        if (!(d * d0 > 0.0))
            throw Error(ErrorCode::NonMonotone, "schedule voltages are not strictly monotone");
    }
}

void build_voltages(ScanSchedule& schedule, const calib::HysteresisMap& map) {
    if (schedule.n_steps < 2)
        throw Error(ErrorCode::ValidationError, "schedule needs at least 2 steps");
    if (!(schedule.freq_step_mhz > 0.0))
        throw Error(ErrorCode::ValidationError, "freq_step_mhz must be positive");
    schedule.voltages.resize(schedule.n_steps);
    for (int i = 0; i < schedule.n_steps; ++i) {
        const double rel = schedule.target_frequency(i) - schedule.anchor_mhz;
        schedule.voltages[i] = map.frequency_to_voltage(schedule.branch, rel);
    }
    validate(schedule);
}

double ScanHistogram::range_m(int bin) const {
    return time_to_range((bin + 0.5) * bin_width_ns, group_velocity_mps);
}

void validate(const ScanHistogram& hist) {
    if (hist.n_steps <= 0 || hist.n_bins <= 0)
        throw Error(ErrorCode::ValidationError, "histogram has empty dimensions");
    if (hist.counts.size() != static_cast<size_t>(hist.n_steps) * hist.n_bins)
        throw Error(ErrorCode::ValidationError, "histogram counts size mismatch");
    if (hist.step_frequency_mhz.size() != static_cast<size_t>(hist.n_steps))
        throw Error(ErrorCode::ValidationError, "histogram frequency axis size mismatch");
    for (double c : hist.counts)
        if (!(c >= 0.0) || !std::isfinite(c))
            throw Error(ErrorCode::ValidationError, "histogram contains negative or non-finite counts");
    for (int i = 1; i < hist.n_steps; ++i)
        if (!(hist.step_frequency_mhz[i] > hist.step_frequency_mhz[i - 1]))
            throw Error(ErrorCode::NonMonotone, "histogram step frequencies must increase strictly");
}

double time_to_range(double t_ns, double group_velocity_mps) {
    if (t_ns < 0.0)
        throw Error(ErrorCode::OutOfRange, "negative arrival time");
    return group_velocity_mps * t_ns * 1.0e-9 / 2.0;
}

double apply_dead_time(double rate_cps, double dead_time_ns) {
    if (!(rate_cps >= 0.0))
        throw Error(ErrorCode::ValidationError, "rate must be non-negative");
    if (!(dead_time_ns >= 0.0))
        throw Error(ErrorCode::ValidationError, "dead time must be non-negative");
    return rate_cps / (1.0 + rate_cps * dead_time_ns * 1.0e-9);
}

double invert_dead_time(double measured_rate_cps, double dead_time_ns) {
    if (!(measured_rate_cps >= 0.0))
        throw Error(ErrorCode::ValidationError, "rate must be non-negative");
    if (!(dead_time_ns >= 0.0))
        throw Error(ErrorCode::ValidationError, "dead time must be non-negative");
    const double loss = measured_rate_cps * dead_time_ns * 1.0e-9;
    if (loss >= 1.0)
        throw Error(ErrorCode::OutOfRange,
                    "measured rate " + std::to_string(measured_rate_cps) +
                        " cps is at or beyond the dead-time saturation limit");
    return measured_rate_cps / (1.0 - loss);
}

namespace {

/// Per-(scan step) forward response: expected signal counts per pulse for any
/// range bin, with the pulse's boxcar smear and piecewise-exponential two-way
/// attenuation integrated in closed form.  Writing P(z) for the cumulative
/// weighted backscatter integral and Q(z) for its antiderivative, the
/// bin-averaged smeared density is
///   (Q(z2) - Q(z1) - Q(z2-w) + Q(z1-w)) / (w * (z2-z1)),
/// w being the half pulse length in metres.
class RangeResponse {
  public:
    RangeResponse(const FiberProfile& profile, const InstrumentConfig& cfg,
                  const model::SensitivityModel& sens, const model::FpiEtalon& etalon,
                  double nu_center_mhz)
        : bin_dt_s_(cfg.bin_width_ns * 1.0e-9),
          bin_len_m_(cfg.group_velocity_mps * cfg.bin_width_ns * 1.0e-9 / 2.0),
          smear_m_(cfg.smear_width_m()),
          n_bins_(cfg.n_bins()) {
        const double leak = cfg.rayleigh_to_brillouin *
                            std::pow(10.0, -cfg.fbg_suppression_db / 10.0) *
                            model::eval_fpi(etalon, nu_center_mhz);
        double z = 0.0;
        double prefix_db = 0.0;
        segs_.reserve(profile.segments.size());
        for (const auto& fs : profile.segments) {
            Seg s;
            s.a = z;
            s.b = z + fs.length_m;
            s.k = 2.0 * std::log(10.0) / 10.0 * fs.attenuation_db_per_km / 1000.0;
            s.f0 = std::pow(10.0, -2.0 * prefix_db / 10.0);
            const auto line = model::line_from_environment(sens, fs.environment, 1.0);
            s.w = fs.amplitude * (model::eval_transmission(line, etalon, nu_center_mhz) + leak);
            const double len = fs.length_m;
            if (s.k > 0.0) {
                s.i_full = s.f0 * (-std::expm1(-s.k * len)) / s.k;
                s.j_full = seg_j(s, len);
            } else {
                s.i_full = s.f0 * len;
                s.j_full = s.f0 * len * len / 2.0;
            }
            segs_.push_back(s);
            z = s.b;
            prefix_db += fs.attenuation_db_per_km * fs.length_m / 1000.0;
        }
        scale_ = cfg.capture_coefficient * cfg.pulse_energy_j() * cfg.detector_efficiency *
                 bin_dt_s_ / (smear_m_ * bin_len_m_);
    }

    double counts_per_pulse(int bin) const {
        if (bin < 0 || bin >= n_bins_)
            throw Error(ErrorCode::OutOfRange,
                        "bin " + std::to_string(bin) + " outside histogram of " +
                            std::to_string(n_bins_) + " bins");
        const double z1 = bin * bin_len_m_;
        const double z2 = z1 + bin_len_m_;
        const double val = q(z2) - q(z1) - q(z2 - smear_m_) + q(z1 - smear_m_);
        return std::fmax(0.0, scale_ * val);
    }

  private:
    struct Seg {
        double a, b, k, f0, w;
        double i_full, j_full;  // cumulative integrals over the whole segment
    };

    /// J(zc) = integral_0^zc of f0*(1-exp(-k x))/k dx, stable for small k*zc.
    static double seg_j(const Seg& s, double zc) {
        const double x = s.k * zc;
        if (x < 1e-4) return s.f0 * zc * zc * 0.5 * (1.0 - x / 3.0 + x * x / 12.0);
        return s.f0 * (zc + std::expm1(-x) / s.k) / s.k;
    }

    double q(double z) const {
        if (z <= 0.0) return 0.0;
        double sum = 0.0;
        for (const auto& s : segs_) {
            if (z <= s.a) break;
            double contrib;
            if (z >= s.b) {
                contrib = s.j_full + s.i_full * (z - s.b);
            } else if (s.k > 0.0) {
                contrib = seg_j(s, z - s.a);
            } else {
                contrib = s.f0 * (z - s.a) * (z - s.a) / 2.0;
            }
            sum += s.w * contrib;
        }
        return sum;
    }

    std::vector<Seg> segs_;
    double scale_ = 0.0;
    double bin_dt_s_, bin_len_m_, smear_m_;
    int n_bins_;
};

}  // namespace

double expected_rate(const FiberProfile& profile, const InstrumentConfig& cfg,
                     const model::SensitivityModel& sens, const model::FpiEtalon& etalon,
                     double nu_center_mhz, int bin) {
    validate(profile);
    validate(cfg);
    model::validate(sens);
    model::validate(etalon);
    RangeResponse resp(profile, cfg, sens, etalon, nu_center_mhz);
    return resp.counts_per_pulse(bin);
}

ScanHistogram simulate_histogram(const FiberProfile& profile, const InstrumentConfig& cfg,
                                 const model::SensitivityModel& sens,
                                 const model::FpiEtalon& etalon, const ScanSchedule& schedule,
                                 const calib::HysteresisMap& map, std::uint64_t seed,
                                 const SimulateOptions& options) {
    validate(profile);
    validate(cfg);
    model::validate(sens);
    model::validate(etalon);
    validate(schedule);

    const double round_trip_ns = 2.0 * profile.total_length_m() / cfg.group_velocity_mps * 1.0e9;
    if (round_trip_ns > cfg.rep_period_ns())
        throw Error(ErrorCode::ConfigError,
                    "fiber of " + std::to_string(profile.total_length_m()) +
                        " m exceeds the unambiguous range " +
                        std::to_string(cfg.unambiguous_range_m()) + " m");

    ScanHistogram hist;
    hist.n_steps = schedule.n_steps;
    hist.n_bins = cfg.n_bins();
    hist.counts.assign(static_cast<size_t>(hist.n_steps) * hist.n_bins, 0.0);
    hist.voltages = schedule.voltages;
    hist.branch = schedule.branch;
    hist.sampling = options.sampling;
    hist.dwell_s = schedule.dwell_s;
    hist.bin_width_ns = cfg.bin_width_ns;
    hist.rep_period_ns = cfg.rep_period_ns();
    hist.group_velocity_mps = cfg.group_velocity_mps;
    hist.pulse_duration_ns = cfg.pulse_duration_ns;
    hist.dead_time_ns = cfg.dead_time_ns;
    hist.seed = seed;

    hist.step_frequency_mhz.resize(hist.n_steps);
    for (int i = 0; i < hist.n_steps; ++i)
        hist.step_frequency_mhz[i] =
            schedule.anchor_mhz + map.voltage_to_frequency(schedule.branch, schedule.voltages[i]);
    for (int i = 1; i < hist.n_steps; ++i)
        if (!(hist.step_frequency_mhz[i] > hist.step_frequency_mhz[i - 1]))
            throw Error(ErrorCode::NonMonotone, "mapped step frequencies are not increasing");

    const double bin_dt_s = cfg.bin_width_ns * 1.0e-9;
    const double pulses = hist.pulses();

    auto run_steps = [&](int s_begin, int s_end) {
        for (int step = s_begin; step < s_end; ++step) {
            RangeResponse resp(profile, cfg, sens, etalon, hist.step_frequency_mhz[step]);
            for (int bin = 0; bin < hist.n_bins; ++bin) {
                const double sig_per_pulse = resp.counts_per_pulse(bin);
                double rate = sig_per_pulse / bin_dt_s + cfg.noise_rate_cps;
                if (cfg.dead_time_ns > 0.0) rate = apply_dead_time(rate, cfg.dead_time_ns);
                const double mean = rate * bin_dt_s * pulses;
                if (options.sampling == Sampling::poisson) {
                    CellRng rng(seed, static_cast<std::uint64_t>(step),
                                static_cast<std::uint64_t>(bin));
                    hist.at(step, bin) = static_cast<double>(sample_poisson(rng, mean));
                } else {
                    hist.at(step, bin) = mean;
                }
            }
        }
    };

    int n_threads = options.threads;
    if (n_threads == 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, hist.n_steps);
    if (n_threads == 1) {
        run_steps(0, hist.n_steps);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors;
        const int chunk = (hist.n_steps + n_threads - 1) / n_threads;
        errors.resize(n_threads);
        for (int t = 0; t < n_threads; ++t) {
            const int s0 = t * chunk;
            const int s1 = std::min(hist.n_steps, s0 + chunk);
            if (s0 >= s1) break;
            pool.emplace_back([&, t, s0, s1] {
                try {
                    run_steps(s0, s1);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    validate(hist);
    return hist;
}

}  // namespace botdr::scan
