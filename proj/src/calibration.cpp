#include "botdr/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "botdr/detail/linalg.hpp"
#include "botdr/rng.hpp"

namespace botdr::calib {

const char* to_string(Branch b) { return b == Branch::up ? "up" : "down"; }

Branch branch_from_string(const std::string& s) {
    if (s == "up") return Branch::up;
    if (s == "down") return Branch::down;
    throw Error(ErrorCode::ParseError, "unknown branch '" + s + "' (expected up|down)");
}

std::array<double, 4> PztModel::coeffs(Branch b) const {
    if (b == Branch::up) return up_coeffs_mhz;
    // loop bump depth*4*(v-v_min)*(v_max-v)/span^2 added to the up branch,
    // expanded into polynomial coefficients; vanishes at both sweep ends so
    // the loop closes by construction
    const double span = v_max - v_min;
    const double k = 4.0 * hysteresis_depth_mhz / (span * span);
    std::array<double, 4> c = up_coeffs_mhz;
    c[0] -= k * v_min * v_max;
    c[1] += k * (v_min + v_max);
    c[2] -= k;
    return c;
}

double PztModel::eval(Branch b, double voltage) const {
    const auto c = coeffs(b);
    return ((c[3] * voltage + c[2]) * voltage + c[1]) * voltage + c[0];
}

void validate(const PztModel& m) {
    if (!(m.v_max > m.v_min))
        throw Error(ErrorCode::ValidationError, "PZT sweep range is empty");
    // both branches must be strictly monotone in the same direction and stay
    // at positive optical frequency
    for (Branch b : {Branch::up, Branch::down}) {
        double prev = m.eval(b, m.v_min);
        const double dir = m.eval(b, m.v_max) > prev ? 1.0 : -1.0;
        for (int i = 1; i <= 256; ++i) {
            const double v = m.v_min + (m.v_max - m.v_min) * i / 256.0;
            const double f = m.eval(b, v);
            if (!(dir * (f - prev) > 0.0))
                throw Error(ErrorCode::NonMonotone,
                            std::string("PZT ") + to_string(b) + " branch is not monotone near " +
                                std::to_string(v) + " V");
            if (!(f > 0.0))
                throw Error(ErrorCode::ValidationError, "PZT model reaches non-positive frequency");
            prev = f;
        }
    }
}

void validate(const CalibrationTrace& trace) {
    const auto n = trace.voltage_v.size();
    if (n != trace.power.size())
        throw Error(ErrorCode::ValidationError, "trace voltage/power length mismatch");
    if (n < 16)
        throw Error(ErrorCode::ValidationError,
                    "trace too short (" + std::to_string(n) + " samples)");
    const double dir = trace.branch == Branch::up ? 1.0 : -1.0;
    for (size_t i = 1; i < n; ++i) {
        if (!(dir * (trace.voltage_v[i] - trace.voltage_v[i - 1]) > 0.0))
            throw Error(ErrorCode::NonMonotone,
                        std::string("trace voltages not strictly ") +
                            (trace.branch == Branch::up ? "increasing" : "decreasing") +
                            " at sample " + std::to_string(i));
        if (!std::isfinite(trace.power[i]) || !std::isfinite(trace.voltage_v[i]))
            throw Error(ErrorCode::ValidationError,
                        "non-finite trace sample at index " + std::to_string(i));
    }
}

namespace {

/// Sub-sample peak position: least-squares quadratic on log(power) over the
/// contiguous half-maximum window (noise-robust), falling back to a 3-point
/// parabola when the window is too narrow.
double refine_peak(const std::vector<double>& v, const std::vector<double>& p, size_t best) {
    const double vb = v[best];
    const double half = 0.5 * p[best];
    size_t lo = best, hi = best;
    while (lo > 0 && p[lo - 1] >= half) --lo;
    while (hi + 1 < p.size() && p[hi + 1] >= half) ++hi;

    if (hi - lo + 1 >= 5) {
        double s[5] = {0, 0, 0, 0, 0};
        double t[3] = {0, 0, 0};
        for (size_t k = lo; k <= hi; ++k) {
            const double x = v[k] - vb;
            const double y = std::log(p[k]);
            const double x2 = x * x;
            s[0] += 1.0;
            s[1] += x;
            s[2] += x2;
            s[3] += x2 * x;
            s[4] += x2 * x2;
            t[0] += y;
            t[1] += x * y;
            t[2] += x2 * y;
        }
        double a[9] = {s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]};
        double b[3] = {t[0], t[1], t[2]};
        if (detail::solve_inplace(a, b, 3) && b[2] < 0.0) {
            const double vert = vb - b[1] / (2.0 * b[2]);
            if (vert >= v[lo] && vert <= v[hi]) return vert;
        }
    }

    if (best == 0 || best + 1 >= p.size()) return vb;
    if (!(p[best - 1] > 0.0) || !(p[best + 1] > 0.0)) return vb;
    const double x0 = v[best - 1] - vb;
    const double x2 = v[best + 1] - vb;
    const double y0 = std::log(p[best - 1]);
    const double y1 = std::log(p[best]);
    const double y2 = std::log(p[best + 1]);
    const double d1 = (y1 - y0) / (-x0);
    const double d2 = (y2 - y1) / x2;
    const double curv = (d2 - d1) / (x2 - x0);
    if (!(curv < 0.0)) return vb;
    const double vert = 0.5 * x0 - d1 / (2.0 * curv);
    return vb + std::clamp(vert, x0, x2);
}

}  // namespace

std::vector<Peak> find_peaks(const CalibrationTrace& trace, double min_prominence) {
    validate(trace);
    if (!(min_prominence > 0.0) || !(min_prominence < 1.0))
        throw Error(ErrorCode::ValidationError, "min_prominence must lie in (0, 1)");

    std::vector<double> v = trace.voltage_v;
    std::vector<double> p = trace.power;
    if (trace.branch == Branch::down) {
        std::reverse(v.begin(), v.end());
        std::reverse(p.begin(), p.end());
    }

    const double pmax = *std::max_element(p.begin(), p.end());
    if (!(pmax > 0.0))
        throw Error(ErrorCode::TooFewPeaks, "trace has no positive power samples");
    const double thresh = min_prominence * pmax;

    // every contiguous run of samples above threshold is one candidate order
    std::vector<Peak> peaks;
    const size_t n = p.size();
    size_t i = 0;
    while (i < n) {
        if (p[i] < thresh) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j + 1 < n && p[j + 1] >= thresh) ++j;
        size_t best = i;
        for (size_t k = i; k <= j; ++k)
            if (p[k] > p[best]) best = k;
        if (best >= 2 && best + 2 < n) {
            Peak pk;
            pk.power = p[best];
            pk.voltage_v = refine_peak(v, p, best);
            peaks.push_back(pk);
        }
        i = j + 1;
    }

    if (peaks.size() < 3)
        throw Error(ErrorCode::TooFewPeaks, "found " + std::to_string(peaks.size()) +
                                                " transmission peaks, need at least 3");
    return peaks;
}

void assign_orders(std::vector<Peak>& peaks, double fsr_mhz) {
    if (!(fsr_mhz > 0.0))
        throw Error(ErrorCode::ValidationError, "free spectral range must be positive");
    std::sort(peaks.begin(), peaks.end(),
              [](const Peak& a, const Peak& b) { return a.voltage_v < b.voltage_v; });
    for (size_t k = 0; k < peaks.size(); ++k) {
        peaks[k].order = static_cast<int>(k);
        peaks[k].frequency_mhz = static_cast<double>(k) * fsr_mhz;
    }
}

double BranchFit::eval(double voltage) const {
    const auto& c = coeffs_mhz;
    return ((c[3] * voltage + c[2]) * voltage + c[1]) * voltage + c[0];
}

BranchFit fit_branch(const std::vector<Peak>& peaks) {
    if (peaks.size() < 4)
        throw Error(ErrorCode::InsufficientPoints,
                    "cubic branch fit needs at least 4 peaks, got " + std::to_string(peaks.size()));
    for (const auto& pk : peaks)
        if (pk.order < 0)
            throw Error(ErrorCode::ValidationError, "peaks are missing order assignments");

    BranchFit fit;
    fit.n_peaks = static_cast<int>(peaks.size());
    fit.v_min = peaks.front().voltage_v;
    fit.v_max = peaks.back().voltage_v;
    const double vc = 0.5 * (fit.v_min + fit.v_max);
    const double vs = 0.5 * (fit.v_max - fit.v_min);
    if (!(vs > 0.0))
        throw Error(ErrorCode::ValidationError, "degenerate peak span");

    // normal equations on the scaled variable u = (v - vc)/vs for conditioning
    double s[7] = {0, 0, 0, 0, 0, 0, 0};
    double t[4] = {0, 0, 0, 0};
    for (const auto& pk : peaks) {
        const double u = (pk.voltage_v - vc) / vs;
        double up = 1.0;
        for (int k = 0; k < 7; ++k) {
            s[k] += up;
            if (k < 4) t[k] += pk.frequency_mhz * up;
            up *= u;
        }
    }
    double a[16];
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) a[r * 4 + c] = s[r + c];
    double coef[4] = {t[0], t[1], t[2], t[3]};
    if (!detail::solve_inplace(a, coef, 4))
        throw Error(ErrorCode::InsufficientPoints, "branch fit normal equations are singular");

    // expand f(u(v)) back to a raw polynomial in volts
    const double b1 = 1.0 / vs;
    const double b0 = -vc / vs;  // u = b1*v + b0
    double raw[4] = {0, 0, 0, 0};
    double cur[4] = {1, 0, 0, 0};  // u^k as polynomial in v
    for (int k = 0; k < 4; ++k) {
        for (int j = 0; j < 4; ++j) raw[j] += coef[k] * cur[j];
        double nxt[4] = {0, 0, 0, 0};
        for (int j = 0; j < 3; ++j) {
            nxt[j] += cur[j] * b0;
            nxt[j + 1] += cur[j] * b1;
        }
        for (int j = 0; j < 4; ++j) cur[j] = nxt[j];
    }
    fit.coeffs_mhz = {raw[0], raw[1], raw[2], raw[3]};

    for (const auto& pk : peaks)
        fit.max_residual_mhz =
            std::fmax(fit.max_residual_mhz, std::fabs(fit.eval(pk.voltage_v) - pk.frequency_mhz));

    validate(fit);
    return fit;
}

void validate(const BranchFit& fit) {
    for (double c : fit.coeffs_mhz)
        if (!std::isfinite(c))
            throw Error(ErrorCode::ValidationError, "branch fit has non-finite coefficients");
    if (!(fit.v_max > fit.v_min))
        throw Error(ErrorCode::ValidationError, "branch fit span is empty");
    // strict monotonicity of the map over the calibrated span
    const double dir = fit.eval(fit.v_max) > fit.eval(fit.v_min) ? 1.0 : -1.0;
    for (int k = 0; k <= 512; ++k) {
        const double v = fit.v_min + (fit.v_max - fit.v_min) * k / 512.0;
        const double d =
            (3.0 * fit.coeffs_mhz[3] * v + 2.0 * fit.coeffs_mhz[2]) * v + fit.coeffs_mhz[1];
        if (!(dir * d > 0.0))
            throw Error(ErrorCode::NonMonotone,
                        "branch map derivative changes sign near " + std::to_string(v) + " V");
    }
}

const BranchFit& HysteresisMap::branch(Branch b) const {
    const auto& opt = (b == Branch::up) ? up : down;
    if (!opt)
        throw Error(ErrorCode::BranchMismatch,
                    std::string("map does not contain the ") + to_string(b) + " branch");
    return *opt;
}

double HysteresisMap::voltage_to_frequency(Branch b, double voltage) const {
    const BranchFit& fit = branch(b);
    const double slack = 1e-9 * (fit.v_max - fit.v_min);
    if (voltage < fit.v_min - slack || voltage > fit.v_max + slack)
        throw Error(ErrorCode::OutOfCalibratedRange,
                    std::to_string(voltage) + " V outside calibrated span [" +
                        std::to_string(fit.v_min) + ", " + std::to_string(fit.v_max) + "]");
    return fit.eval(voltage);
}

double HysteresisMap::frequency_to_voltage(Branch b, double frequency_mhz) const {
    const BranchFit& fit = branch(b);
    double f_lo = fit.eval(fit.v_min);
    double f_hi = fit.eval(fit.v_max);
    const bool increasing = f_hi > f_lo;
    if (!increasing) std::swap(f_lo, f_hi);
    const double slack = 1e-9 * (f_hi - f_lo);
    if (frequency_mhz < f_lo - slack || frequency_mhz > f_hi + slack)
        throw Error(ErrorCode::OutOfCalibratedRange,
                    std::to_string(frequency_mhz) + " MHz outside calibrated span [" +
                        std::to_string(f_lo) + ", " + std::to_string(f_hi) + "] MHz");

    double lo = fit.v_min, hi = fit.v_max;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * (fit.v_max - fit.v_min); ++it) {
        const double mid = 0.5 * (lo + hi);
        const bool below = (fit.eval(mid) < frequency_mhz) == increasing;
        (below ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

HysteresisMap calibrate_branch(const CalibrationTrace& trace, double fsr_mhz,
                               double min_prominence) {
    auto peaks = find_peaks(trace, min_prominence);
    assign_orders(peaks, fsr_mhz);
    HysteresisMap map;
    map.fsr_mhz = fsr_mhz;
    if (trace.branch == Branch::up)
        map.up = fit_branch(peaks);
    else
        map.down = fit_branch(peaks);
    return map;
}

CalibrationTrace simulate_calibration_trace(const PztModel& pzt, const model::FpiEtalon& etalon,
                                            Branch branch, int n_samples, TraceNoise noise,
                                            std::uint64_t seed) {
    validate(pzt);
    model::validate(etalon);
    if (n_samples < 64)
        throw Error(ErrorCode::ValidationError, "calibration sweep needs at least 64 samples");

    // widen the evaluated comb so every order inside the sweep is present,
    // whatever comb_orders the scan-time etalon uses
    const double f_end_a = std::fabs(pzt.eval(branch, pzt.v_min));
    const double f_end_b = std::fabs(pzt.eval(branch, pzt.v_max));
    model::FpiEtalon folded = etalon;
    folded.comb_orders = std::max(
        etalon.comb_orders,
        static_cast<int>(std::ceil(std::fmax(f_end_a, f_end_b) / etalon.fsr_mhz)) + 2);

    CalibrationTrace trace;
    trace.branch = branch;
    trace.voltage_v.resize(n_samples);
    trace.power.resize(n_samples);
    CellRng rng(seed);
    const double span = pzt.v_max - pzt.v_min;
    for (int i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / (n_samples - 1);
        const double v = branch == Branch::up ? pzt.v_min + span * t : pzt.v_max - span * t;
        double pw = model::eval_fpi(folded, pzt.eval(branch, v));
        if (noise.multiplicative > 0.0) pw *= 1.0 + noise.multiplicative * rng.next_normal();
        if (noise.additive > 0.0) pw += noise.additive * rng.next_normal();
        trace.voltage_v[i] = v;
        trace.power[i] = pw;
    }
    return trace;
}

}  // namespace botdr::calib
