#pragma once

#include <cmath>
#include <cstdint>

namespace botdr {

/// One splitmix64 step: advances `state` and returns the next output word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Deterministic per-cell random stream.  The state is derived from
/// (run seed, scan step, range bin) through repeated splitmix64 avalanching,
/// so every histogram cell owns an independent substream and the draw for a
/// cell does not depend on execution order or thread count.
class CellRng {
  public:
    CellRng(std::uint64_t seed, std::uint64_t step, std::uint64_t bin) {
        state_ = seed;
        (void)splitmix64(state_);
        state_ ^= 0xD6E8FEB86659FD93ull * (step + 1);
        (void)splitmix64(state_);
        state_ ^= 0xCA5A826395121157ull * (bin + 1);
        (void)splitmix64(state_);
    }

    explicit CellRng(std::uint64_t seed) : state_(seed) { (void)splitmix64(state_); }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double strictly inside (0, 1); never 0, safe under log().
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    /// Standard normal via the polar method (pairs cached).
    double next_normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_double() - 1.0;
            v = 2.0 * next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * f;
        have_cached_ = true;
        return u * f;
    }

  private:
    std::uint64_t state_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

namespace detail {

/// Transformed-rejection Poisson sampler (Hormann's PTRD), valid for mean >= 10.
inline std::int64_t poisson_ptrd(CellRng& rng, double mean) {
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);

    for (;;) {
        double u = rng.next_double() - 0.5;
        double v = rng.next_double();
        double us = 0.5 - std::fabs(u);
        double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        std::int64_t k = static_cast<std::int64_t>(kf);
        double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        double rhs = -mean + kf * log_mean - std::lgamma(kf + 1.0);
        if (lhs <= rhs) return k;
    }
}

/// Knuth's multiplication method, cheap and exact for small means.
inline std::int64_t poisson_small(CellRng& rng, double mean) {
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double p = rng.next_double();
    while (p > limit) {
        ++k;
        p *= rng.next_double();
    }
    return k;
}

}  // namespace detail

/// Poisson draw with a fixed, implementation-independent algorithm (the
/// standard library sampler is implementation-defined, which would break
/// byte-identical reproducibility).  Non-positive means yield zero.
inline std::int64_t sample_poisson(CellRng& rng, double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean < 10.0) return detail::poisson_small(rng, mean);
    return detail::poisson_ptrd(rng, mean);
}

}  // namespace botdr
