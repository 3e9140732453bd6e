#pragma once

#include <cmath>
#include <limits>

namespace botdr::detail {

/// Solve A x = b for small dense systems (row-major A, n <= ~8) by Gaussian
/// elimination with partial pivoting.  A and b are destroyed; the solution
/// lands in b.  Returns false on a (numerically) singular matrix.
inline bool solve_inplace(double* a, double* b, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::fabs(a[col * n + col]);
        for (int r = col + 1; r < n; ++r) {
            const double v = std::fabs(a[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0 || !std::isfinite(best)) return false;
        if (pivot != col) {
            for (int c = col; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] * inv;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * b[c];
        b[r] = s / a[r * n + r];
    }
    return true;
}

/// In-place Gauss-Jordan inverse for small dense matrices.  Returns false on
/// a singular matrix.
inline bool invert_inplace(double* a, int n) {
    // augmented [A | I], eliminated jointly
    constexpr int kMax = 8;
    if (n > kMax) return false;
    double aug[kMax * 2 * kMax];
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) aug[r * 2 * n + c] = a[r * n + c];
        for (int c = 0; c < n; ++c) aug[r * 2 * n + n + c] = (r == c) ? 1.0 : 0.0;
    }
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::fabs(aug[col * 2 * n + col]);
        for (int r = col + 1; r < n; ++r) {
            const double v = std::fabs(aug[r * 2 * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0 || !std::isfinite(best)) return false;
        if (pivot != col)
            for (int c = 0; c < 2 * n; ++c) std::swap(aug[col * 2 * n + c], aug[pivot * 2 * n + c]);
        const double inv = 1.0 / aug[col * 2 * n + col];
        for (int c = 0; c < 2 * n; ++c) aug[col * 2 * n + c] *= inv;
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = aug[r * 2 * n + col];
            if (f == 0.0) continue;
            for (int c = 0; c < 2 * n; ++c) aug[r * 2 * n + c] -= f * aug[col * 2 * n + c];
        }
    }
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) a[r * n + c] = aug[r * 2 * n + n + c];
    return true;
}

/// Spectral (2-norm) condition number of a 2x2 matrix.
inline double cond_2x2(double a, double b, double c, double d) {
    const double p = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::fmax(0.0, p * p - 4.0 * det * det));
    const double s1 = std::sqrt(0.5 * (p + disc));
    const double s2 = std::sqrt(std::fmax(0.0, 0.5 * (p - disc)));
    if (s2 <= 0.0) return std::numeric_limits<double>::infinity();
    return s1 / s2;
}

}  // namespace botdr::detail
