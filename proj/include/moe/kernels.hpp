#pragma once

// Data-parallel inner loops used by the E-step, the M-step moment sums and
// the Hellinger quadrature.
//
// Every kernel exists as a scalar reference and (on x86-64) an AVX2 variant.
// The variants are bitwise identical: elementwise kernels perform the same
// IEEE operations in the same order, and reductions use four interleaved
// partial sums combined as (s0 + s1) + (s2 + s3) followed by a sequential
// tail. This keeps results independent of the dispatch choice, so sweep
// outputs stay byte-reproducible across machines.

#include <cstddef>
#include <span>
#include <string_view>

namespace moe::kernels {

struct KernelTable {
    const char* name;

    /// out[j] = exp(in[j]); exact 0 below -708, +inf above 709.
    void (*exp)(std::span<const double> in, std::span<double> out);

    /// out[j] = log N(y[j] | mu[j], sigma^2).
    void (*gaussian_logpdf)(std::span<const double> y, std::span<const double> mu,
                            double sigma, std::span<double> out);

    /// out[j] += alpha * x[j]
    void (*axpy)(double alpha, std::span<const double> x, std::span<double> out);

    /// sum_j u[j] * v[j]
    double (*dot)(std::span<const double> u, std::span<const double> v);

    /// sum_j w[j] * u[j] * v[j]
    double (*weighted_dot)(std::span<const double> w, std::span<const double> u,
                           std::span<const double> v);

    /// out[j] = (sqrt(fa[j]) - sqrt(fb[j]))^2
    void (*sqrt_diff_sq)(std::span<const double> fa, std::span<const double> fb,
                         std::span<double> out);

    /// Trapezoid rule of g over the (nonuniform) grid.
    double (*trapezoid)(std::span<const double> grid, std::span<const double> g);
};

const KernelTable& scalar_table() noexcept;

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_table() noexcept;

/// Table used by the library. Chosen once: the MOE_KERNELS environment
/// variable ("scalar" or "avx2") wins, otherwise AVX2 when available.
const KernelTable& active() noexcept;

/// Override the active table by name; returns false if unavailable.
bool select(std::string_view name) noexcept;

inline void exp(std::span<const double> in, std::span<double> out) { active().exp(in, out); }
inline void gaussian_logpdf(std::span<const double> y, std::span<const double> mu, double sigma,
                            std::span<double> out) {
    active().gaussian_logpdf(y, mu, sigma, out);
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> out) {
    active().axpy(alpha, x, out);
}
inline double dot(std::span<const double> u, std::span<const double> v) { return active().dot(u, v); }
inline double weighted_dot(std::span<const double> w, std::span<const double> u,
                           std::span<const double> v) {
    return active().weighted_dot(w, u, v);
}
inline void sqrt_diff_sq(std::span<const double> fa, std::span<const double> fb, std::span<double> out) {
    active().sqrt_diff_sq(fa, fb, out);
}
inline double trapezoid(std::span<const double> grid, std::span<const double> g) {
    return active().trapezoid(grid, g);
}

namespace detail {
// Shared constants of the exp approximation; both variants must use these.
inline constexpr double kExpLo = -708.0;
inline constexpr double kExpHi = 709.0;
inline constexpr double kLog2e = 1.4426950408889634074;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kShift = 0x1.0p52;
// Taylor coefficients 1/k!, k = 13 down to 2.
inline constexpr double kExpPoly[] = {
    1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
    1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
    1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
};
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;
}  // namespace detail

}  // namespace moe::kernels
