#include "kernels_impl.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace moe::kernels {

namespace {

using namespace detail;

double exp_one(double x) {
    if (std::isnan(x)) return x;
    if (x < kExpLo) return 0.0;
    if (x > kExpHi) return std::numeric_limits<double>::infinity();
    const double t = x * kLog2e;
    const double n = std::nearbyint(t);
    double r = x - n * kLn2Hi;
    r = r - n * kLn2Lo;
    double p = kExpPoly[0];
    for (std::size_t c = 1; c < std::size(kExpPoly); ++c) p = p * r + kExpPoly[c];
    p = p * r + 1.0;
    p = p * r + 1.0;
    const double biased = n + (1023.0 + kShift);
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(biased) << 52;
    return p * std::bit_cast<double>(bits);
}

void exp_scalar(std::span<const double> in, std::span<double> out) {
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = exp_one(in[j]);
}

void gaussian_logpdf_scalar(std::span<const double> y, std::span<const double> mu, double sigma,
                            std::span<double> out) {
    const double inv = 1.0 / sigma;
    const double c = -std::log(sigma) - kHalfLog2Pi;
    for (std::size_t j = 0; j < y.size(); ++j) {
        const double z = (y[j] - mu[j]) * inv;
        out[j] = c - 0.5 * (z * z);
    }
}

void axpy_scalar(double alpha, std::span<const double> x, std::span<double> out) {
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = out[j] + alpha * x[j];
}

double dot_scalar(std::span<const double> u, std::span<const double> v) {
    const std::size_t n = u.size();
    const std::size_t n4 = n - n % 4;
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < n4; j += 4)
        for (std::size_t l = 0; l < 4; ++l) s[l] = s[l] + u[j + l] * v[j + l];
    double total = (s[0] + s[1]) + (s[2] + s[3]);
    for (std::size_t j = n4; j < n; ++j) total = total + u[j] * v[j];
    return total;
}

double weighted_dot_scalar(std::span<const double> w, std::span<const double> u,
                           std::span<const double> v) {
    const std::size_t n = w.size();
    const std::size_t n4 = n - n % 4;
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < n4; j += 4)
        for (std::size_t l = 0; l < 4; ++l) s[l] = s[l] + (w[j + l] * u[j + l]) * v[j + l];
    double total = (s[0] + s[1]) + (s[2] + s[3]);
    for (std::size_t j = n4; j < n; ++j) total = total + (w[j] * u[j]) * v[j];
    return total;
}

void sqrt_diff_sq_scalar(std::span<const double> fa, std::span<const double> fb, std::span<double> out) {
    for (std::size_t j = 0; j < fa.size(); ++j) {
        const double d = std::sqrt(fa[j]) - std::sqrt(fb[j]);
        out[j] = d * d;
    }
}

double trapezoid_scalar(std::span<const double> grid, std::span<const double> g) {
    if (grid.size() < 2) return 0.0;
    const std::size_t m = grid.size() - 1;  // intervals
    const std::size_t m4 = m - m % 4;
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < m4; j += 4)
        for (std::size_t l = 0; l < 4; ++l) {
            const std::size_t i = j + l;
            s[l] = s[l] + (g[i] + g[i + 1]) * (grid[i + 1] - grid[i]);
        }
    double total = (s[0] + s[1]) + (s[2] + s[3]);
    for (std::size_t i = m4; i < m; ++i) total = total + (g[i] + g[i + 1]) * (grid[i + 1] - grid[i]);
    return 0.5 * total;
}

}  // namespace

const KernelTable& scalar_table() noexcept {
    static const KernelTable table{
        "scalar",        exp_scalar,          gaussian_logpdf_scalar, axpy_scalar, dot_scalar,
        weighted_dot_scalar, sqrt_diff_sq_scalar, trapezoid_scalar,
    };
    return table;
}

}  // namespace moe::kernels
