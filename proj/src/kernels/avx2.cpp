// Compiled with -mavx2 only (no FMA) so every lane rounds exactly like the
// scalar reference in scalar.cpp.

#include "kernels_impl.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>

namespace moe::kernels::detail {

namespace {

inline double hsum(__m256d v) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, v);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

inline __m256d exp4(__m256d x) {
    const __m256d t = _mm256_mul_pd(x, _mm256_set1_pd(kLog2e));
    const __m256d n = _mm256_round_pd(t, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(n, _mm256_set1_pd(kLn2Hi)));
    r = _mm256_sub_pd(r, _mm256_mul_pd(n, _mm256_set1_pd(kLn2Lo)));
    __m256d p = _mm256_set1_pd(kExpPoly[0]);
    for (std::size_t c = 1; c < std::size(kExpPoly); ++c)
        p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(kExpPoly[c]));
    const __m256d one = _mm256_set1_pd(1.0);
    p = _mm256_add_pd(_mm256_mul_pd(p, r), one);
    p = _mm256_add_pd(_mm256_mul_pd(p, r), one);
    const __m256d biased = _mm256_add_pd(n, _mm256_set1_pd(1023.0 + kShift));
    const __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_castpd_si256(biased), 52));
    __m256d res = _mm256_mul_pd(p, scale);

    const __m256d too_small = _mm256_cmp_pd(x, _mm256_set1_pd(kExpLo), _CMP_LT_OQ);
    const __m256d too_large = _mm256_cmp_pd(x, _mm256_set1_pd(kExpHi), _CMP_GT_OQ);
    const __m256d is_nan = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
    res = _mm256_blendv_pd(res, _mm256_setzero_pd(), too_small);
    res = _mm256_blendv_pd(res, _mm256_set1_pd(std::numeric_limits<double>::infinity()), too_large);
    res = _mm256_blendv_pd(res, x, is_nan);
    return res;
}

void exp_avx2(std::span<const double> in, std::span<double> out) {
    const std::size_t n = in.size();
    const std::size_t n4 = n - n % 4;
    for (std::size_t j = 0; j < n4; j += 4) _mm256_storeu_pd(&out[j], exp4(_mm256_loadu_pd(&in[j])));
    if (n4 < n) {
        alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
        for (std::size_t j = n4; j < n; ++j) buf[j - n4] = in[j];
        _mm256_store_pd(buf, exp4(_mm256_load_pd(buf)));
        for (std::size_t j = n4; j < n; ++j) out[j] = buf[j - n4];
    }
}

void gaussian_logpdf_avx2(std::span<const double> y, std::span<const double> mu, double sigma,
                          std::span<double> out) {
    const double inv_s = 1.0 / sigma;
    const double c_s = -std::log(sigma) - kHalfLog2Pi;
    const __m256d inv = _mm256_set1_pd(inv_s);
    const __m256d c = _mm256_set1_pd(c_s);
    const __m256d half = _mm256_set1_pd(0.5);
    const std::size_t n = y.size();
    const std::size_t n4 = n - n % 4;
    for (std::size_t j = 0; j < n4; j += 4) {
        const __m256d z = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(&y[j]), _mm256_loadu_pd(&mu[j])), inv);
        _mm256_storeu_pd(&out[j], _mm256_sub_pd(c, _mm256_mul_pd(half, _mm256_mul_pd(z, z))));
    }
    for (std::size_t j = n4; j < n; ++j) {
        const double z = (y[j] - mu[j]) * inv_s;
        out[j] = c_s - 0.5 * (z * z);
    }
}

void axpy_avx2(double alpha, std::span<const double> x, std::span<double> out) {
    const __m256d a = _mm256_set1_pd(alpha);
    const std::size_t n = x.size();
    const std::size_t n4 = n - n % 4;
    for (std::size_t j = 0; j < n4; j += 4)
        _mm256_storeu_pd(&out[j], _mm256_add_pd(_mm256_loadu_pd(&out[j]),
                                                _mm256_mul_pd(a, _mm256_loadu_pd(&x[j]))));
    for (std::size_t j = n4; j < n; ++j) out[j] = out[j] + alpha * x[j];
}

double dot_avx2(std::span<const double> u, std::span<const double> v) {
    const std::size_t n = u.size();
    const std::size_t n4 = n - n % 4;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < n4; j += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(&u[j]), _mm256_loadu_pd(&v[j])));
    double total = hsum(acc);
    for (std::size_t j = n4; j < n; ++j) total = total + u[j] * v[j];
    return total;
}

double weighted_dot_avx2(std::span<const double> w, std::span<const double> u, std::span<const double> v) {
    const std::size_t n = w.size();
    const std::size_t n4 = n - n % 4;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < n4; j += 4) {
        const __m256d wu = _mm256_mul_pd(_mm256_loadu_pd(&w[j]), _mm256_loadu_pd(&u[j]));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(wu, _mm256_loadu_pd(&v[j])));
    }
    double total = hsum(acc);
    for (std::size_t j = n4; j < n; ++j) total = total + (w[j] * u[j]) * v[j];
    return total;
}

void sqrt_diff_sq_avx2(std::span<const double> fa, std::span<const double> fb, std::span<double> out) {
    const std::size_t n = fa.size();
    const std::size_t n4 = n - n % 4;
    for (std::size_t j = 0; j < n4; j += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_sqrt_pd(_mm256_loadu_pd(&fa[j])),
                                        _mm256_sqrt_pd(_mm256_loadu_pd(&fb[j])));
        _mm256_storeu_pd(&out[j], _mm256_mul_pd(d, d));
    }
    for (std::size_t j = n4; j < n; ++j) {
        const double d = std::sqrt(fa[j]) - std::sqrt(fb[j]);
        out[j] = d * d;
    }
}

double trapezoid_avx2(std::span<const double> grid, std::span<const double> g) {
    if (grid.size() < 2) return 0.0;
    const std::size_t m = grid.size() - 1;
    const std::size_t m4 = m - m % 4;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < m4; i += 4) {
        const __m256d gs = _mm256_add_pd(_mm256_loadu_pd(&g[i]), _mm256_loadu_pd(&g[i + 1]));
        const __m256d h = _mm256_sub_pd(_mm256_loadu_pd(&grid[i + 1]), _mm256_loadu_pd(&grid[i]));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(gs, h));
    }
    double total = hsum(acc);
    for (std::size_t i = m4; i < m; ++i) total = total + (g[i] + g[i + 1]) * (grid[i + 1] - grid[i]);
    return 0.5 * total;
}

}  // namespace

const KernelTable& avx2_table_unchecked() noexcept {
    static const KernelTable table{
        "avx2",           exp_avx2,          gaussian_logpdf_avx2, axpy_avx2, dot_avx2,
        weighted_dot_avx2, sqrt_diff_sq_avx2, trapezoid_avx2,
    };
    return table;
}

}  // namespace moe::kernels::detail
