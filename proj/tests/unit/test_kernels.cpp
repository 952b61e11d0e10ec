#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "moe/kernels.hpp"

using moe::kernels::KernelTable;

namespace {

std::vector<double> randoms(std::size_t n, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_bits(a[i], b[i])) return false;
    return true;
}

// Lengths covering empty input, pure tails and several full vector blocks.
const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 257, 1001};

}  // namespace

TEST_CASE("scalar exp tracks std::exp to a few ulp") {
    const auto& t = moe::kernels::scalar_table();
    const auto in = randoms(20000, -700.0, 700.0, 1);
    std::vector<double> out(in.size());
    t.exp(in, out);
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double ref = std::exp(in[i]);
        CHECK(std::abs(out[i] - ref) <= 4e-16 * ref);
    }
}

TEST_CASE("exp saturates outside the finite range") {
    const auto& t = moe::kernels::scalar_table();
    const std::vector<double> in{-1000.0, -709.0, 0.0, 710.0, -std::numeric_limits<double>::infinity()};
    std::vector<double> out(in.size());
    t.exp(in, out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
    CHECK(out[2] == 1.0);
    CHECK(std::isinf(out[3]));
    CHECK(out[4] == 0.0);
}

TEST_CASE("gaussian_logpdf matches the closed form") {
    const auto& t = moe::kernels::scalar_table();
    const std::vector<double> y{0.0, 1.0, -2.5}, mu{0.0, 0.0, 1.0};
    std::vector<double> out(3);
    t.gaussian_logpdf(y, mu, 0.5, out);
    for (std::size_t i = 0; i < 3; ++i) {
        const double z = (y[i] - mu[i]) / 0.5;
        CHECK(out[i] == doctest::Approx(-0.5 * z * z - std::log(0.5) - 0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));
    }
}

TEST_CASE("reductions and trapezoid agree with naive sums") {
    const auto& t = moe::kernels::scalar_table();
    const auto u = randoms(103, -1.0, 1.0, 2), v = randoms(103, -1.0, 1.0, 3), w = randoms(103, 0.0, 1.0, 4);
    double d = 0.0, wd = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        d += u[i] * v[i];
        wd += w[i] * u[i] * v[i];
    }
    CHECK(t.dot(u, v) == doctest::Approx(d).epsilon(1e-13));
    CHECK(t.weighted_dot(w, u, v) == doctest::Approx(wd).epsilon(1e-13));

    std::vector<double> grid(101), g(101);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = static_cast<double>(i) / 100.0;
        g[i] = grid[i] * grid[i];
    }
    CHECK(t.trapezoid(grid, g) == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("avx2 variant is bitwise identical to the scalar reference") {
    const KernelTable* vec = moe::kernels::avx2_table();
    if (vec == nullptr) {
        MESSAGE("AVX2 unavailable on this machine; equivalence not exercised");
        return;
    }
    const auto& ref = moe::kernels::scalar_table();
    std::uint64_t seed = 10;
    for (std::size_t n : kLengths) {
        CAPTURE(n);
        const auto a = randoms(n, -750.0, 750.0, ++seed);
        const auto b = randoms(n, -3.0, 3.0, ++seed);
        const auto c = randoms(n, 0.0, 2.0, ++seed);
        const auto d = randoms(n, 0.0, 2.0, ++seed);
        std::vector<double> o1(n), o2(n);

        ref.exp(a, o1);
        vec->exp(a, o2);
        CHECK(same_bits(o1, o2));

        ref.gaussian_logpdf(b, c, 0.37, o1);
        vec->gaussian_logpdf(b, c, 0.37, o2);
        CHECK(same_bits(o1, o2));

        o1 = c;
        o2 = c;
        ref.axpy(1.7, d, o1);
        vec->axpy(1.7, d, o2);
        CHECK(same_bits(o1, o2));

        CHECK(same_bits(ref.dot(b, c), vec->dot(b, c)));
        CHECK(same_bits(ref.weighted_dot(d, b, c), vec->weighted_dot(d, b, c)));

        ref.sqrt_diff_sq(c, d, o1);
        vec->sqrt_diff_sq(c, d, o2);
        CHECK(same_bits(o1, o2));

        std::vector<double> grid(n);
        for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(i) * 0.01 + 0.001 * c[i];
        CHECK(same_bits(ref.trapezoid(grid, d), vec->trapezoid(grid, d)));
    }
}

TEST_CASE("select switches the active table by name") {
    const std::string before = moe::kernels::active().name;
    CHECK(moe::kernels::select("scalar"));
    CHECK(std::string(moe::kernels::active().name) == "scalar");
    CHECK_FALSE(moe::kernels::select("neon"));
    CHECK(moe::kernels::select(before));
}
