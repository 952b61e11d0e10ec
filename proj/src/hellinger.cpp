#include <algorithm>
#include <cmath>
#include <limits>

#include "moe/kernels.hpp"
#include "moe/metrics.hpp"
#include "moe/model.hpp"
#include "moe/parallel.hpp"
#include "moe/rng.hpp"

namespace moe {

namespace {

constexpr std::size_t kChunk = 256;

double tail_width(const Family& f) {
    switch (f.kind) {
        case FamilyKind::Gaussian: return 8.0;
        case FamilyKind::Laplace: return 40.0;
        case FamilyKind::StudentT: return 60.0;
    }
    return 8.0;
}

}  // namespace

Vec default_y_grid(const MixingMeasure& a, const MixingMeasure& b, std::span<const double> x,
                   std::size_t points) {
    if (points < 2) throw InvalidArgument("y grid needs at least 2 points");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double smax = 0.0;
    for (const MixingMeasure* G : {&a, &b}) {
        for (const auto& c : G->components()) {
            const double mu = expert_mean(c.expert, x);
            lo = std::min(lo, mu);
            hi = std::max(hi, mu);
            smax = std::max(smax, c.expert.sigma);
        }
    }
    const double w = std::max(tail_width(a.family()), tail_width(b.family())) * smax;
    lo -= w;
    hi += w;
    Vec grid(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t t = 0; t < points; ++t) grid[t] = lo + step * static_cast<double>(t);
    grid.back() = hi;
    return grid;
}

Vec density_on_grid(const MixingMeasure& G, std::size_t K, std::span<const double> x,
                    std::span<const double> grid) {
    const GateOutput gate = gate_weights(G, x, K);
    const std::size_t n = grid.size();
    Vec out(n, 0.0), logf(n), f(n), mu;
    for (std::size_t i : gate.selected) {
        const auto& e = G[i].expert;
        const double m = expert_mean(e, x);
        const double lw = std::log(gate.weights[i]);
        if (G.family().kind == FamilyKind::Gaussian) {
            mu.assign(n, m);
            kernels::gaussian_logpdf(grid, mu, e.sigma, logf);
            for (double& v : logf) v += lw;
        } else {
            for (std::size_t t = 0; t < n; ++t) logf[t] = lw + log_family_density(G.family(), grid[t] - m, e.sigma);
        }
        kernels::exp(logf, f);
        kernels::axpy(1.0, f, out);
    }
    return out;
}

double hellinger_pointwise(const MixingMeasure& a, std::size_t Ka, const MixingMeasure& b, std::size_t Kb,
                           std::span<const double> x, std::span<const double> y_grid) {
    if (y_grid.size() < 2) throw InvalidArgument("Hellinger quadrature grid needs at least 2 points");
    const Vec fa = density_on_grid(a, Ka, x, y_grid);
    const Vec fb = density_on_grid(b, Kb, x, y_grid);
    Vec diff(y_grid.size());
    kernels::sqrt_diff_sq(fa, fb, diff);
    const double h2 = 0.5 * kernels::trapezoid(y_grid, diff);
    return std::clamp(std::sqrt(std::max(h2, 0.0)), 0.0, 1.0);
}

double hellinger_pointwise(const MixingMeasure& a, std::size_t Ka, const MixingMeasure& b, std::size_t Kb,
                           std::span<const double> x) {
    const Vec grid = default_y_grid(a, b, x);
    return hellinger_pointwise(a, Ka, b, Kb, x, grid);
}

HellingerEstimate expected_hellinger(const MixingMeasure& a, std::size_t Ka, const MixingMeasure& b,
                                     std::size_t Kb, const Box& box, std::size_t n_mc, std::uint64_t seed,
                                     std::size_t grid_points, std::size_t threads) {
    if (n_mc == 0) throw InvalidArgument("n_mc must be >= 1");
    if (box.dim() != a.dim() || b.dim() != a.dim()) throw InvalidArgument("dimension mismatch in expected_hellinger");
    Vec h(n_mc);
    const std::size_t chunks = (n_mc + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        Rng rng = substream(seed, c);
        Vec x(box.dim());
        const std::size_t end = std::min(n_mc, (c + 1) * kChunk);
        for (std::size_t j = c * kChunk; j < end; ++j) {
            for (std::size_t p = 0; p < box.dim(); ++p)
                x[p] = box.lo[p] + (box.hi[p] - box.lo[p]) * uniform01(rng);
            const Vec grid = default_y_grid(a, b, x, grid_points);
            h[j] = hellinger_pointwise(a, Ka, b, Kb, x, grid);
        }
    });
    double sum = 0.0;
    for (double v : h) sum += v;
    HellingerEstimate est;
    est.mean = sum / static_cast<double>(n_mc);
    if (n_mc > 1) {
        double ss = 0.0;
        for (double v : h) ss += (v - est.mean) * (v - est.mean);
        est.std_error = std::sqrt(ss / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc));
    }
    return est;
}

}  // namespace moe
