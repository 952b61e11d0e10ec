#include "moe/partition.hpp"

#include <algorithm>
#include <limits>

#include "moe/model.hpp"
#include "moe/rng.hpp"

namespace moe {

namespace {

constexpr std::size_t kChunk = 4096;
constexpr std::uint64_t kMaxRegions = 1'000'000;

void draw_box(const Box& box, Rng& rng, Vec& x) {
    for (std::size_t p = 0; p < box.dim(); ++p) x[p] = box.lo[p] + (box.hi[p] - box.lo[p]) * uniform01(rng);
}

// Calls fn(x) for n_mc points drawn from counter-based chunk streams.
template <class Fn>
void for_each_point(const Box& box, std::size_t n_mc, std::uint64_t seed, Fn&& fn) {
    Vec x(box.dim());
    for (std::size_t start = 0; start < n_mc; start += kChunk) {
        Rng rng = substream(seed, start / kChunk);
        const std::size_t end = std::min(n_mc, start + kChunk);
        for (std::size_t j = start; j < end; ++j) {
            draw_box(box, rng, x);
            fn(std::span<const double>(x));
        }
    }
}

std::vector<std::size_t> complement_of(const std::vector<std::size_t>& selected, std::size_t k) {
    std::vector<std::size_t> out;
    out.reserve(k - selected.size());
    std::size_t s = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (s < selected.size() && selected[s] == i) ++s;
        else out.push_back(i);
    }
    return out;
}

}  // namespace

RegionSpec region_of(const MixingMeasure& G, std::span<const double> x, std::size_t K) {
    RegionSpec spec;
    spec.selected = topk_select(gate_logits(G, x), K);
    spec.complement = complement_of(spec.selected, G.order());
    return spec;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        // r * (n - k + i) / i is always integral; guard the multiplication.
        const std::uint64_t num = n - k + i;
        if (r > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
        r = r * num / i;
    }
    return r;
}

std::vector<RegionSpec> enumerate_regions(std::size_t k, std::size_t K) {
    if (K < 1 || K > k) throw InvalidArgument("enumerate_regions requires 1 <= K <= k");
    if (binomial(k, K) > kMaxRegions)
        throw InvalidArgument("C(" + std::to_string(k) + ", " + std::to_string(K) + ") exceeds 1e6 regions");
    std::vector<RegionSpec> out;
    std::vector<std::size_t> sel(K);
    for (std::size_t i = 0; i < K; ++i) sel[i] = i;
    for (;;) {
        out.push_back({sel, complement_of(sel, k)});
        std::size_t pos = K;
        while (pos > 0 && sel[pos - 1] == k - K + (pos - 1)) --pos;
        if (pos == 0) break;
        ++sel[pos - 1];
        for (std::size_t i = pos; i < K; ++i) sel[i] = sel[i - 1] + 1;
    }
    return out;
}

double region_mass(const MixingMeasure& G, const RegionSpec& spec, std::size_t K, const Box& box,
                   std::size_t n_mc, std::uint64_t seed) {
    if (n_mc == 0) throw InvalidArgument("n_mc must be >= 1");
    if (box.dim() != G.dim()) throw InvalidArgument("box dimension does not match the measure");
    std::size_t hits = 0;
    for_each_point(box, n_mc, seed, [&](std::span<const double> x) {
        if (topk_select(gate_logits(G, x), K) == spec.selected) ++hits;
    });
    return static_cast<double>(hits) / static_cast<double>(n_mc);
}

bool negligible_mass(double mass, std::size_t n_mc) noexcept {
    return mass < 2.0 / static_cast<double>(n_mc);
}

double partition_match_rate(const MixingMeasure& truth, const MixingMeasure& fit,
                            const VoronoiAssignment& assignment, std::size_t K, std::size_t Kbar,
                            const Box& box, std::size_t n_mc, std::uint64_t seed) {
    if (n_mc == 0) throw InvalidArgument("n_mc must be >= 1");
    if (assignment.true_order() != truth.order() || assignment.fitted_order() != fit.order())
        throw InvalidArgument("assignment does not match the measures");
    if (box.dim() != truth.dim() || fit.dim() != truth.dim())
        throw InvalidArgument("dimension mismatch between measures and box");
    std::size_t hits = 0;
    std::vector<std::size_t> expected;
    for_each_point(box, n_mc, seed, [&](std::span<const double> x) {
        const auto true_sel = topk_select(gate_logits(truth, x), K);
        const auto fit_sel = topk_select(gate_logits(fit, x), Kbar);
        expected.clear();
        for (std::size_t j : true_sel)
            expected.insert(expected.end(), assignment.cells[j].begin(), assignment.cells[j].end());
        std::sort(expected.begin(), expected.end());
        if (expected == fit_sel) ++hits;
    });
    return static_cast<double>(hits) / static_cast<double>(n_mc);
}

MixingMeasure perturb_gating_slopes(const MixingMeasure& G, double eta, std::uint64_t seed) {
    Rng rng(hash_seed(seed, 0x9e7bULL));
    auto comps = G.components();
    for (auto& c : comps)
        for (double& z : c.gate.beta1) z += (rng() & 1U) ? eta : -eta;
    return MixingMeasure(G.family(), std::move(comps));
}

}  // namespace moe
