#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "moe/metrics.hpp"
#include "moe/types.hpp"

namespace moe {

/// A K-subset of expert indices together with its complement. Regions are
/// identified by the selected set, not by any ordering inside it.
struct RegionSpec {
    std::vector<std::size_t> selected;    // ascending
    std::vector<std::size_t> complement;  // ascending

    bool operator==(const RegionSpec&) const = default;
};

/// Region whose selected set is the top-K of the gating logits at x.
RegionSpec region_of(const MixingMeasure& G, std::span<const double> x, std::size_t K);

/// Binomial coefficient; saturates at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept;

/// All C(k, K) subsets in lexicographic order. Throws InvalidArgument for
/// K outside [1, k] and when C(k, K) exceeds 1e6.
std::vector<RegionSpec> enumerate_regions(std::size_t k, std::size_t K);

/// Monte-Carlo mass of a region for x uniform on `box`.
double region_mass(const MixingMeasure& G, const RegionSpec& spec, std::size_t K, const Box& box,
                   std::size_t n_mc, std::uint64_t seed);

/// True when the estimated mass is below 2 / n_mc.
bool negligible_mass(double mass, std::size_t n_mc) noexcept;

/// Fraction of sampled x at which the fitted top-Kbar set equals the union of
/// the cells (under `assignment`) of the true top-K set. With the identity
/// assignment and Kbar == K this is plain selected-set agreement.
double partition_match_rate(const MixingMeasure& truth, const MixingMeasure& fit,
                            const VoronoiAssignment& assignment, std::size_t K, std::size_t Kbar,
                            const Box& box, std::size_t n_mc, std::uint64_t seed);

/// Copy of G with every gating slope coordinate moved by +/- eta (signs from
/// the seed). Used by the partition-matching checks.
MixingMeasure perturb_gating_slopes(const MixingMeasure& G, double eta, std::uint64_t seed);

}  // namespace moe
