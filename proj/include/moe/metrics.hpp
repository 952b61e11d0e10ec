#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moe/types.hpp"

namespace moe {

/// Voronoi cells of fitted components around the true components, in the
/// parameter space theta = (beta1, a, b, sigma).
struct VoronoiAssignment {
    std::vector<std::vector<std::size_t>> cells;  // one per true component, ascending
    std::vector<std::size_t> owner;               // owner[i] = true index of fitted component i

    std::size_t true_order() const noexcept { return cells.size(); }
    std::size_t fitted_order() const noexcept { return owner.size(); }
};

/// Euclidean nearest-center assignment on the concatenated (beta1, a, b,
/// sigma); ties go to the smaller true index; empty cells are allowed.
VoronoiAssignment assign_voronoi(const MixingMeasure& fit, const MixingMeasure& truth);

/// Identity assignment for two measures of equal order.
VoronoiAssignment identity_assignment(std::size_t k);

/// Re-expresses a fitted measure in the gauge of the truth. A common shift
/// of every (beta0, beta1) leaves all conditional densities unchanged, so the
/// shift is chosen to make the cell of the truth's pinned (last) component
/// carry log-sum of exp(beta0) equal to the true beta0 and an
/// exp(beta0)-weighted mean slope equal to the true beta1. Cells are
/// recomputed after the shift until stable. Returns `fit` unchanged when
/// that cell is empty.
MixingMeasure align_gauge(const MixingMeasure& fit, const MixingMeasure& truth);

/// Same shift rule pooled over the cells of the true `anchors`: the union of
/// those cells matches the log-sum of exp(beta0) and the exp(beta0)-weighted
/// mean slope of the anchored true components. Anchoring on components that
/// are actually selected somewhere keeps the gauge tied to identifiable gates.
MixingMeasure align_gauge(const MixingMeasure& fit, const MixingMeasure& truth,
                          std::span<const std::size_t> anchors);

/// Breakdown of one summand of a Voronoi loss.
struct CellTerm {
    std::size_t true_index = 0;
    std::vector<std::size_t> members;
    double parameter_term = 0.0;  // sum_i exp(beta0_i) * (powered parameter differences)
    double weight_term = 0.0;     // |sum_i exp(beta0_i) - exp(beta0*_j)|
    double total() const noexcept { return parameter_term + weight_term; }
};

struct LossReport {
    double value = 0.0;
    std::vector<std::size_t> argmax_subset;
    std::vector<CellTerm> per_cell_terms;  // terms of the argmax subset, in subset order

    /// JSON document with fields value, argmax_subset, per_cell_terms.
    std::string to_json() const;
};

/// Exponents applied to |delta beta1|, |delta a|, |delta b|, |delta sigma| for a
/// cell holding `cell_size` fitted components.
struct TermExponents {
    double beta1 = 1.0;
    double a = 1.0;
    double b = 1.0;
    double sigma = 1.0;
};
using ExponentRule = std::function<TermExponents(std::size_t cell_size)>;
using RbarFn = std::function<int(int cell_size)>;

enum class LossRestriction {
    Full,
    /// Drop the gating-slope differences; keep expert differences and the
    /// weight-aggregation term.
    ExpertAndWeight,
    /// Keep only the exp(beta0)-weighted expert differences.
    ExpertOnly,
};

struct LossOptions {
    LossRestriction restrict = LossRestriction::Full;
    /// If set, only K-subsets (ascending true indices) accepted by the filter
    /// take part in the outer maximum.
    std::function<bool(std::span<const std::size_t>)> subset_filter;
};

/// Generic Voronoi loss: max over K-subsets of true indices of the summed
/// cell terms under the given exponent rule.
LossReport voronoi_loss(const MixingMeasure& fit, const MixingMeasure& truth, std::size_t K,
                        const ExponentRule& rule, const LossOptions& opts = {});
LossReport voronoi_loss(const MixingMeasure& fit, const MixingMeasure& truth, const VoronoiAssignment& cells,
                        std::size_t K, const ExponentRule& rule, const LossOptions& opts = {});

/// Exact-specified loss: first powers everywhere.
LossReport loss_d1(const MixingMeasure& fit, const MixingMeasure& truth, std::size_t K,
                   const LossOptions& opts = {});
/// Over-specified Gaussian loss: cells of size m > 1 use rbar(m) on beta1, b
/// and rbar(m)/2 on a, sigma.
LossReport loss_d2(const MixingMeasure& fit, const MixingMeasure& truth, std::size_t K, const RbarFn& rbar,
                   const LossOptions& opts = {});
/// Over-specified strongly identifiable loss: squares on cells of size > 1.
LossReport loss_d3(const MixingMeasure& fit, const MixingMeasure& truth, std::size_t K,
                   const LossOptions& opts = {});

/// Subset filter keeping the K-subsets whose true region has Monte-Carlo
/// mass >= 2 / n_mc under x uniform on `box`.
std::function<bool(std::span<const std::size_t>)> positive_mass_filter(const MixingMeasure& truth,
                                                                        std::size_t K, const Box& box,
                                                                        std::size_t n_mc, std::uint64_t seed);

/// Sorted true indices belonging to at least one K-subset with positive mass.
std::vector<std::size_t> positive_mass_indices(const MixingMeasure& truth, std::size_t K, const Box& box,
                                               std::size_t n_mc, std::uint64_t seed);

// ---------------------------------------------------------------- Hellinger

/// Grid spanning [min mu - w*max sigma, max mu + w*max sigma] over every
/// component of both measures at x, with w = 8 (Gaussian), 40 (Laplace) or
/// 60 (Student-t).
Vec default_y_grid(const MixingMeasure& a, const MixingMeasure& b, std::span<const double> x,
                   std::size_t points = 2001);

/// Conditional density of G at x evaluated on the grid.
Vec density_on_grid(const MixingMeasure& G, std::size_t K, std::span<const double> x, std::span<const double> grid);

/// sqrt(1/2 * trapezoid((sqrt g_a - sqrt g_b)^2)) clipped to [0, 1].
double hellinger_pointwise(const MixingMeasure& a, std::size_t Ka, const MixingMeasure& b, std::size_t Kb,
                           std::span<const double> x, std::span<const double> y_grid);
/// Same with default_y_grid(a, b, x).
double hellinger_pointwise(const MixingMeasure& a, std::size_t Ka, const MixingMeasure& b, std::size_t Kb,
                           std::span<const double> x);

struct HellingerEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo average of the pointwise Hellinger distance over x uniform on
/// `box`. Sample j is drawn from substream (seed, j / 256) so the estimate
/// does not depend on `threads`.
HellingerEstimate expected_hellinger(const MixingMeasure& a, std::size_t Ka, const MixingMeasure& b,
                                     std::size_t Kb, const Box& box, std::size_t n_mc, std::uint64_t seed,
                                     std::size_t grid_points = 2001, std::size_t threads = 1);

}  // namespace moe
