#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "moe/types.hpp"

namespace moe {

/// Initialisation around a reference measure. cell_plan[i] is the true
/// component that fitted component i is drawn around.
struct InitSpec {
    MixingMeasure truth;
    std::vector<std::size_t> cell_plan;
    double noise_std = 0.05;

    void validate() const;
};

/// Fitted indices 0..k*-1 seed cells 0..k*-1; every further index goes to a
/// uniformly drawn cell, so all cells are nonempty. k == k* gives the identity.
std::vector<std::size_t> random_cell_plan(std::size_t k, std::size_t k_true, std::uint64_t seed);

/// Copies each planned true component and adds N(0, noise_std^2) jitter to
/// beta0, beta1, a and b, and to log sigma.
MixingMeasure init_measure(const InitSpec& spec, std::uint64_t seed);

enum class GatingMode {
    /// Per-component Newton step on the selection-fixed surrogate, scaled by lr.
    Newton,
    /// Plain gradient step scaled by lr.
    Gradient,
};

struct FitConfig {
    std::size_t k = 2;
    std::size_t K = 2;
    double tol = 1e-6;
    std::size_t max_iters = 2000;
    GatingMode gating_mode = GatingMode::Gradient;
    double gating_lr = 0.1;
    std::size_t gating_steps_per_m = 5;
    double sigma_floor = 1e-3;
    std::size_t laplace_irls_iters = 10;
    std::size_t student_t_inner_iters = 5;
    std::optional<InitSpec> init;
    /// Used instead of `init` when set.
    std::optional<MixingMeasure> start;
    std::uint64_t seed = 0;

    void validate() const;
};

/// n x k responsibilities, column-major (component i occupies column i).
struct Responsibilities {
    std::size_t n = 0;
    std::size_t k = 0;
    Vec values;
    double mean_loglik = 0.0;

    double operator()(std::size_t j, std::size_t i) const { return values[i * n + j]; }
    std::span<const double> column(std::size_t i) const { return {values.data() + i * n, n}; }
};

/// Posterior expert probabilities under the top-K gate, plus the mean
/// log-likelihood. Throws DegenerateData if some sample has zero likelihood.
Responsibilities e_step(const Dataset& data, const MixingMeasure& G, std::size_t K);

/// Mean log-likelihood (1/n) sum_j log g_G(y_j | x_j).
double mean_loglik(const Dataset& data, const MixingMeasure& G, std::size_t K);

/// Closed-form (Gaussian) or iterative (Laplace, Student-t) expert updates.
/// Components whose responsibility column sums to zero are left unchanged.
std::vector<ExpertParams> m_step_experts(const Dataset& data, const Responsibilities& r, const MixingMeasure& G,
                                         const FitConfig& cfg);

/// Responsibility-weighted complete-data log-likelihood of one expert.
double expert_objective(const Dataset& data, std::span<const double> weights, const Family& family,
                        const ExpertParams& p);

/// Top-K selections frozen at some gate, n rows of K indices.
struct FrozenSelection {
    std::size_t K = 0;
    std::vector<std::size_t> idx;
};
FrozenSelection freeze_selection(const Dataset& data, const MixingMeasure& G, std::size_t K);

/// (1/n) sum_j sum_{i in S_j} r_ji log w_i(x_j) with S_j frozen.
double gating_surrogate(const Dataset& data, const Responsibilities& r, const MixingMeasure& G,
                        const FrozenSelection& sel);
/// Gradient of gating_surrogate; entry i*(d+1) is d/d beta0_i, then d/d beta1_i.
Vec gating_gradient(const Dataset& data, const Responsibilities& r, const MixingMeasure& G,
                    const FrozenSelection& sel);
/// Same objective with the selection recomputed at G; -inf if some sample
/// loses a component that carries responsibility.
double gating_objective(const Dataset& data, const Responsibilities& r, const MixingMeasure& G, std::size_t K);

/// Block ascent over (beta0_i, beta1_i). Only steps that strictly increase
/// gating_objective are accepted. K == 1 returns the gates unchanged.
std::vector<GateParams> m_step_gating(const Dataset& data, const Responsibilities& r, const MixingMeasure& G,
                                      std::size_t K, const FitConfig& cfg);

struct FitResult {
    MixingMeasure measure;
    Vec loglik_trace;
    std::size_t iterations = 0;
    bool converged = false;
    double wallclock_ms = 0.0;
};

/// EM until |change in mean log-likelihood| < tol or max_iters M-steps.
FitResult fit(const Dataset& data, const FitConfig& cfg);

}  // namespace moe
