#include "moe/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "moe/kernels.hpp"
#include "moe/model.hpp"
#include "moe/rng.hpp"

namespace moe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Top-K of one row of a column-major n x k logit matrix, same ordering rule as
// topk_select, written into `out` ascending.
class RowSelector {
public:
    RowSelector(std::size_t k, std::size_t K) : k_(k), K_(K), order_(k) {}

    void select(const Vec& V, std::size_t n, std::size_t j, std::size_t* out) {
        if (K_ == k_) {
            for (std::size_t i = 0; i < k_; ++i) out[i] = i;
            return;
        }
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        const auto better = [&](std::size_t a, std::size_t b) {
            const double va = V[a * n + j], vb = V[b * n + j];
            return va > vb || (va == vb && a < b);
        };
        std::partial_sort(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(K_), order_.end(), better);
        std::sort(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(K_));
        std::copy_n(order_.begin(), K_, out);
    }

private:
    std::size_t k_, K_;
    std::vector<std::size_t> order_;
};

void logit_column(const Dataset& data, std::span<const double> beta1, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t p = 0; p < data.dim(); ++p) kernels::axpy(beta1[p], data.x_col(p), out);
}

Vec logit_matrix(const Dataset& data, const MixingMeasure& G) {
    const std::size_t n = data.size();
    Vec V(n * G.order());
    for (std::size_t i = 0; i < G.order(); ++i)
        logit_column(data, G[i].gate.beta1, std::span<double>(V.data() + i * n, n));
    return V;
}

void mean_column(const Dataset& data, const ExpertParams& e, std::span<double> out) {
    std::fill(out.begin(), out.end(), e.b);
    for (std::size_t p = 0; p < data.dim(); ++p) kernels::axpy(e.a[p], data.x_col(p), out);
}

double sum(std::span<const double> v) {
    double s = 0.0;
    for (double z : v) s += z;
    return s;
}

// Weighted least squares of y on (x, 1) with weights u, solved in centered
// form. A ridge is added only when the centered system is singular.
void solve_wls(const Dataset& data, std::span<const double> u, Vec& a, double& b) {
    const std::size_t n = data.size(), d = data.dim();
    const double su = sum(u);
    const auto y = data.y();
    Vec ones(n, 1.0);
    const double ybar = kernels::weighted_dot(u, y, ones) / su;
    std::vector<Vec> xc(d, Vec(n));
    Vec xbar(d);
    double trace_raw = 0.0;
    for (std::size_t p = 0; p < d; ++p) {
        const auto xp = data.x_col(p);
        xbar[p] = kernels::weighted_dot(u, xp, ones) / su;
        trace_raw += kernels::weighted_dot(u, xp, xp);
        for (std::size_t j = 0; j < n; ++j) xc[p][j] = xp[j] - xbar[p];
    }
    Vec yc(n);
    for (std::size_t j = 0; j < n; ++j) yc[j] = y[j] - ybar;

    Eigen::MatrixXd S(d, d);
    Eigen::VectorXd s(d);
    for (std::size_t p = 0; p < d; ++p) {
        s[p] = kernels::weighted_dot(u, xc[p], yc);
        for (std::size_t q = 0; q <= p; ++q) S(p, q) = S(q, p) = kernels::weighted_dot(u, xc[p], xc[q]);
    }
    const double scale = trace_raw / static_cast<double>(d);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    const auto D = ldlt.vectorD();
    const bool singular = ldlt.info() != Eigen::Success || !(D.minCoeff() > 1e-12 * std::max(scale, 1e-300));
    if (singular) {
        const double lambda = scale > 0.0 ? 1e-8 * scale : 1e-8;
        S.diagonal().array() += lambda;
        ldlt.compute(S);
    }
    const Eigen::VectorXd sol = ldlt.solve(s);
    a.assign(sol.data(), sol.data() + d);
    b = ybar;
    for (std::size_t p = 0; p < d; ++p) b -= a[p] * xbar[p];
}

void residuals(const Dataset& data, const ExpertParams& e, Vec& res) {
    res.resize(data.size());
    mean_column(data, e, res);
    const auto y = data.y();
    for (std::size_t j = 0; j < res.size(); ++j) res[j] = y[j] - res[j];
}

ExpertParams update_gaussian(const Dataset& data, std::span<const double> w, double sw, const FitConfig& cfg) {
    ExpertParams e;
    solve_wls(data, w, e.a, e.b);
    Vec res;
    residuals(data, e, res);
    e.sigma = std::max(std::sqrt(kernels::weighted_dot(w, res, res) / sw), cfg.sigma_floor);
    return e;
}

ExpertParams update_laplace(const Dataset& data, std::span<const double> w, double sw, const ExpertParams& cur,
                            const FitConfig& cfg) {
    ExpertParams e = cur;
    Vec res, u(data.size());
    for (std::size_t it = 0; it < cfg.laplace_irls_iters; ++it) {
        residuals(data, e, res);
        for (std::size_t j = 0; j < u.size(); ++j) u[j] = w[j] / std::max(std::abs(res[j]), 1e-12);
        if (!(sum(u) > 0.0)) break;
        solve_wls(data, u, e.a, e.b);
    }
    residuals(data, e, res);
    double mad = 0.0;
    for (std::size_t j = 0; j < res.size(); ++j) mad += w[j] * std::abs(res[j]);
    e.sigma = std::max(mad / sw, cfg.sigma_floor);
    return e;
}

ExpertParams update_student_t(const Dataset& data, std::span<const double> w, double sw, const ExpertParams& cur,
                              double nu, const FitConfig& cfg) {
    ExpertParams e = cur;
    Vec res, u(data.size());
    residuals(data, e, res);
    for (std::size_t it = 0; it < cfg.student_t_inner_iters; ++it) {
        for (std::size_t j = 0; j < u.size(); ++j) {
            const double z = res[j] / e.sigma;
            u[j] = w[j] * (nu + 1.0) / (nu + z * z);
        }
        solve_wls(data, u, e.a, e.b);
        residuals(data, e, res);
        e.sigma = std::max(std::sqrt(kernels::weighted_dot(u, res, res) / sw), cfg.sigma_floor);
    }
    return e;
}

// Gating objective on a logit matrix. With `frozen` the selection is taken
// from it; otherwise it is recomputed and the result is -inf when a sample
// drops a component that carries responsibility.
double gate_q(const Dataset& data, const Responsibilities& r, const Vec& beta0, const Vec& V, std::size_t K,
              const FrozenSelection* frozen) {
    const std::size_t n = data.size(), k = beta0.size();
    RowSelector selector(k, K);
    std::vector<std::size_t> sel(K);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (frozen != nullptr) {
            std::copy_n(frozen->idx.begin() + static_cast<std::ptrdiff_t>(j * K), K, sel.begin());
        } else {
            selector.select(V, n, j, sel.data());
            std::size_t carried = 0, kept = 0;
            for (std::size_t i = 0; i < k; ++i) carried += r.values[i * n + j] > 0.0;
            for (std::size_t s : sel) kept += r.values[s * n + j] > 0.0;
            if (kept < carried) return kNegInf;
        }
        double mx = kNegInf;
        for (std::size_t s : sel) mx = std::max(mx, V[s * n + j] + beta0[s]);
        double z = 0.0;
        for (std::size_t s : sel) z += std::exp(V[s * n + j] + beta0[s] - mx);
        const double lse = mx + std::log(z);
        for (std::size_t s : sel) {
            const double rs = r.values[s * n + j];
            if (rs > 0.0) total += rs * (V[s * n + j] + beta0[s] - lse);
        }
    }
    return total / static_cast<double>(n);
}

Vec beta0_of(const MixingMeasure& G) {
    Vec b(G.order());
    for (std::size_t i = 0; i < G.order(); ++i) b[i] = G[i].gate.beta0;
    return b;
}

void check_shapes(const Dataset& data, const Responsibilities& r, const MixingMeasure& G) {
    if (data.dim() != G.dim()) throw InvalidArgument("dataset and measure differ in input dimension");
    if (r.n != data.size() || r.k != G.order()) throw InvalidArgument("responsibilities do not match data/measure");
}

}  // namespace

void InitSpec::validate() const {
    const std::size_t kt = truth.order();
    if (cell_plan.empty()) throw InvalidArgument("cell plan must be nonempty");
    std::vector<bool> used(kt, false);
    for (std::size_t j : cell_plan) {
        if (j >= kt) throw InvalidArgument("cell plan refers to a true component that does not exist");
        used[j] = true;
    }
    if (std::find(used.begin(), used.end(), false) != used.end())
        throw InvalidArgument("cell plan leaves a true component without fitted components");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw InvalidArgument("noise_std must be finite and >= 0");
}

std::vector<std::size_t> random_cell_plan(std::size_t k, std::size_t k_true, std::uint64_t seed) {
    if (k_true < 1 || k < k_true) throw InvalidArgument("cell plan needs k >= k* >= 1");
    std::vector<std::size_t> plan(k);
    std::iota(plan.begin(), plan.begin() + static_cast<std::ptrdiff_t>(k_true), std::size_t{0});
    Rng rng(hash_seed(seed, 0xce11ULL));
    std::uniform_int_distribution<std::size_t> pick(0, k_true - 1);
    for (std::size_t i = k_true; i < k; ++i) plan[i] = pick(rng);
    return plan;
}

MixingMeasure init_measure(const InitSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(hash_seed(seed, 0x1a17ULL));
    std::normal_distribution<double> nd(0.0, 1.0);
    const double s = spec.noise_std;
    std::vector<Component> comps;
    comps.reserve(spec.cell_plan.size());
    for (std::size_t j : spec.cell_plan) {
        Component c = spec.truth[j];
        c.gate.beta0 += s * nd(rng);
        for (double& z : c.gate.beta1) z += s * nd(rng);
        for (double& z : c.expert.a) z += s * nd(rng);
        c.expert.b += s * nd(rng);
        c.expert.sigma *= std::exp(s * nd(rng));
        comps.push_back(std::move(c));
    }
    return MixingMeasure(spec.truth.family(), std::move(comps));
}

void FitConfig::validate() const {
    if (K < 1 || K > k) throw InvalidArgument("fit config needs 1 <= K <= k");
    if (!(tol > 0.0)) throw InvalidArgument("fit config needs tol > 0");
    if (!(gating_lr > 0.0)) throw InvalidArgument("fit config needs gating_lr > 0");
    if (gating_steps_per_m < 1) throw InvalidArgument("fit config needs gating_steps_per_m >= 1");
    if (!(sigma_floor > 0.0)) throw InvalidArgument("fit config needs sigma_floor > 0");
    if (!start && !init) throw InvalidArgument("fit config needs an init spec or a start measure");
    if (start && start->order() != k) throw InvalidArgument("start measure order differs from k");
    if (!start && init->cell_plan.size() != k) throw InvalidArgument("init cell plan length differs from k");
}

Responsibilities e_step(const Dataset& data, const MixingMeasure& G, std::size_t K) {
    if (data.dim() != G.dim()) throw InvalidArgument("dataset and measure differ in input dimension");
    const std::size_t n = data.size(), k = G.order();
    if (K < 1 || K > k) throw InvalidArgument("e_step needs 1 <= K <= k");
    const Vec V = logit_matrix(data, G);
    Vec L(n * k), mu(n);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& e = G[i].expert;
        std::span<double> col(L.data() + i * n, n);
        mean_column(data, e, mu);
        if (G.family().kind == FamilyKind::Gaussian) {
            kernels::gaussian_logpdf(data.y(), mu, e.sigma, col);
        } else {
            for (std::size_t j = 0; j < n; ++j) col[j] = log_family_density(G.family(), data.y()[j] - mu[j], e.sigma);
        }
    }

    Responsibilities r;
    r.n = n;
    r.k = k;
    r.values.assign(n * k, 0.0);
    RowSelector selector(k, K);
    std::vector<std::size_t> sel(K);
    Vec t(K);
    double ll = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        selector.select(V, n, j, sel.data());
        double gmx = kNegInf, tmx = kNegInf;
        for (std::size_t q = 0; q < K; ++q) {
            const std::size_t s = sel[q];
            const double g = V[s * n + j] + G[s].gate.beta0;
            t[q] = g + L[s * n + j];
            gmx = std::max(gmx, g);
            tmx = std::max(tmx, t[q]);
        }
        if (!std::isfinite(tmx)) throw DegenerateData(j, "sample " + std::to_string(j) + " has zero mixture likelihood");
        double gz = 0.0, tz = 0.0;
        for (std::size_t q = 0; q < K; ++q) {
            gz += std::exp(V[sel[q] * n + j] + G[sel[q]].gate.beta0 - gmx);
            tz += std::exp(t[q] - tmx);
        }
        const double lse_t = tmx + std::log(tz);
        for (std::size_t q = 0; q < K; ++q) r.values[sel[q] * n + j] = std::exp(t[q] - lse_t);
        ll += lse_t - (gmx + std::log(gz));
    }
    r.mean_loglik = ll / static_cast<double>(n);
    return r;
}

double mean_loglik(const Dataset& data, const MixingMeasure& G, std::size_t K) {
    return e_step(data, G, K).mean_loglik;
}

std::vector<ExpertParams> m_step_experts(const Dataset& data, const Responsibilities& r, const MixingMeasure& G,
                                         const FitConfig& cfg) {
    check_shapes(data, r, G);
    std::vector<ExpertParams> out;
    out.reserve(G.order());
    for (std::size_t i = 0; i < G.order(); ++i) {
        const auto w = r.column(i);
        const double sw = sum(w);
        if (!(sw > 0.0)) {
            out.push_back(G[i].expert);
            continue;
        }
        switch (G.family().kind) {
            case FamilyKind::Gaussian: out.push_back(update_gaussian(data, w, sw, cfg)); break;
            case FamilyKind::Laplace: out.push_back(update_laplace(data, w, sw, G[i].expert, cfg)); break;
            case FamilyKind::StudentT:
                out.push_back(update_student_t(data, w, sw, G[i].expert, G.family().dof, cfg));
                break;
        }
    }
    return out;
}

double expert_objective(const Dataset& data, std::span<const double> weights, const Family& family,
                        const ExpertParams& p) {
    Vec res;
    residuals(data, p, res);
    double s = 0.0;
    for (std::size_t j = 0; j < res.size(); ++j)
        if (weights[j] > 0.0) s += weights[j] * log_family_density(family, res[j], p.sigma);
    return s;
}

FrozenSelection freeze_selection(const Dataset& data, const MixingMeasure& G, std::size_t K) {
    const std::size_t n = data.size();
    if (K < 1 || K > G.order()) throw InvalidArgument("selection needs 1 <= K <= k");
    const Vec V = logit_matrix(data, G);
    FrozenSelection f;
    f.K = K;
    f.idx.resize(n * K);
    RowSelector selector(G.order(), K);
    for (std::size_t j = 0; j < n; ++j) selector.select(V, n, j, f.idx.data() + j * K);
    return f;
}

double gating_surrogate(const Dataset& data, const Responsibilities& r, const MixingMeasure& G,
                        const FrozenSelection& sel) {
    check_shapes(data, r, G);
    return gate_q(data, r, beta0_of(G), logit_matrix(data, G), sel.K, &sel);
}

Vec gating_gradient(const Dataset& data, const Responsibilities& r, const MixingMeasure& G,
                    const FrozenSelection& sel) {
    check_shapes(data, r, G);
    const std::size_t n = data.size(), d = data.dim(), K = sel.K;
    const Vec V = logit_matrix(data, G);
    const Vec b0 = beta0_of(G);
    Vec grad(G.order() * (d + 1), 0.0);
    Vec w(K);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t* s = sel.idx.data() + j * K;
        double mx = kNegInf;
        for (std::size_t q = 0; q < K; ++q) mx = std::max(mx, V[s[q] * n + j] + b0[s[q]]);
        double z = 0.0;
        for (std::size_t q = 0; q < K; ++q) z += w[q] = std::exp(V[s[q] * n + j] + b0[s[q]] - mx);
        double rsum = 0.0;
        for (std::size_t q = 0; q < K; ++q) rsum += r.values[s[q] * n + j];
        for (std::size_t q = 0; q < K; ++q) {
            const double g = r.values[s[q] * n + j] - rsum * w[q] / z;
            double* blk = grad.data() + s[q] * (d + 1);
            blk[0] += g;
            for (std::size_t p = 0; p < d; ++p) blk[1 + p] += g * data.x(j, p);
        }
    }
    for (double& g : grad) g /= static_cast<double>(n);
    return grad;
}

double gating_objective(const Dataset& data, const Responsibilities& r, const MixingMeasure& G, std::size_t K) {
    check_shapes(data, r, G);
    return gate_q(data, r, beta0_of(G), logit_matrix(data, G), K, nullptr);
}

std::vector<GateParams> m_step_gating(const Dataset& data, const Responsibilities& r, const MixingMeasure& G,
                                      std::size_t K, const FitConfig& cfg) {
    check_shapes(data, r, G);
    const std::size_t n = data.size(), d = data.dim(), k = G.order();
    std::vector<GateParams> gates;
    for (const auto& c : G.components()) gates.push_back(c.gate);
    if (K == 1) return gates;

    Vec V = logit_matrix(data, G);
    Vec b0 = beta0_of(G);
    double q_cur = gate_q(data, r, b0, V, K, nullptr);
    RowSelector selector(k, K);
    std::vector<std::size_t> sel(K);
    Vec col_trial(n);
    const std::size_t nb = d + 1;

    for (std::size_t step = 0; step < cfg.gating_steps_per_m; ++step) {
        for (std::size_t i = 0; i < k; ++i) {
            // Gradient and curvature of block i with the selection frozen here.
            Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb));
            Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
            Eigen::VectorXd z(static_cast<Eigen::Index>(nb));
            for (std::size_t j = 0; j < n; ++j) {
                selector.select(V, n, j, sel.data());
                if (std::find(sel.begin(), sel.end(), i) == sel.end()) continue;
                double mx = kNegInf;
                for (std::size_t s : sel) mx = std::max(mx, V[s * n + j] + b0[s]);
                double zs = 0.0;
                for (std::size_t s : sel) zs += std::exp(V[s * n + j] + b0[s] - mx);
                double rsum = 0.0;
                for (std::size_t s : sel) rsum += r.values[s * n + j];
                const double wi = std::exp(V[i * n + j] + b0[i] - mx) / zs;
                const double gi = r.values[i * n + j] - rsum * wi;
                z[0] = 1.0;
                for (std::size_t p = 0; p < d; ++p) z[static_cast<Eigen::Index>(1 + p)] = data.x(j, p);
                g += gi * z;
                if (cfg.gating_mode == GatingMode::Newton) H.noalias() += (rsum * wi * (1.0 - wi)) * (z * z.transpose());
            }
            g /= static_cast<double>(n);
            if (g.cwiseAbs().maxCoeff() == 0.0) continue;
            Eigen::VectorXd dir;
            if (cfg.gating_mode == GatingMode::Newton) {
                H /= static_cast<double>(n);
                H.diagonal().array() += 1e-9 * (1.0 + H.trace());
                dir = cfg.gating_lr * H.ldlt().solve(g);
            } else {
                dir = cfg.gating_lr * g;
            }

            // Backtrack on the objective with the selection recomputed.
            const GateParams base = gates[i];
            const Vec base_col(V.begin() + static_cast<std::ptrdiff_t>(i * n),
                               V.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
            double t = 1.0;
            bool accepted = false;
            for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
                GateParams trial = base;
                trial.beta0 += t * dir[0];
                for (std::size_t p = 0; p < d; ++p) trial.beta1[p] += t * dir[static_cast<Eigen::Index>(1 + p)];
                logit_column(data, trial.beta1, col_trial);
                std::copy(col_trial.begin(), col_trial.end(), V.begin() + static_cast<std::ptrdiff_t>(i * n));
                b0[i] = trial.beta0;
                const double q = gate_q(data, r, b0, V, K, nullptr);
                if (q > q_cur) {
                    gates[i] = trial;
                    q_cur = q;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                std::copy(base_col.begin(), base_col.end(), V.begin() + static_cast<std::ptrdiff_t>(i * n));
                b0[i] = base.beta0;
            }
        }
    }
    return gates;
}

FitResult fit(const Dataset& data, const FitConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    MixingMeasure G = cfg.start ? *cfg.start : init_measure(*cfg.init, hash_seed(cfg.seed, 1));
    if (G.dim() != data.dim()) throw InvalidArgument("dataset and initial measure differ in input dimension");

    FitResult out{G, {}, 0, false, 0.0};
    for (;;) {
        const Responsibilities r = e_step(data, G, cfg.K);
        out.loglik_trace.push_back(r.mean_loglik);
        const std::size_t m = out.loglik_trace.size();
        if (m >= 2 && std::abs(out.loglik_trace[m - 1] - out.loglik_trace[m - 2]) < cfg.tol) {
            out.converged = true;
            break;
        }
        if (out.iterations >= cfg.max_iters) break;
        auto experts = m_step_experts(data, r, G, cfg);
        auto gates = m_step_gating(data, r, G, cfg.K, cfg);
        std::vector<Component> comps(G.order());
        for (std::size_t i = 0; i < G.order(); ++i) comps[i] = {std::move(gates[i]), std::move(experts[i])};
        G = MixingMeasure(G.family(), std::move(comps));
        ++out.iterations;
    }
    out.measure = G;
    out.wallclock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace moe
