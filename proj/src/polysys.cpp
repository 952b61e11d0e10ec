#include "moe/polysys.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "moe/rng.hpp"

namespace moe {

namespace {

double ipow(double x, int e) {
    double r = 1.0;
    for (int t = 0; t < e; ++t) r *= x;
    return r;
}

double factorial(int n) {
    double r = 1.0;
    for (int t = 2; t <= n; ++t) r *= t;
    return r;
}

// Multi-indices of total degree s in d coordinates, first coordinate descending.
void graded(int d, int s, std::vector<std::vector<int>>& out) {
    std::vector<int> cur(static_cast<std::size_t>(d), 0);
    std::function<void(int, int)> rec = [&](int p, int left) {
        if (p == d - 1) {
            cur[static_cast<std::size_t>(p)] = left;
            out.push_back(cur);
            return;
        }
        for (int v = left; v >= 0; --v) {
            cur[static_cast<std::size_t>(p)] = v;
            rec(p + 1, left - v);
        }
    };
    rec(0, s);
}

std::vector<std::vector<int>> graded(int d, int s) {
    std::vector<std::vector<int>> out;
    graded(d, s, out);
    return out;
}

// Calls fn(alpha2) for every alpha2 <= eta1 componentwise.
template <class Fn>
void for_each_sub(const std::vector<int>& eta1, Fn&& fn) {
    std::vector<int> a(eta1.size(), 0);
    for (;;) {
        fn(a);
        std::size_t p = 0;
        while (p < a.size() && a[p] == eta1[p]) a[p++] = 0;
        if (p == a.size()) return;
        ++a[p];
    }
}

void check_shape(const PolySystemInstance& inst, const PolyCandidate& z) {
    const auto m = static_cast<std::size_t>(inst.m);
    const auto d = static_cast<std::size_t>(inst.d);
    bool ok = z.z1.size() == m && z.z2.size() == m && z.z3.size() == m && z.z4.size() == m && z.z5.size() == m;
    for (std::size_t i = 0; ok && i < m; ++i) ok = z.z1[i].size() == d && z.z2[i].size() == d;
    if (!ok) throw InvalidArgument("polynomial candidate does not match the instance shape");
}

// Free search variables: z1, z2 (m*d each), z3[1..m), z4 (m), s (m) with
// z5_i^2 = floor + (1 - m floor) softmax(s)_i.
struct Layout {
    int m, d;
    double floor;
    int size() const { return 2 * m * d + (m - 1) + m + m; }

    PolyCandidate unpack(const Eigen::VectorXd& v) const {
        PolyCandidate z = PolyCandidate::zeros(m, d);
        int t = 0;
        for (int i = 0; i < m; ++i)
            for (int p = 0; p < d; ++p) z.z1[i][p] = v[t++];
        for (int i = 0; i < m; ++i)
            for (int p = 0; p < d; ++p) z.z2[i][p] = v[t++];
        z.z3[0] = 1.0;
        for (int i = 1; i < m; ++i) z.z3[i] = v[t++];
        for (int i = 0; i < m; ++i) z.z4[i] = v[t++];
        double mx = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) mx = std::max(mx, v[t + i]);
        double sum = 0.0;
        Vec e(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) sum += e[i] = std::exp(v[t + i] - mx);
        for (int i = 0; i < m; ++i) z.z5[i] = std::sqrt(floor + (1.0 - m * floor) * e[i] / sum);
        return z;
    }
};

Eigen::VectorXd residual_vector(const PolySystemInstance& inst, const std::vector<EquationIndex>& eqs,
                                const PolyCandidate& z, IndexConvention conv) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(eqs.size()));
    for (std::size_t e = 0; e < eqs.size(); ++e) r[static_cast<Eigen::Index>(e)] = residual(inst, z, eqs[e], conv);
    return r;
}

}  // namespace

void PolySystemInstance::validate() const {
    if (m < 2 || d < 1 || r < 1) throw InvalidArgument("polynomial system needs m >= 2, d >= 1, r >= 1");
}

PolyCandidate PolyCandidate::zeros(int m, int d) {
    PolyCandidate z;
    const auto mu = static_cast<std::size_t>(m);
    z.z1.assign(mu, Vec(static_cast<std::size_t>(d), 0.0));
    z.z2 = z.z1;
    z.z3.assign(mu, 0.0);
    z.z4.assign(mu, 0.0);
    z.z5.assign(mu, 0.0);
    return z;
}

bool PolyCandidate::nontrivial(double tol) const {
    const bool weights = std::all_of(z5.begin(), z5.end(), [tol](double v) { return std::abs(v) > tol; });
    const bool moved = std::any_of(z3.begin(), z3.end(), [tol](double v) { return std::abs(v) > tol; });
    return !z5.empty() && weights && moved;
}

std::vector<EquationIndex> enumerate_equations(const PolySystemInstance& inst) {
    inst.validate();
    std::vector<EquationIndex> out;
    const std::vector<int> zero(static_cast<std::size_t>(inst.d), 0);
    for (int s = 1; s <= inst.r; ++s)
        for (auto& e1 : graded(inst.d, s)) out.push_back({e1, 0});
    for (int s = 1; s <= inst.r; ++s) out.push_back({zero, s});
    for (int total = 2; total <= inst.r; ++total)
        for (int s1 = 1; s1 < total; ++s1)
            for (auto& e1 : graded(inst.d, s1)) out.push_back({e1, total - s1});
    return out;
}

double residual(const PolySystemInstance& inst, const PolyCandidate& z, const EquationIndex& eq,
                IndexConvention conv) {
    check_shape(inst, z);
    if (eq.eta1.size() != static_cast<std::size_t>(inst.d) || eq.eta2 < 0)
        throw InvalidArgument("equation index does not match the instance dimension");
    double total = 0.0;
    for (int i = 0; i < inst.m; ++i) {
        double inner = 0.0;
        for_each_sub(eq.eta1, [&](const std::vector<int>& a2) {
            int a2sum = 0;
            double head = 1.0;
            for (int p = 0; p < inst.d; ++p) {
                const int a1 = eq.eta1[p] - a2[p];
                a2sum += a2[p];
                head *= ipow(z.z1[i][p], a1) * ipow(z.z2[i][p], a2[p]) / (factorial(a1) * factorial(a2[p]));
            }
            if (conv == IndexConvention::WeightedScale) {
                const int rem = eq.eta2 - a2sum;
                for (int a4 = 0; 2 * a4 <= rem; ++a4) {
                    const int a3 = rem - 2 * a4;
                    inner += head * ipow(z.z3[i], a3) * ipow(z.z4[i], a4) / (factorial(a3) * factorial(a4));
                }
            } else {
                const int rem = eq.eta2 - a2sum;
                for (int a4 = 0; a4 <= rem; ++a4) {
                    const int a3 = rem - a4;
                    inner += head * ipow(z.z3[i], a3) * ipow(z.z4[i], a4) / (factorial(a3) * factorial(a4));
                }
            }
        });
        total += z.z5[i] * z.z5[i] * inner;
    }
    return total;
}

double max_abs_residual(const PolySystemInstance& inst, const PolyCandidate& z, IndexConvention conv) {
    double worst = 0.0;
    for (const auto& eq : enumerate_equations(inst)) worst = std::max(worst, std::abs(residual(inst, z, eq, conv)));
    return worst;
}

PolyCandidate two_component_witness(int d, double c) {
    PolyCandidate z = PolyCandidate::zeros(2, d);
    z.z5 = {1.0, 1.0};
    z.z3 = {c, -c};
    z.z4 = {-c * c / 2.0, -c * c / 2.0};
    return z;
}

std::optional<PolyCandidate> search_nontrivial(const PolySystemInstance& inst, int restarts, std::uint64_t seed,
                                               const SearchOptions& opts) {
    inst.validate();
    if (restarts < 1) throw InvalidArgument("restarts must be >= 1");
    if (!(opts.weight_floor >= 0.0) || opts.weight_floor * inst.m >= 1.0)
        throw InvalidArgument("weight floor must lie in [0, 1/m)");
    const auto eqs = enumerate_equations(inst);
    const Layout lay{inst.m, inst.d, opts.weight_floor};
    const int nv = lay.size();

    for (int rs = 0; rs < restarts; ++rs) {
        Rng rng = substream(seed, static_cast<std::uint64_t>(rs));
        std::normal_distribution<double> nd(0.0, 1.0);
        Eigen::VectorXd v(nv);
        for (int t = 0; t < nv; ++t) v[t] = nd(rng);

        auto cost_of = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
            r = residual_vector(inst, eqs, lay.unpack(p), opts.convention);
            return r.squaredNorm();
        };
        Eigen::VectorXd r;
        double cost = cost_of(v, r);
        double lambda = 1e-3;
        Eigen::MatrixXd J(static_cast<Eigen::Index>(eqs.size()), nv);
        Eigen::VectorXd rp, rm, trial_r;
        for (int it = 0; it < opts.max_lm_iterations && cost > 1e-28; ++it) {
            for (int t = 0; t < nv; ++t) {
                const double h = 1e-6 * std::max(1.0, std::abs(v[t]));
                Eigen::VectorXd vp = v, vm = v;
                vp[t] += h;
                vm[t] -= h;
                cost_of(vp, rp);
                cost_of(vm, rm);
                J.col(t) = (rp - rm) / (2.0 * h);
            }
            const Eigen::MatrixXd JtJ = J.transpose() * J;
            const Eigen::VectorXd g = J.transpose() * r;
            bool improved = false;
            while (lambda < 1e14) {
                Eigen::MatrixXd A = JtJ;
                A.diagonal().array() += lambda * (1.0 + JtJ.diagonal().array());
                const Eigen::VectorXd step = A.ldlt().solve(-g);
                const Eigen::VectorXd trial = v + step;
                const double c = cost_of(trial, trial_r);
                if (std::isfinite(c) && c < cost) {
                    v = trial;
                    r = trial_r;
                    cost = c;
                    lambda = std::max(lambda / 3.0, 1e-12);
                    improved = true;
                    break;
                }
                lambda *= 4.0;
            }
            if (!improved) break;
        }
        const PolyCandidate z = lay.unpack(v);
        if (z.nontrivial(1e-6) && max_abs_residual(inst, z, opts.convention) <= opts.tolerance) return z;
    }
    return std::nullopt;
}

RbarValue rbar(int m, RbarPolicy policy) {
    if (m < 2) throw InvalidArgument("rbar(m) requires m >= 2");
    if (policy == RbarPolicy::Conjecture) return {2 * m, m >= 4};
    if (m == 2) return {4, false};
    if (m == 3) return {6, false};
    throw UnsupportedValue("rbar(" + std::to_string(m) +
                           ") is not known exactly; use the conjecture policy (rbar(m) = 2m)");
}

}  // namespace moe
