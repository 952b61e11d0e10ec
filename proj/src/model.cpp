#include "moe/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "moe/rng.hpp"

namespace moe {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double z) { return std::isfinite(z); });
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += "; ";
        out += p;
    }
    return out;
}

double dot(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) s += u[p] * v[p];
    return s;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error("assumption violated: " + join(violations)), violations_(std::move(violations)) {}

Family Family::student_t(double dof) {
    if (!(dof > 2.0) || !std::isfinite(dof))
        throw InvalidArgument("student_t family requires finite dof > 2, got " + std::to_string(dof));
    return {FamilyKind::StudentT, dof};
}

std::string Family::name() const {
    switch (kind) {
        case FamilyKind::Gaussian: return "gaussian";
        case FamilyKind::Laplace: return "laplace";
        case FamilyKind::StudentT: {
            std::ostringstream os;
            os << "student_t(" << dof << ")";
            return os.str();
        }
    }
    return "unknown";
}

Family Family::parse(std::string_view text) {
    if (text == "gaussian") return gaussian();
    if (text == "laplace") return laplace();
    if (text == "student_t") return student_t();
    if (text.starts_with("student_t(") && text.ends_with(")")) {
        const std::string inner(text.substr(10, text.size() - 11));
        try {
            return student_t(std::stod(inner));
        } catch (const std::logic_error&) {
            throw InvalidArgument("bad student_t dof: " + std::string(text));
        }
    }
    throw InvalidArgument("unknown family: " + std::string(text));
}

MixingMeasure::MixingMeasure(Family family, std::vector<Component> components)
    : family_(family), components_(std::move(components)) {
    if (components_.empty()) throw InvalidArgument("mixing measure needs at least one component");
    dim_ = components_.front().gate.beta1.size();
    if (dim_ == 0) throw InvalidArgument("input dimension must be >= 1");
    for (std::size_t i = 0; i < components_.size(); ++i) {
        const auto& c = components_[i];
        const std::string where = "component " + std::to_string(i) + ": ";
        if (c.gate.beta1.size() != dim_ || c.expert.a.size() != dim_)
            throw InvalidArgument(where + "dimension mismatch");
        if (!std::isfinite(c.gate.beta0) || !all_finite(c.gate.beta1) || !all_finite(c.expert.a) ||
            !std::isfinite(c.expert.b) || !std::isfinite(c.expert.sigma))
            throw InvalidArgument(where + "non-finite parameter");
        if (!(c.expert.sigma > 0.0)) throw InvalidArgument(where + "sigma must be > 0");
    }
}

MixingMeasure MixingMeasure::truth(Family family, std::vector<Component> components) {
    MixingMeasure G(family, std::move(components));
    auto v = G.assumption_violations();
    if (!v.empty()) throw ValidationError(std::move(v));
    return G;
}

bool MixingMeasure::is_pinned() const {
    const auto& last = components_.back().gate;
    return last.beta0 == 0.0 &&
           std::all_of(last.beta1.begin(), last.beta1.end(), [](double z) { return z == 0.0; });
}

bool MixingMeasure::experts_distinct() const {
    for (std::size_t i = 0; i < components_.size(); ++i)
        for (std::size_t j = i + 1; j < components_.size(); ++j)
            if (components_[i].expert == components_[j].expert) return false;
    return true;
}

bool MixingMeasure::input_dependent() const {
    for (const auto& c : components_)
        for (double z : c.gate.beta1)
            if (z != 0.0) return true;
    return false;
}

std::vector<std::string> MixingMeasure::assumption_violations() const {
    std::vector<std::string> out;
    if (!is_pinned())
        out.emplace_back("pinned last component: last component must have beta0 = 0 and beta1 = 0");
    if (!experts_distinct()) out.emplace_back("distinct experts: (a, b, sigma) must be pairwise distinct");
    if (!input_dependent()) out.emplace_back("input-dependent gating: at least one beta1 must be nonzero");
    return out;
}

MixingMeasure MixingMeasure::shifted_gates(double delta0, std::span<const double> delta1) const {
    if (delta1.size() != dim_) throw InvalidArgument("gate shift dimension mismatch");
    auto comps = components_;
    for (auto& c : comps) {
        c.gate.beta0 += delta0;
        for (std::size_t p = 0; p < dim_; ++p) c.gate.beta1[p] += delta1[p];
    }
    return MixingMeasure(family_, std::move(comps));
}

bool Box::contains(std::span<const double> x) const {
    if (x.size() != lo.size()) return false;
    for (std::size_t p = 0; p < x.size(); ++p)
        if (!(x[p] >= lo[p] && x[p] <= hi[p])) return false;
    return true;
}

Dataset::Dataset(std::vector<Vec> x_columns, Vec y, Box bounds)
    : cols_(std::move(x_columns)), y_(std::move(y)), bounds_(std::move(bounds)) {
    if (y_.empty()) throw InvalidArgument("dataset must contain at least one sample");
    if (cols_.empty()) throw InvalidArgument("dataset input dimension must be >= 1");
    for (const auto& c : cols_)
        if (c.size() != y_.size()) throw InvalidArgument("dataset x/y length mismatch");
    if (bounds_.dim() != cols_.size() || bounds_.hi.size() != cols_.size())
        throw InvalidArgument("dataset bounds dimension mismatch");
}

Vec Dataset::row(std::size_t j) const {
    Vec r(cols_.size());
    for (std::size_t p = 0; p < cols_.size(); ++p) r[p] = cols_[p][j];
    return r;
}

std::vector<std::size_t> topk_select(std::span<const double> logits, std::size_t K) {
    const std::size_t k = logits.size();
    if (K < 1 || K > k)
        throw InvalidArgument("top-K requires 1 <= K <= k (K=" + std::to_string(K) +
                              ", k=" + std::to_string(k) + ")");
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(K), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
                      });
    idx.resize(K);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Vec gate_logits(const MixingMeasure& G, std::span<const double> x) {
    if (x.size() != G.dim())
        throw InvalidArgument("input has dimension " + std::to_string(x.size()) + ", measure expects " +
                              std::to_string(G.dim()));
    Vec v(G.order());
    for (std::size_t i = 0; i < G.order(); ++i) v[i] = dot(G[i].gate.beta1, x);
    return v;
}

GateOutput gate_weights(const MixingMeasure& G, std::span<const double> x, std::size_t K) {
    const Vec v = gate_logits(G, x);
    GateOutput out;
    out.selected = topk_select(v, K);
    out.weights.assign(G.order(), 0.0);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i : out.selected) mx = std::max(mx, v[i] + G[i].gate.beta0);
    double total = 0.0;
    for (std::size_t i : out.selected) {
        out.weights[i] = std::exp(v[i] + G[i].gate.beta0 - mx);
        total += out.weights[i];
    }
    for (std::size_t i : out.selected) out.weights[i] /= total;
    return out;
}

double expert_mean(const ExpertParams& p, std::span<const double> x) { return dot(p.a, x) + p.b; }

double log_family_density(const Family& family, double residual, double sigma) {
    const double z = residual / sigma;
    switch (family.kind) {
        case FamilyKind::Gaussian: return -std::log(sigma) - kHalfLog2Pi - 0.5 * z * z;
        case FamilyKind::Laplace: return -std::log(2.0 * sigma) - std::abs(z);
        case FamilyKind::StudentT: {
            const double nu = family.dof;
            return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI) -
                   std::log(sigma) - 0.5 * (nu + 1.0) * std::log1p(z * z / nu);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double log_expert_density(const Family& family, const ExpertParams& params, std::span<const double> x,
                          double y) {
    return log_family_density(family, y - expert_mean(params, x), params.sigma);
}

double expert_density(const Family& family, const ExpertParams& params, std::span<const double> x,
                      double y) {
    return std::exp(log_expert_density(family, params, x, y));
}

double log_conditional_density(const MixingMeasure& G, std::size_t K, std::span<const double> x, double y) {
    const Vec v = gate_logits(G, x);
    const auto sel = topk_select(v, K);
    double gate_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i : sel) gate_max = std::max(gate_max, v[i] + G[i].gate.beta0);
    double gate_sum = 0.0;
    for (std::size_t i : sel) gate_sum += std::exp(v[i] + G[i].gate.beta0 - gate_max);
    const double log_norm = gate_max + std::log(gate_sum);

    Vec terms;
    terms.reserve(sel.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i : sel) {
        const double t = v[i] + G[i].gate.beta0 - log_norm + log_expert_density(G.family(), G[i].expert, x, y);
        terms.push_back(t);
        mx = std::max(mx, t);
    }
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
}

double conditional_density(const MixingMeasure& G, std::size_t K, std::span<const double> x, double y) {
    return std::exp(log_conditional_density(G, K, x, y));
}

namespace {

double draw_residual(const Family& family, double sigma, Rng& rng) {
    switch (family.kind) {
        case FamilyKind::Gaussian: {
            std::normal_distribution<double> nd(0.0, 1.0);
            return sigma * nd(rng);
        }
        case FamilyKind::Laplace: {
            const double u = uniform01(rng) - 0.5;
            const double mag = -std::log1p(-2.0 * std::abs(u));
            return sigma * (u < 0.0 ? -mag : mag);
        }
        case FamilyKind::StudentT: {
            std::student_t_distribution<double> td(family.dof);
            return sigma * td(rng);
        }
    }
    return 0.0;
}

}  // namespace

Dataset sample_dataset(const MixingMeasure& G, std::size_t K, std::size_t n, const Box& bounds,
                       std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("sample size n must be >= 1");
    if (K < 1 || K > G.order()) throw InvalidArgument("K must satisfy 1 <= K <= k");
    if (bounds.dim() != G.dim() || bounds.hi.size() != G.dim())
        throw InvalidArgument("bounds dimension does not match the measure");
    for (std::size_t p = 0; p < bounds.dim(); ++p)
        if (!(bounds.lo[p] < bounds.hi[p]) || !std::isfinite(bounds.lo[p]) || !std::isfinite(bounds.hi[p]))
            throw ValidationError({"bounded inputs: bounds must be finite with lo < hi"});
    if (auto v = G.assumption_violations(); !v.empty()) throw ValidationError(std::move(v));

    const std::size_t d = G.dim();
    Rng rng(hash_seed(seed, 0x6a7aULL));
    std::vector<Vec> cols(d, Vec(n));
    Vec y(n);
    Vec x(d);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t p = 0; p < d; ++p) {
            x[p] = bounds.lo[p] + (bounds.hi[p] - bounds.lo[p]) * uniform01(rng);
            cols[p][j] = x[p];
        }
        const GateOutput g = gate_weights(G, x, K);
        const double u = uniform01(rng);
        std::size_t pick = g.selected.back();
        double acc = 0.0;
        for (std::size_t i : g.selected) {
            acc += g.weights[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        const auto& e = G[pick].expert;
        y[j] = expert_mean(e, x) + draw_residual(G.family(), e.sigma, rng);
    }
    return Dataset(std::move(cols), std::move(y), bounds);
}

void validate_inputs(const Dataset& data) {
    for (std::size_t j = 0; j < data.size(); ++j)
        if (!data.bounds().contains(data.row(j)))
            throw ValidationError({"bounded inputs: sample " + std::to_string(j) +
                                   " lies outside the declared bounds"});
}

MixingMeasure reference_truth() {
    std::vector<Component> comps{
        {{-8.0, {25.0}}, {{-20.0}, 15.0, 0.3}},
        {{0.0, {0.0}}, {{20.0}, -5.0, 0.4}},
    };
    return MixingMeasure::truth(Family::gaussian(), std::move(comps));
}

}  // namespace moe
