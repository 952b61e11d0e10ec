#include "moe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "moe/partition.hpp"

namespace moe {

namespace {

double sq_dist(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        const double t = u[p] - v[p];
        s += t * t;
    }
    return s;
}

double norm_diff(std::span<const double> u, std::span<const double> v) { return std::sqrt(sq_dist(u, v)); }

// Squared distance between the theta = (beta1, a, b, sigma) vectors.
double theta_sq_dist(const Component& f, const Component& t) {
    const double db = f.expert.b - t.expert.b;
    const double ds = f.expert.sigma - t.expert.sigma;
    return sq_dist(f.gate.beta1, t.gate.beta1) + sq_dist(f.expert.a, t.expert.a) + db * db + ds * ds;
}

// |x|^e with 0^e == 0 for every e > 0 and the plain value for e == 1.
double powed(double x, double e) { return e == 1.0 ? x : std::pow(x, e); }

void check_pair(const MixingMeasure& fit, const MixingMeasure& truth, std::size_t K) {
    if (fit.dim() != truth.dim()) throw InvalidArgument("fitted and true measures differ in dimension");
    if (K < 1 || K > truth.order())
        throw InvalidArgument("loss requires 1 <= K <= k* (K=" + std::to_string(K) +
                              ", k*=" + std::to_string(truth.order()) + ")");
}

CellTerm cell_term(const MixingMeasure& fit, const MixingMeasure& truth, const VoronoiAssignment& cells,
                   std::size_t j, const ExponentRule& rule, const LossOptions& opts) {
    CellTerm term;
    term.true_index = j;
    term.members = cells.cells[j];
    const Component& t = truth[j];
    const TermExponents e = rule(term.members.size());
    double mass = 0.0;
    for (std::size_t i : term.members) {
        const Component& f = fit[i];
        const double w = std::exp(f.gate.beta0);
        mass += w;
        double s = powed(norm_diff(f.expert.a, t.expert.a), e.a) +
                   powed(std::abs(f.expert.b - t.expert.b), e.b) +
                   powed(std::abs(f.expert.sigma - t.expert.sigma), e.sigma);
        if (opts.restrict == LossRestriction::Full) s = powed(norm_diff(f.gate.beta1, t.gate.beta1), e.beta1) + s;
        term.parameter_term += w * s;
    }
    if (opts.restrict != LossRestriction::ExpertOnly) term.weight_term = std::abs(mass - std::exp(t.gate.beta0));
    return term;
}

}  // namespace

VoronoiAssignment assign_voronoi(const MixingMeasure& fit, const MixingMeasure& truth) {
    if (fit.dim() != truth.dim()) throw InvalidArgument("fitted and true measures differ in dimension");
    VoronoiAssignment out;
    out.cells.resize(truth.order());
    out.owner.resize(fit.order());
    for (std::size_t i = 0; i < fit.order(); ++i) {
        std::size_t best = 0;
        double best_d = theta_sq_dist(fit[i], truth[0]);
        for (std::size_t j = 1; j < truth.order(); ++j) {
            const double d = theta_sq_dist(fit[i], truth[j]);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        out.owner[i] = best;
        out.cells[best].push_back(i);
    }
    return out;
}

VoronoiAssignment identity_assignment(std::size_t k) {
    VoronoiAssignment out;
    out.cells.resize(k);
    out.owner.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.cells[i] = {i};
        out.owner[i] = i;
    }
    return out;
}

MixingMeasure align_gauge(const MixingMeasure& fit, const MixingMeasure& truth) {
    const std::size_t last = truth.order() - 1;
    return align_gauge(fit, truth, std::span<const std::size_t>(&last, 1));
}

MixingMeasure align_gauge(const MixingMeasure& fit, const MixingMeasure& truth,
                          std::span<const std::size_t> anchors) {
    if (fit.dim() != truth.dim()) throw InvalidArgument("fitted and true measures differ in dimension");
    if (anchors.empty()) throw InvalidArgument("gauge alignment needs at least one anchor");
    const std::size_t d = fit.dim();

    // log-sum-exp of beta0 and exp(beta0)-weighted mean slope over a set of components
    struct Pooled {
        double lse;
        Vec slope;
    };
    const auto pool = [d](const MixingMeasure& m, const std::vector<std::size_t>& idx) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i : idx) mx = std::max(mx, m[i].gate.beta0);
        double mass = 0.0;
        Vec slope(d, 0.0);
        for (std::size_t i : idx) {
            const double w = std::exp(m[i].gate.beta0 - mx);
            mass += w;
            for (std::size_t p = 0; p < d; ++p) slope[p] += w * m[i].gate.beta1[p];
        }
        for (auto& s : slope) s /= mass;
        return Pooled{mx + std::log(mass), slope};
    };

    std::vector<std::size_t> anchor_idx;
    for (std::size_t j : anchors) {
        if (j >= truth.order()) throw InvalidArgument("gauge anchor out of range");
        anchor_idx.push_back(j);
    }
    const Pooled target = pool(truth, anchor_idx);

    MixingMeasure current = fit;
    std::vector<std::size_t> previous;
    for (int round = 0; round < 16; ++round) {
        const auto cells = assign_voronoi(current, truth).cells;
        std::vector<std::size_t> members;
        for (std::size_t j : anchor_idx) members.insert(members.end(), cells[j].begin(), cells[j].end());
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        if (members.empty() || members == previous) break;
        previous = members;
        const Pooled got = pool(current, members);
        Vec delta1(d);
        for (std::size_t p = 0; p < d; ++p) delta1[p] = target.slope[p] - got.slope[p];
        current = current.shifted_gates(target.lse - got.lse, delta1);
    }
    return current;
}

std::string LossReport::to_json() const {
    nlohmann::json doc;
    doc["value"] = value;
    doc["argmax_subset"] = argmax_subset;
    auto cells = nlohmann::json::array();
    for (const auto& t : per_cell_terms) {
        cells.push_back({{"true_index", t.true_index},
                         {"members", t.members},
                         {"parameter_term", t.parameter_term},
                         {"weight_term", t.weight_term},
                         {"total", t.total()}});
    }
    doc["per_cell_terms"] = cells;
    return doc.dump(2);
}

LossReport voronoi_loss(const MixingMeasure& fit, const MixingMeasure& truth, std::size_t K,
                        const ExponentRule& rule, const LossOptions& opts) {
    return voronoi_loss(fit, truth, assign_voronoi(fit, truth), K, rule, opts);
}

LossReport voronoi_loss(const MixingMeasure& fit, const MixingMeasure& truth, const VoronoiAssignment& cells,
                        std::size_t K, const ExponentRule& rule, const LossOptions& opts) {
    check_pair(fit, truth, K);
    if (cells.true_order() != truth.order() || cells.fitted_order() != fit.order())
        throw InvalidArgument("Voronoi assignment does not match the measures");

    std::vector<CellTerm> terms(truth.order());
    for (std::size_t j = 0; j < truth.order(); ++j) terms[j] = cell_term(fit, truth, cells, j, rule, opts);

    LossReport best;
    bool found = false;
    for (const auto& region : enumerate_regions(truth.order(), K)) {
        if (opts.subset_filter && !opts.subset_filter(region.selected)) continue;
        double value = 0.0;
        for (std::size_t j : region.selected) value += terms[j].total();
        if (!found || value > best.value) {
            found = true;
            best.value = value;
            best.argmax_subset = region.selected;
        }
    }
    if (!found) throw InvalidArgument("no K-subset of true components passes the subset filter");
    for (std::size_t j : best.argmax_subset) best.per_cell_terms.push_back(terms[j]);
    return best;
}

LossReport loss_d1(const MixingMeasure& fit, const MixingMeasure& truth, std::size_t K, const LossOptions& opts) {
    return voronoi_loss(fit, truth, K, [](std::size_t) { return TermExponents{}; }, opts);
}

LossReport loss_d2(const MixingMeasure& fit, const MixingMeasure& truth, std::size_t K, const RbarFn& rbar,
                   const LossOptions& opts) {
    const auto rule = [&rbar](std::size_t m) {
        if (m <= 1) return TermExponents{};
        const double r = rbar(static_cast<int>(m));
        return TermExponents{r, 0.5 * r, r, 0.5 * r};
    };
    return voronoi_loss(fit, truth, K, rule, opts);
}

LossReport loss_d3(const MixingMeasure& fit, const MixingMeasure& truth, std::size_t K, const LossOptions& opts) {
    const auto rule = [](std::size_t m) { return m <= 1 ? TermExponents{} : TermExponents{2.0, 2.0, 2.0, 2.0}; };
    return voronoi_loss(fit, truth, K, rule, opts);
}

std::function<bool(std::span<const std::size_t>)> positive_mass_filter(const MixingMeasure& truth,
                                                                        std::size_t K, const Box& box,
                                                                        std::size_t n_mc, std::uint64_t seed) {
    std::map<std::vector<std::size_t>, bool> keep;
    for (const auto& region : enumerate_regions(truth.order(), K))
        keep[region.selected] = !negligible_mass(region_mass(truth, region, K, box, n_mc, seed), n_mc);
    return [keep = std::move(keep)](std::span<const std::size_t> subset) {
        const auto it = keep.find(std::vector<std::size_t>(subset.begin(), subset.end()));
        return it != keep.end() && it->second;
    };
}

std::vector<std::size_t> positive_mass_indices(const MixingMeasure& truth, std::size_t K, const Box& box,
                                               std::size_t n_mc, std::uint64_t seed) {
    std::vector<bool> used(truth.order(), false);
    for (const auto& region : enumerate_regions(truth.order(), K))
        if (!negligible_mass(region_mass(truth, region, K, box, n_mc, seed), n_mc))
            for (std::size_t j : region.selected) used[j] = true;
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < used.size(); ++j)
        if (used[j]) out.push_back(j);
    return out;
}

}  // namespace moe
