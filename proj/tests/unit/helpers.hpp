#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "moe/model.hpp"
#include "moe/types.hpp"

namespace moe::test {

struct Spec {
    double beta0;
    Vec beta1;
    Vec a;
    double b;
    double sigma;
};

inline MixingMeasure measure(const std::vector<Spec>& specs, Family family = Family::gaussian()) {
    std::vector<Component> comps;
    for (const auto& s : specs) comps.push_back({{s.beta0, s.beta1}, {s.a, s.b, s.sigma}});
    return MixingMeasure(family, comps);
}

/// Random measure of order k in dimension d with moderate parameters.
inline MixingMeasure random_measure(std::size_t k, std::size_t d, std::mt19937_64& rng,
                                    Family family = Family::gaussian()) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> s(0.2, 1.5);
    std::vector<Component> comps;
    for (std::size_t i = 0; i < k; ++i) {
        Component c;
        c.gate.beta0 = z(rng);
        c.expert.a.resize(d);
        c.gate.beta1.resize(d);
        for (std::size_t p = 0; p < d; ++p) {
            c.gate.beta1[p] = 3.0 * z(rng);
            c.expert.a[p] = 3.0 * z(rng);
        }
        c.expert.b = 3.0 * z(rng);
        c.expert.sigma = s(rng);
        comps.push_back(c);
    }
    return MixingMeasure(family, comps);
}

/// Same measure with one expert's parameters replaced.
inline MixingMeasure with_expert(const MixingMeasure& G, std::size_t i, ExpertParams e) {
    auto comps = G.components();
    comps[i].expert = std::move(e);
    return MixingMeasure(G.family(), comps);
}

inline MixingMeasure with_gate(const MixingMeasure& G, std::size_t i, GateParams g) {
    auto comps = G.components();
    comps[i].gate = std::move(g);
    return MixingMeasure(G.family(), comps);
}

inline double normal_pdf(double y, double mu, double sigma) {
    const double z = (y - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

}  // namespace moe::test
