#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "moe/metrics.hpp"
#include "moe/partition.hpp"

using namespace moe;
using moe::test::measure;

TEST_CASE("binomial coefficients and saturation") {
    CHECK(binomial(5, 0) == 1);
    CHECK(binomial(5, 2) == 10);
    CHECK(binomial(52, 5) == 2598960);
    CHECK(binomial(3, 5) == 0);
    CHECK(binomial(200, 100) == UINT64_MAX);
}

TEST_CASE("enumerated regions partition the index set") {
    for (std::size_t k = 1; k <= 7; ++k)
        for (std::size_t K = 1; K <= k; ++K) {
            const auto regions = enumerate_regions(k, K);
            CHECK(regions.size() == binomial(k, K));
            for (std::size_t r = 0; r < regions.size(); ++r) {
                CHECK(regions[r].selected.size() == K);
                CHECK(regions[r].selected.size() + regions[r].complement.size() == k);
                if (r > 0) CHECK(regions[r - 1].selected < regions[r].selected);
            }
        }
    CHECK_THROWS_AS(enumerate_regions(3, 0), InvalidArgument);
    CHECK_THROWS_AS(enumerate_regions(3, 4), InvalidArgument);
    CHECK_THROWS_AS(enumerate_regions(40, 20), InvalidArgument);
}

TEST_CASE("region masses sum to one") {
    std::mt19937_64 rng(4);
    const auto G = test::random_measure(4, 2, rng);
    const Box box{{-1.0, -1.0}, {1.0, 1.0}};
    for (std::size_t K = 1; K <= 4; ++K) {
        double total = 0.0;
        for (const auto& r : enumerate_regions(4, K)) total += region_mass(G, r, K, box, 20000, 11);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("region mass is reproducible and seed dependent") {
    const auto G = measure({{0.0, {1.0}, {0.0}, 0.0, 1.0}, {0.0, {0.0}, {1.0}, 0.0, 1.0}});
    const Box box{{-1.0}, {1.0}};
    const auto r = enumerate_regions(2, 1).front();
    CHECK(region_mass(G, r, 1, box, 10000, 3) == region_mass(G, r, 1, box, 10000, 3));
    CHECK(region_mass(G, r, 1, box, 10000, 3) != region_mass(G, r, 1, box, 10000, 4));
}

TEST_CASE("negligible mass threshold") {
    CHECK(negligible_mass(0.0, 100));
    CHECK(negligible_mass(0.019, 100));
    CHECK_FALSE(negligible_mass(0.02, 100));
}

TEST_CASE("partition match rate is one against itself and falls under a large perturbation") {
    const auto G = reference_truth();
    const Box box = Box::unit(1);
    const auto id = identity_assignment(2);
    CHECK(partition_match_rate(G, G, id, 2, 2, box, 5000, 1) == 1.0);
    CHECK(partition_match_rate(G, perturb_gating_slopes(G, 1e-6, 2), id, 1, 1, box, 5000, 1) == 1.0);
    // Moving the gates far apart changes who wins near x = 0.
    const auto moved = test::with_gate(G, 1, {0.0, {40.0}});
    CHECK(partition_match_rate(G, moved, id, 1, 1, box, 5000, 1) == 0.0);
}

TEST_CASE("perturbation moves every slope by exactly eta") {
    std::mt19937_64 rng(9);
    const auto G = test::random_measure(3, 2, rng);
    const auto P = perturb_gating_slopes(G, 0.125, 77);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t p = 0; p < 2; ++p)
            CHECK(std::abs(P[i].gate.beta1[p] - G[i].gate.beta1[p]) == doctest::Approx(0.125));
    CHECK(P[0].expert == G[0].expert);
    CHECK(perturb_gating_slopes(G, 0.125, 77) == P);
}

TEST_CASE("over-specified match uses the union of cells") {
    // Two fitted copies of expert 0 split its cell; Kbar = 2 must cover both.
    const auto truth = reference_truth();
    const auto fit = measure({{-8.0, {25.0}, {-20.0}, 15.0, 0.3},
                              {-8.5, {25.0}, {-20.0}, 15.0, 0.31},
                              {0.0, {0.0}, {20.0}, -5.0, 0.4}});
    const auto cells = assign_voronoi(fit, truth);
    REQUIRE(cells.cells[0] == std::vector<std::size_t>{0, 1});
    CHECK(partition_match_rate(truth, fit, cells, 1, 2, Box::unit(1), 5000, 2) == 1.0);
    CHECK(partition_match_rate(truth, fit, cells, 1, 1, Box::unit(1), 5000, 2) == 0.0);
}
