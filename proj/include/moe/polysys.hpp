#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "moe/types.hpp"

namespace moe {

/// System with m unknown groups, input dimension d and order cap r.
struct PolySystemInstance {
    int m = 2;
    int d = 1;
    int r = 1;

    void validate() const;
};

/// Unknowns {z1_i, z2_i, z3_i, z4_i, z5_i}, i < m. z1 and z2 carry d entries per i.
struct PolyCandidate {
    std::vector<Vec> z1;
    std::vector<Vec> z2;
    Vec z3;
    Vec z4;
    Vec z5;

    static PolyCandidate zeros(int m, int d);
    /// Every |z5_i| > tol and some |z3_i| > tol.
    bool nontrivial(double tol = 0.0) const;
};

struct EquationIndex {
    std::vector<int> eta1;
    int eta2 = 0;

    bool operator==(const EquationIndex&) const = default;
};

/// Which constraint ties (alpha2, alpha3, alpha4) to eta2.
enum class IndexConvention {
    /// alpha3 + 2 alpha4 = eta2 - |alpha2|
    WeightedScale,
    /// |alpha2| + alpha3 + alpha4 = eta2
    Flat,
};

/// Every (eta1, eta2) with 1 <= |eta1| + eta2 <= r. Order: eta2 = 0 graded by
/// |eta1| (reverse-lex within a degree), then eta1 = 0 by eta2, then mixed
/// indices by total degree and |eta1|.
std::vector<EquationIndex> enumerate_equations(const PolySystemInstance& inst);

/// Left-hand side of one equation, summed over alpha1 + alpha2 = eta1 and the
/// convention's constraint on (alpha2, alpha3, alpha4).
double residual(const PolySystemInstance& inst, const PolyCandidate& z, const EquationIndex& eq,
                IndexConvention conv = IndexConvention::WeightedScale);

double max_abs_residual(const PolySystemInstance& inst, const PolyCandidate& z,
                        IndexConvention conv = IndexConvention::WeightedScale);

/// z1 = z2 = 0, z5 = (1, 1), z3 = (c, -c), z4 = (-c^2/2, -c^2/2). Solves every
/// equation with |eta1| + eta2 <= 3; the (0, 4) residual is -c^4/6.
PolyCandidate two_component_witness(int d, double c);

struct SearchOptions {
    IndexConvention convention = IndexConvention::WeightedScale;
    double tolerance = 1e-10;
    int max_lm_iterations = 300;
    /// Lower bound on z5_i^2 / sum z5^2 during the search.
    double weight_floor = 1e-3;
};

/// Multistart Levenberg-Marquardt on the squared residuals with z3_0 = 1 and
/// z5^2 on a floored simplex. Returns the first restart whose candidate is
/// nontrivial with max residual <= tolerance. Not finding one proves nothing.
std::optional<PolyCandidate> search_nontrivial(const PolySystemInstance& inst, int restarts, std::uint64_t seed,
                                               const SearchOptions& opts = {});

enum class RbarPolicy { ExactTable, Conjecture };

struct RbarValue {
    int value = 0;
    bool conjectural = false;
};

/// ExactTable: 4 for m = 2, 6 for m = 3, UnsupportedValue otherwise.
/// Conjecture: 2m, flagged conjectural for m >= 4.
RbarValue rbar(int m, RbarPolicy policy);

}  // namespace moe
