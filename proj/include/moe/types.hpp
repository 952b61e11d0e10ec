#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace moe {

using Vec = std::vector<double>;

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a measure or dataset breaks one of the modelling assumptions.
/// `violations()` lists each failed rule, prefixed with the rule name.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

class DegenerateData : public std::runtime_error {
public:
    DegenerateData(std::size_t sample, const std::string& what)
        : std::runtime_error(what), sample_(sample) {}
    std::size_t sample_index() const noexcept { return sample_; }

private:
    std::size_t sample_;
};

class UnsupportedValue : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FamilyKind { Gaussian, Laplace, StudentT };

/// Location-scale expert family. `dof` is only meaningful for StudentT.
struct Family {
    FamilyKind kind = FamilyKind::Gaussian;
    double dof = 5.0;

    static Family gaussian() { return {FamilyKind::Gaussian, 5.0}; }
    static Family laplace() { return {FamilyKind::Laplace, 5.0}; }
    static Family student_t(double dof = 5.0);

    /// "gaussian", "laplace" or "student_t(<dof>)".
    std::string name() const;
    static Family parse(std::string_view text);

    bool operator==(const Family&) const = default;
};

struct ExpertParams {
    Vec a;           // slope of the expert mean
    double b = 0.0;  // intercept
    double sigma = 1.0;

    bool operator==(const ExpertParams&) const = default;
};

struct GateParams {
    double beta0 = 0.0;
    Vec beta1;

    bool operator==(const GateParams&) const = default;
};

struct Component {
    GateParams gate;
    ExpertParams expert;

    bool operator==(const Component&) const = default;
};

/// Finite list of gated experts. Immutable after construction; the only
/// structural checks enforced here are dimensional consistency, finiteness
/// and sigma > 0. The identifiability assumptions are queried separately
/// (fitted measures may break them) and enforced by `truth()`.
class MixingMeasure {
public:
    MixingMeasure(Family family, std::vector<Component> components);

    /// Constructor for ground-truth measures: additionally requires the last
    /// component pinned, distinct experts and at least one nonzero
    /// gating slope. Throws ValidationError naming every violation.
    static MixingMeasure truth(Family family, std::vector<Component> components);

    std::size_t order() const noexcept { return components_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const Family& family() const noexcept { return family_; }
    const std::vector<Component>& components() const noexcept { return components_; }
    const Component& operator[](std::size_t i) const { return components_[i]; }

    bool is_pinned() const;
    bool experts_distinct() const;
    bool input_dependent() const;
    /// Empty when the pinning, distinct-expert and input-dependence rules hold.
    std::vector<std::string> assumption_violations() const;

    /// Copy with every gate shifted by (delta0, delta1). Leaves every
    /// conditional density unchanged.
    MixingMeasure shifted_gates(double delta0, std::span<const double> delta1) const;

    bool operator==(const MixingMeasure&) const = default;

private:
    Family family_;
    std::vector<Component> components_;
    std::size_t dim_ = 0;
};

/// Axis-aligned bounding box for the inputs.
struct Box {
    Vec lo;
    Vec hi;

    static Box unit(std::size_t d) { return {Vec(d, 0.0), Vec(d, 1.0)}; }
    std::size_t dim() const noexcept { return lo.size(); }
    bool contains(std::span<const double> x) const;
};

/// Inputs are stored column-major: `x_col(p)[j]` is coordinate p of sample j.
class Dataset {
public:
    Dataset(std::vector<Vec> x_columns, Vec y, Box bounds);

    std::size_t size() const noexcept { return y_.size(); }
    std::size_t dim() const noexcept { return cols_.size(); }
    std::span<const double> x_col(std::size_t p) const { return cols_[p]; }
    std::span<const double> y() const noexcept { return y_; }
    double x(std::size_t j, std::size_t p) const { return cols_[p][j]; }
    Vec row(std::size_t j) const;
    const Box& bounds() const noexcept { return bounds_; }

private:
    std::vector<Vec> cols_;
    Vec y_;
    Box bounds_;
};

}  // namespace moe
