#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "moe/types.hpp"

namespace moe {

/// Indices of the K largest logits, sorted ascending. Ties go to the lower
/// index. Throws InvalidArgument unless 1 <= K <= logits.size().
std::vector<std::size_t> topk_select(std::span<const double> logits, std::size_t K);

/// Sparse gate for one input.
struct GateOutput {
    std::vector<std::size_t> selected;  // sorted, size K
    Vec weights;                        // length k, zero outside `selected`
};

/// Gating logits beta1_i . x (bias excluded).
Vec gate_logits(const MixingMeasure& G, std::span<const double> x);

/// Softmax over {beta1_i . x + beta0_i : i in TopK(beta1 . x)}, zero elsewhere.
GateOutput gate_weights(const MixingMeasure& G, std::span<const double> x, std::size_t K);

double expert_mean(const ExpertParams& p, std::span<const double> x);

/// log f(y | a.x + b, sigma) for the family. sigma is a scale (standard
/// deviation for the Gaussian).
double log_expert_density(const Family& family, const ExpertParams& params,
                          std::span<const double> x, double y);
double expert_density(const Family& family, const ExpertParams& params,
                      std::span<const double> x, double y);

/// Location-scale log density of the family at residual `y - mean`.
double log_family_density(const Family& family, double residual, double sigma);

/// Mixture log density via log-sum-exp over the selected experts.
double log_conditional_density(const MixingMeasure& G, std::size_t K,
                               std::span<const double> x, double y);
double conditional_density(const MixingMeasure& G, std::size_t K,
                           std::span<const double> x, double y);

/// Draws x uniformly on `bounds`, then an expert index from the gate and y
/// from that expert. Deterministic in `seed`. Throws ValidationError if G
/// breaks a truth assumption and InvalidArgument for n == 0 or bad dimensions.
Dataset sample_dataset(const MixingMeasure& G, std::size_t K, std::size_t n, const Box& bounds,
                       std::uint64_t seed);

/// Throws ValidationError if any input leaves the bounds.
void validate_inputs(const Dataset& data);

// Text document: header `family=<name> d=<d> k=<k>`, then one line per
// component `beta0 beta1[0..d) a[0..d) b sigma`, 17 significant digits.
std::string to_text(const MixingMeasure& G);
MixingMeasure parse_measure(const std::string& text);
MixingMeasure read_measure(const std::string& path);
void write_measure(const MixingMeasure& G, const std::string& path);

/// TSV with the x columns then y, one row per sample, no header.
std::string to_tsv(const Dataset& data);
Dataset parse_tsv(const std::string& text, const Box* bounds = nullptr);
Dataset read_tsv(const std::string& path, const Box* bounds = nullptr);

/// Decimal with 17 significant digits (round-trips every double).
std::string format_double(double v);

/// The two-expert ground truth used by the rate experiments (d = 1):
/// beta0 = (-8, 0), beta1 = (25, 0), a = (-20, 20), b = (15, -5), sigma = (0.3, 0.4).
MixingMeasure reference_truth();

}  // namespace moe
