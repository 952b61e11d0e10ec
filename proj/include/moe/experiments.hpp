#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "moe/em.hpp"
#include "moe/metrics.hpp"
#include "moe/model.hpp"
#include "moe/polysys.hpp"
#include "moe/types.hpp"

namespace moe {

enum class LossKind { D1, D2, D3, Hellinger };

struct LossSpec {
    LossKind kind = LossKind::D1;
    LossRestriction restrict = LossRestriction::Full;

    /// "d1", "d2", "d3", "hellinger", with "[expert_only]" or
    /// "[expert_weight]" appended for restricted Voronoi losses.
    std::string name() const;
    static LossSpec parse(std::string_view text);

    bool operator==(const LossSpec&) const = default;
};

/// `count` integers log-spaced on [lo, hi], rounded, strictly increasing.
std::vector<std::size_t> logspace_sizes(std::size_t lo, std::size_t hi, std::size_t count);

struct SweepConfig {
    MixingMeasure truth = reference_truth();
    Box box = Box::unit(1);
    /// Sparsity of the data-generating gate, and the K of the Voronoi losses.
    std::size_t data_K = 2;
    /// Template; init and seed are filled per replicate.
    FitConfig fit;
    double noise_std = 0.05;
    /// Start every fit at the truth instead of a jittered cell plan (k == k*).
    bool init_at_truth = false;

    LossSpec loss;
    std::vector<LossSpec> extra_losses;
    RbarPolicy rbar_policy = RbarPolicy::ExactTable;
    /// Restrict the outer max of Voronoi losses to true regions of positive mass.
    bool positive_mass_only = false;
    std::size_t mass_mc = 100000;
    /// Evaluate Voronoi losses on align_gauge(fit, truth) instead of the raw fit.
    bool align_gauge = true;
    std::size_t hellinger_mc = 400;
    std::size_t hellinger_grid = 2001;

    std::vector<std::size_t> sample_sizes = logspace_sizes(100, 10000, 12);
    std::size_t replicates = 20;
    std::uint64_t base_seed = 0;
    std::size_t jobs = 1;
    /// Record per-fit wall time in the CSV. Off keeps the CSV byte-reproducible.
    bool timing = false;

    void validate() const;
};

struct SweepRow {
    std::size_t n = 0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    double loss = 0.0;
    double loglik = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    bool failed = false;
    double wallclock_ms = 0.0;
    Vec extras;

    bool operator==(const SweepRow&) const = default;
};

struct SlopeFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double stderr_slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    std::size_t points = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<std::string> extra_names;
    /// NaN when fit_slope failed.
    SlopeFit slope;
    /// Error text for failed rows, same order as the failed rows.
    std::vector<std::string> failures;

    std::size_t failed_rows() const;
};

/// Seed of replicate `rep` at sample size n.
std::uint64_t replicate_seed(std::uint64_t base, std::size_t n, std::size_t rep);

SweepResult run_sweep(const SweepConfig& cfg);

struct SlopeOptions {
    /// Regress each row instead of the per-n mean.
    bool per_row = false;
    std::size_t n_min = 0;
    std::size_t n_max = std::numeric_limits<std::size_t>::max();
    /// Index into SweepRow::extras, or -1 for the main loss column.
    int column = -1;
};

/// OLS of log(mean loss) on log(n). Failed rows and nonpositive means are
/// dropped; fewer than 3 remaining points throws InsufficientData.
SlopeFit fit_slope(const std::vector<SweepRow>& rows, const SlopeOptions& opts = {});

struct PerNStats {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t count = 0;
};
std::vector<PerNStats> per_n_stats(const std::vector<SweepRow>& rows, int column = -1);

std::string csv_header(const std::vector<std::string>& extra_names);
std::string to_csv(const SweepResult& result);
SweepResult parse_csv(const std::string& text);
void emit_csv(const SweepResult& result, const std::string& path);
SweepResult read_csv(const std::string& path);

struct SvgStyle {
    std::string title = "mean loss vs n";
    std::string y_label = "loss";
    /// Emit the plot without the regression line when the slope fit fails.
    bool allow_missing_line = false;
    int width = 640;
    int height = 480;
    int column = -1;
};

/// Log-log plot of per-n means with +/- 2 sd bars and the dashed regression
/// line labelled with its slope. Throws InsufficientData when the slope
/// cannot be fitted unless style.allow_missing_line is set.
std::string svg_loglog(const SweepResult& result, const SvgStyle& style = {});
void emit_svg_loglog(const SweepResult& result, const std::string& path, const SvgStyle& style = {});

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace moe
