#pragma once

#include <map>
#include <optional>
#include <string>

#include "moe/em.hpp"
#include "moe/experiments.hpp"

namespace moe {

/// key = value lines plus named sections. A line `[name]` starts a section
/// whose body is kept verbatim until the next section header; the `[truth]`
/// section holds a measure document. `#` starts a comment line.
struct ConfigDocument {
    std::map<std::string, std::string> values;
    std::map<std::string, std::string> sections;
    std::map<std::string, int> line_of;

    std::optional<std::string> get(const std::string& key) const;
};

ConfigDocument parse_config(const std::string& text);
ConfigDocument read_config(const std::string& path);

/// Sweep settings; unknown keys throw InvalidArgument naming the key.
///   truth section         (default: the two-expert reference truth)
///   x_lo, x_hi            comma lists, default the unit box
///   data_K, k, K          data sparsity, fitted order, fitted sparsity
///   tol, max_iters, gating_mode (newton|gradient), gating_lr, gating_steps,
///   sigma_floor, noise_std, init (jitter|truth)
///   loss, extra_losses    e.g. d1, d2, hellinger, d1[expert_only]
///   rbar (exact|conjecture), positive_mass (on|off), mass_mc, gauge (aligned|raw)
///   hellinger_mc, hellinger_grid
///   sample_sizes          "100,200,400" or "logspace(100,10000,12)"
///   replicates, base_seed, jobs, timing (on|off), full (on|off)
SweepConfig sweep_config_from(const ConfigDocument& doc);

/// Fit settings: the fit keys above plus the truth section (the init reference).
/// The init cell plan is left empty for the caller to fill.
FitConfig fit_config_from(const ConfigDocument& doc);

}  // namespace moe
