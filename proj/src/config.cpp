#include "moe/config.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "moe/model.hpp"

namespace moe {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(',', start);
        const std::string tok = trim(std::string_view(s).substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (!tok.empty()) out.push_back(tok);
        if (pos == std::string::npos) return out;
        start = pos + 1;
    }
}

class Reader {
public:
    explicit Reader(const ConfigDocument& doc) : doc_(doc) {}

    std::optional<std::string> raw(const std::string& key) {
        seen_.insert(key);
        return doc_.get(key);
    }

    std::string where(const std::string& key) const {
        const auto it = doc_.line_of.find(key);
        return "config line " + (it == doc_.line_of.end() ? std::string("?") : std::to_string(it->second)) +
               " (" + key + ")";
    }

    template <class T>
    void integer(const std::string& key, T& out) {
        if (auto v = raw(key)) {
            T x{};
            auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
            if (ec != std::errc() || p != v->data() + v->size())
                throw InvalidArgument(where(key) + ": expected an integer, got '" + *v + "'");
            out = x;
        }
    }

    void real(const std::string& key, double& out) {
        if (auto v = raw(key)) out = number(key, *v);
    }

    void flag(const std::string& key, bool& out) {
        if (auto v = raw(key)) {
            if (*v == "on" || *v == "true" || *v == "1") out = true;
            else if (*v == "off" || *v == "false" || *v == "0") out = false;
            else throw InvalidArgument(where(key) + ": expected on or off, got '" + *v + "'");
        }
    }

    double number(const std::string& key, const std::string& v) const {
        double x = 0.0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc() || p != v.data() + v.size())
            throw InvalidArgument(where(key) + ": expected a number, got '" + v + "'");
        return x;
    }

    void reject_unknown() const {
        for (const auto& [key, value] : doc_.values)
            if (!seen_.count(key)) throw InvalidArgument(where(key) + ": unknown key");
        for (const auto& [name, body] : doc_.sections)
            if (name != "truth") throw InvalidArgument("unknown config section [" + name + "]");
    }

private:
    const ConfigDocument& doc_;
    std::set<std::string> seen_;
};

MixingMeasure truth_of(const ConfigDocument& doc) {
    const auto it = doc.sections.find("truth");
    if (it == doc.sections.end()) return reference_truth();
    const MixingMeasure parsed = parse_measure(it->second);
    return MixingMeasure::truth(parsed.family(), parsed.components());
}

// Reads the fit keys into cfg; returns the init mode.
bool read_fit_keys(Reader& rd, FitConfig& cfg, double& noise_std) {
    rd.integer("k", cfg.k);
    rd.integer("K", cfg.K);
    rd.real("tol", cfg.tol);
    rd.integer("max_iters", cfg.max_iters);
    bool lr_given = false;
    if (auto mode = rd.raw("gating_mode")) {
        if (*mode == "newton") cfg.gating_mode = GatingMode::Newton;
        else if (*mode == "gradient") cfg.gating_mode = GatingMode::Gradient;
        else throw InvalidArgument(rd.where("gating_mode") + ": expected newton or gradient");
    }
    if (auto lr = rd.raw("gating_lr")) {
        cfg.gating_lr = rd.number("gating_lr", *lr);
        lr_given = true;
    }
    if (!lr_given) cfg.gating_lr = cfg.gating_mode == GatingMode::Newton ? 1.0 : 0.1;
    rd.integer("gating_steps", cfg.gating_steps_per_m);
    rd.real("sigma_floor", cfg.sigma_floor);
    rd.real("noise_std", noise_std);
    bool at_truth = false;
    if (auto init = rd.raw("init")) {
        if (*init == "truth") at_truth = true;
        else if (*init != "jitter") throw InvalidArgument(rd.where("init") + ": expected jitter or truth");
    }
    return at_truth;
}

}  // namespace

std::optional<std::string> ConfigDocument::get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
}

ConfigDocument parse_config(const std::string& text) {
    ConfigDocument doc;
    std::string section;
    int lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string_view raw(text.data() + start, end - start);
        start = end + 1;
        ++lineno;
        const std::string line = trim(raw);
        if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (doc.sections.count(section)) throw InvalidArgument("duplicate config section [" + section + "]");
            doc.sections[section] = "";
            continue;
        }
        if (!section.empty()) {
            doc.sections[section] += std::string(raw) + "\n";
            continue;
        }
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
        if (doc.values.count(key))
            throw InvalidArgument("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        doc.values[key] = value;
        doc.line_of[key] = lineno;
    }
    return doc;
}

ConfigDocument read_config(const std::string& path) {
    try {
        return parse_config(read_text_file(path));
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(path + ": " + e.what());
    }
}

SweepConfig sweep_config_from(const ConfigDocument& doc) {
    Reader rd(doc);
    SweepConfig cfg;
    cfg.truth = truth_of(doc);
    cfg.box = Box::unit(cfg.truth.dim());
    if (auto lo = rd.raw("x_lo")) {
        cfg.box.lo.clear();
        for (const auto& t : split_list(*lo)) cfg.box.lo.push_back(rd.number("x_lo", t));
    }
    if (auto hi = rd.raw("x_hi")) {
        cfg.box.hi.clear();
        for (const auto& t : split_list(*hi)) cfg.box.hi.push_back(rd.number("x_hi", t));
    }
    if (cfg.box.lo.size() != cfg.box.hi.size()) throw InvalidArgument("x_lo and x_hi differ in length");
    for (std::size_t p = 0; p < cfg.box.dim(); ++p)
        if (!(cfg.box.lo[p] < cfg.box.hi[p]))
            throw ValidationError({"bounded inputs: x_lo must be < x_hi in every coordinate"});

    cfg.fit.k = cfg.truth.order();
    cfg.fit.K = cfg.truth.order();
    cfg.data_K = cfg.truth.order();
    rd.integer("data_K", cfg.data_K);
    cfg.init_at_truth = read_fit_keys(rd, cfg.fit, cfg.noise_std);

    if (auto loss = rd.raw("loss")) cfg.loss = LossSpec::parse(*loss);
    if (auto extra = rd.raw("extra_losses"))
        for (const auto& t : split_list(*extra)) cfg.extra_losses.push_back(LossSpec::parse(t));
    if (auto rb = rd.raw("rbar")) {
        if (*rb == "exact") cfg.rbar_policy = RbarPolicy::ExactTable;
        else if (*rb == "conjecture") cfg.rbar_policy = RbarPolicy::Conjecture;
        else throw InvalidArgument(rd.where("rbar") + ": expected exact or conjecture");
    }
    rd.flag("positive_mass", cfg.positive_mass_only);
    rd.integer("mass_mc", cfg.mass_mc);
    if (auto g = rd.raw("gauge")) {
        if (*g == "aligned") cfg.align_gauge = true;
        else if (*g == "raw") cfg.align_gauge = false;
        else throw InvalidArgument(rd.where("gauge") + ": expected aligned or raw");
    }
    rd.integer("hellinger_mc", cfg.hellinger_mc);
    rd.integer("hellinger_grid", cfg.hellinger_grid);

    bool full = false;
    rd.flag("full", full);
    if (full) {
        cfg.sample_sizes = logspace_sizes(100, 100000, 200);
        cfg.replicates = 40;
    }
    if (auto sizes = rd.raw("sample_sizes")) {
        const std::string& s = *sizes;
        if (s.starts_with("logspace(") && s.ends_with(")")) {
            const auto parts = split_list(s.substr(9, s.size() - 10));
            if (parts.size() != 3) throw InvalidArgument(rd.where("sample_sizes") + ": logspace(lo,hi,count)");
            const auto as_size = [&](const std::string& t) {
                const double v = rd.number("sample_sizes", t);
                if (!(v >= 1.0) || v != std::floor(v)) throw InvalidArgument(rd.where("sample_sizes") + ": bad bound " + t);
                return static_cast<std::size_t>(v);
            };
            cfg.sample_sizes = logspace_sizes(as_size(parts[0]), as_size(parts[1]), as_size(parts[2]));
        } else {
            cfg.sample_sizes.clear();
            for (const auto& t : split_list(s)) {
                const double v = rd.number("sample_sizes", t);
                if (!(v >= 1.0) || v != std::floor(v)) throw InvalidArgument(rd.where("sample_sizes") + ": bad size " + t);
                cfg.sample_sizes.push_back(static_cast<std::size_t>(v));
            }
        }
    }
    rd.integer("replicates", cfg.replicates);
    rd.integer("base_seed", cfg.base_seed);
    rd.integer("jobs", cfg.jobs);
    rd.flag("timing", cfg.timing);
    rd.reject_unknown();
    cfg.validate();
    return cfg;
}

FitConfig fit_config_from(const ConfigDocument& doc) {
    Reader rd(doc);
    const MixingMeasure truth = truth_of(doc);
    FitConfig cfg;
    cfg.k = truth.order();
    cfg.K = truth.order();
    double noise_std = 0.05;
    const bool at_truth = read_fit_keys(rd, cfg, noise_std);
    rd.reject_unknown();
    if (at_truth) {
        if (cfg.k != truth.order()) throw InvalidArgument("init = truth needs k equal to the truth's order");
        cfg.start = truth;
    } else {
        cfg.init = InitSpec{truth, {}, noise_std};
    }
    return cfg;
}

}  // namespace moe
