#include "moe/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "moe/parallel.hpp"
#include "moe/rng.hpp"

namespace moe {

namespace {

constexpr std::uint64_t kDataTag = 0xda7a;
constexpr std::uint64_t kPlanTag = 0x91a2;
constexpr std::uint64_t kHellTag = 0x4e11;
constexpr std::uint64_t kMassTag = 0x3a55;

const char* restriction_suffix(LossRestriction r) {
    switch (r) {
        case LossRestriction::Full: return "";
        case LossRestriction::ExpertAndWeight: return "[expert_weight]";
        case LossRestriction::ExpertOnly: return "[expert_only]";
    }
    return "";
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

template <class T>
T parse_int(std::string_view tok, const std::string& ctx) {
    T v{};
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw InvalidArgument(ctx + ": not an integer: '" + std::string(tok) + "'");
    return v;
}

double parse_real(std::string_view tok, const std::string& ctx) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw InvalidArgument(ctx + ": not a number: '" + std::string(tok) + "'");
    return v;
}

double column_value(const SweepRow& row, int column) {
    if (column < 0) return row.loss;
    return static_cast<std::size_t>(column) < row.extras.size() ? row.extras[static_cast<std::size_t>(column)]
                                                               : std::numeric_limits<double>::quiet_NaN();
}

double voronoi_value(const LossSpec& spec, const SweepConfig& cfg, const MixingMeasure& fitted,
                     const std::function<bool(std::span<const std::size_t>)>& filter) {
    LossOptions opts;
    opts.restrict = spec.restrict;
    opts.subset_filter = filter;
    const std::size_t K = cfg.data_K;
    switch (spec.kind) {
        case LossKind::D1: return loss_d1(fitted, cfg.truth, K, opts).value;
        case LossKind::D2: {
            const RbarPolicy policy = cfg.rbar_policy;
            return loss_d2(fitted, cfg.truth, K, [policy](int m) { return rbar(m, policy).value; }, opts).value;
        }
        case LossKind::D3: return loss_d3(fitted, cfg.truth, K, opts).value;
        case LossKind::Hellinger: break;
    }
    throw InvalidArgument("not a Voronoi loss");
}

}  // namespace

std::string LossSpec::name() const {
    switch (kind) {
        case LossKind::D1: return std::string("d1") + restriction_suffix(restrict);
        case LossKind::D2: return std::string("d2") + restriction_suffix(restrict);
        case LossKind::D3: return std::string("d3") + restriction_suffix(restrict);
        case LossKind::Hellinger: return "hellinger";
    }
    return "unknown";
}

LossSpec LossSpec::parse(std::string_view text) {
    LossSpec spec;
    std::string_view base = text;
    if (const auto lb = text.find('['); lb != std::string_view::npos) {
        if (!text.ends_with(']')) throw InvalidArgument("bad loss name: " + std::string(text));
        const auto tag = text.substr(lb + 1, text.size() - lb - 2);
        base = text.substr(0, lb);
        if (tag == "full") spec.restrict = LossRestriction::Full;
        else if (tag == "expert_weight") spec.restrict = LossRestriction::ExpertAndWeight;
        else if (tag == "expert_only") spec.restrict = LossRestriction::ExpertOnly;
        else throw InvalidArgument("unknown loss restriction: " + std::string(tag));
    }
    if (base == "d1") spec.kind = LossKind::D1;
    else if (base == "d2") spec.kind = LossKind::D2;
    else if (base == "d3") spec.kind = LossKind::D3;
    else if (base == "hellinger") spec.kind = LossKind::Hellinger;
    else throw InvalidArgument("unknown loss: " + std::string(text));
    if (spec.kind == LossKind::Hellinger && spec.restrict != LossRestriction::Full)
        throw InvalidArgument("hellinger loss takes no restriction");
    return spec;
}

std::vector<std::size_t> logspace_sizes(std::size_t lo, std::size_t hi, std::size_t count) {
    if (lo < 1 || hi <= lo || count < 2) throw InvalidArgument("logspace needs 1 <= lo < hi and count >= 2");
    std::vector<std::size_t> out;
    const double a = std::log10(static_cast<double>(lo)), b = std::log10(static_cast<double>(hi));
    for (std::size_t t = 0; t < count; ++t) {
        const double e = a + (b - a) * static_cast<double>(t) / static_cast<double>(count - 1);
        const auto v = static_cast<std::size_t>(std::llround(std::pow(10.0, e)));
        if (out.empty() || v > out.back()) out.push_back(v);
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

void SweepConfig::validate() const {
    if (sample_sizes.empty()) throw InvalidArgument("sweep needs at least one sample size");
    for (std::size_t t = 0; t < sample_sizes.size(); ++t) {
        if (sample_sizes[t] < 1) throw InvalidArgument("sample sizes must be >= 1");
        if (t > 0 && sample_sizes[t] <= sample_sizes[t - 1])
            throw InvalidArgument("sample sizes must be strictly increasing");
    }
    if (replicates < 1) throw InvalidArgument("replicates must be >= 1");
    if (data_K < 1 || data_K > truth.order()) throw InvalidArgument("data_K must satisfy 1 <= data_K <= k*");
    if (fit.K < 1 || fit.K > fit.k) throw InvalidArgument("fit K must satisfy 1 <= K <= k");
    if (fit.k < truth.order()) throw InvalidArgument("fitted order k must be >= k*");
    if (init_at_truth && fit.k != truth.order()) throw InvalidArgument("init at truth needs k == k*");
    if (box.dim() != truth.dim()) throw InvalidArgument("bounds dimension does not match the truth");
    if (!(noise_std >= 0.0)) throw InvalidArgument("noise_std must be >= 0");
    if (hellinger_mc < 1 || hellinger_grid < 2 || mass_mc < 1) throw InvalidArgument("Monte-Carlo sizes must be positive");
    if (auto v = truth.assumption_violations(); !v.empty()) throw ValidationError(std::move(v));
}

std::size_t SweepResult::failed_rows() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.failed; }));
}

std::uint64_t replicate_seed(std::uint64_t base, std::size_t n, std::size_t rep) { return hash_seed(base, n, rep); }

SweepResult run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    SweepResult result;
    for (const auto& e : cfg.extra_losses) result.extra_names.push_back(e.name());

    std::function<bool(std::span<const std::size_t>)> filter;
    if (cfg.positive_mass_only)
        filter = positive_mass_filter(cfg.truth, cfg.data_K, cfg.box, cfg.mass_mc, hash_seed(cfg.base_seed, kMassTag));
    // gauge anchors: components selected on a positive-mass region, else the last one
    std::vector<std::size_t> anchors{cfg.truth.order() - 1};
    if (cfg.positive_mass_only)
        anchors = positive_mass_indices(cfg.truth, cfg.data_K, cfg.box, cfg.mass_mc, hash_seed(cfg.base_seed, kMassTag));

    const std::size_t R = cfg.replicates;
    const std::size_t tasks = cfg.sample_sizes.size() * R;
    result.rows.resize(tasks);
    std::vector<std::string> errors(tasks);

    parallel_for(tasks, cfg.jobs, [&](std::size_t t) {
        SweepRow& row = result.rows[t];
        row.n = cfg.sample_sizes[t / R];
        row.replicate = t % R;
        row.seed = replicate_seed(cfg.base_seed, row.n, row.replicate);
        try {
            const Dataset data = sample_dataset(cfg.truth, cfg.data_K, row.n, cfg.box, hash_seed(row.seed, kDataTag));
            FitConfig fc = cfg.fit;
            fc.seed = row.seed;
            if (cfg.init_at_truth) {
                fc.start = cfg.truth;
            } else {
                fc.start.reset();
                fc.init = InitSpec{cfg.truth, random_cell_plan(fc.k, cfg.truth.order(), hash_seed(row.seed, kPlanTag)),
                                   cfg.noise_std};
            }
            const FitResult fr = fit(data, fc);
            const MixingMeasure fitted = cfg.align_gauge ? align_gauge(fr.measure, cfg.truth, anchors) : fr.measure;
            const auto value = [&](const LossSpec& spec) {
                if (spec.kind == LossKind::Hellinger)
                    return expected_hellinger(fr.measure, fc.K, cfg.truth, cfg.data_K, cfg.box, cfg.hellinger_mc,
                                              hash_seed(row.seed, kHellTag), cfg.hellinger_grid)
                        .mean;
                return voronoi_value(spec, cfg, fitted, filter);
            };
            row.loss = value(cfg.loss);
            for (const auto& e : cfg.extra_losses) row.extras.push_back(value(e));
            row.loglik = fr.loglik_trace.back();
            row.iterations = fr.iterations;
            row.converged = fr.converged;
            row.wallclock_ms = cfg.timing ? fr.wallclock_ms : 0.0;
        } catch (const std::exception& e) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.failed = true;
            row.loss = nan;
            row.loglik = nan;
            row.iterations = 0;
            row.converged = false;
            row.wallclock_ms = 0.0;
            row.extras.assign(cfg.extra_losses.size(), nan);
            errors[t] = "n=" + std::to_string(row.n) + " replicate=" + std::to_string(row.replicate) + ": " + e.what();
        }
    });
    for (const auto& e : errors)
        if (!e.empty()) result.failures.push_back(e);
    try {
        result.slope = fit_slope(result.rows);
    } catch (const InsufficientData&) {
    }
    return result;
}

std::vector<PerNStats> per_n_stats(const std::vector<SweepRow>& rows, int column) {
    std::map<std::size_t, std::vector<double>> by_n;
    for (const auto& r : rows) {
        const double v = column_value(r, column);
        if (!r.failed && std::isfinite(v)) by_n[r.n].push_back(v);
    }
    std::vector<PerNStats> out;
    for (const auto& [n, vals] : by_n) {
        PerNStats s;
        s.n = n;
        s.count = vals.size();
        for (double v : vals) s.mean += v;
        s.mean /= static_cast<double>(vals.size());
        if (vals.size() > 1) {
            double ss = 0.0;
            for (double v : vals) ss += (v - s.mean) * (v - s.mean);
            s.sd = std::sqrt(ss / static_cast<double>(vals.size() - 1));
        }
        out.push_back(s);
    }
    return out;
}

SlopeFit fit_slope(const std::vector<SweepRow>& rows, const SlopeOptions& opts) {
    Vec xs, ys;
    if (opts.per_row) {
        for (const auto& r : rows) {
            const double v = column_value(r, opts.column);
            if (r.failed || !(v > 0.0) || !std::isfinite(v) || r.n < opts.n_min || r.n > opts.n_max) continue;
            xs.push_back(std::log(static_cast<double>(r.n)));
            ys.push_back(std::log(v));
        }
    } else {
        for (const auto& s : per_n_stats(rows, opts.column)) {
            if (!(s.mean > 0.0) || s.n < opts.n_min || s.n > opts.n_max) continue;
            xs.push_back(std::log(static_cast<double>(s.n)));
            ys.push_back(std::log(s.mean));
        }
    }
    std::vector<double> distinct = xs;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3)
        throw InsufficientData("slope fit needs at least 3 sample sizes with positive mean loss, have " +
                               std::to_string(distinct.size()));
    const double m = static_cast<double>(xs.size());
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        xbar += xs[t];
        ybar += ys[t];
    }
    xbar /= m;
    ybar /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        sxx += (xs[t] - xbar) * (xs[t] - xbar);
        sxy += (xs[t] - xbar) * (ys[t] - ybar);
    }
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = ybar - f.slope * xbar;
    double ssr = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const double e = ys[t] - (f.intercept + f.slope * xs[t]);
        ssr += e * e;
    }
    f.stderr_slope = std::sqrt(ssr / (m - 2.0) / sxx);
    f.points = xs.size();
    return f;
}

std::string csv_header(const std::vector<std::string>& extra_names) {
    std::string h = "n,replicate,seed,loss,loglik,iterations,converged,wallclock_ms";
    for (const auto& e : extra_names) h += "," + e;
    return h;
}

std::string to_csv(const SweepResult& result) {
    std::string out = csv_header(result.extra_names) + "\n";
    for (const auto& r : result.rows) {
        out += std::to_string(r.n) + "," + std::to_string(r.replicate) + "," + std::to_string(r.seed) + "," +
               format_double(r.loss) + "," + format_double(r.loglik) + "," + std::to_string(r.iterations) + "," +
               (r.failed ? "failed" : (r.converged ? "1" : "0")) + "," + format_double(r.wallclock_ms);
        for (double e : r.extras) out += "," + format_double(e);
        out += "\n";
    }
    return out;
}

SweepResult parse_csv(const std::string& text) {
    SweepResult result;
    auto lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw InvalidArgument("CSV is empty");
    const auto head = split(lines.front(), ',');
    const std::string base = csv_header({});
    const auto base_cols = split(base, ',');
    if (head.size() < base_cols.size() || !std::equal(base_cols.begin(), base_cols.end(), head.begin()))
        throw InvalidArgument("CSV header must start with '" + base + "'");
    for (std::size_t c = base_cols.size(); c < head.size(); ++c) result.extra_names.emplace_back(head[c]);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string ctx = "CSV line " + std::to_string(li + 1);
        const auto f = split(lines[li], ',');
        if (f.size() != head.size()) throw InvalidArgument(ctx + ": expected " + std::to_string(head.size()) + " fields");
        SweepRow r;
        r.n = parse_int<std::size_t>(f[0], ctx);
        r.replicate = parse_int<std::size_t>(f[1], ctx);
        r.seed = parse_int<std::uint64_t>(f[2], ctx);
        r.loss = parse_real(f[3], ctx);
        r.loglik = parse_real(f[4], ctx);
        r.iterations = parse_int<std::size_t>(f[5], ctx);
        if (f[6] == "failed") r.failed = true;
        else if (f[6] == "1") r.converged = true;
        else if (f[6] != "0") throw InvalidArgument(ctx + ": converged must be 0, 1 or failed");
        r.wallclock_ms = parse_real(f[7], ctx);
        for (std::size_t c = base_cols.size(); c < f.size(); ++c) r.extras.push_back(parse_real(f[c], ctx));
        result.rows.push_back(std::move(r));
    }
    try {
        result.slope = fit_slope(result.rows);
    } catch (const InsufficientData&) {
    }
    return result;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit_csv(const SweepResult& result, const std::string& path) { write_text_file(path, to_csv(result)); }

SweepResult read_csv(const std::string& path) {
    try {
        return parse_csv(read_text_file(path));
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(path + ": " + e.what());
    }
}

void emit_svg_loglog(const SweepResult& result, const std::string& path, const SvgStyle& style) {
    write_text_file(path, svg_loglog(result, style));
}

}  // namespace moe
