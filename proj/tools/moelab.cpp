// moelab: command-line front end for the moe library.
//
// Exit codes: 0 success, 1 usage/config/validation error, 2 sweep finished
// with failed rows.

#include <cmath>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "moe/config.hpp"
#include "moe/em.hpp"
#include "moe/experiments.hpp"
#include "moe/kernels.hpp"
#include "moe/metrics.hpp"
#include "moe/model.hpp"
#include "moe/partition.hpp"
#include "moe/polysys.hpp"

namespace {

using namespace moe;

Box box_from(const std::vector<double>& lo, const std::vector<double>& hi, std::size_t d) {
    if (lo.empty() && hi.empty()) return Box::unit(d);
    if (lo.size() != d || hi.size() != d) throw InvalidArgument("--x-lo/--x-hi need one value per input dimension");
    for (std::size_t p = 0; p < d; ++p)
        if (!(lo[p] < hi[p])) throw ValidationError({"bounded inputs: lower bound must be < upper bound"});
    return {lo, hi};
}

LossRestriction restriction_from(const std::string& s) {
    if (s == "full") return LossRestriction::Full;
    if (s == "expert_weight") return LossRestriction::ExpertAndWeight;
    if (s == "expert_only") return LossRestriction::ExpertOnly;
    throw InvalidArgument("unknown restriction: " + s);
}

std::string tsv_number(double v) { return format_double(v); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Top-K sparse softmax gated mixture-of-experts laboratory"};
    app.require_subcommand(1, 1);
    std::string kernels_name;
    app.add_option("--kernels", kernels_name, "Kernel variant: scalar or avx2");

    std::uint64_t seed = 0;

    // gen
    auto* gen = app.add_subcommand("gen", "Sample a dataset from a true measure");
    std::string gen_truth, gen_out;
    std::size_t gen_K = 1, gen_n = 0;
    std::vector<double> gen_lo, gen_hi;
    gen->add_option("--truth", gen_truth, "Measure document")->required();
    gen->add_option("--K", gen_K, "Gate sparsity")->required();
    gen->add_option("--n", gen_n, "Sample size")->required();
    gen->add_option("--seed", seed, "Random seed")->required();
    gen->add_option("--out", gen_out, "Output TSV")->required();
    gen->add_option("--x-lo", gen_lo, "Lower input bounds");
    gen->add_option("--x-hi", gen_hi, "Upper input bounds");

    // fit
    auto* fitc = app.add_subcommand("fit", "Fit a measure to a dataset by EM");
    std::string fit_data, fit_cfg, fit_out, fit_summary;
    std::vector<double> fit_lo, fit_hi;
    fitc->add_option("--data", fit_data, "Dataset TSV")->required();
    fitc->add_option("--config", fit_cfg, "Fit config (key = value, [truth] section)")->required();
    fitc->add_option("--seed", seed, "Random seed")->required();
    fitc->add_option("--out", fit_out, "Fitted measure document")->required();
    fitc->add_option("--summary", fit_summary, "JSON summary (default: stdout)");
    fitc->add_option("--x-lo", fit_lo, "Lower input bounds");
    fitc->add_option("--x-hi", fit_hi, "Upper input bounds");

    // loss
    auto* loss = app.add_subcommand("loss", "Voronoi loss between a fitted and a true measure");
    std::string loss_metric = "d1", loss_fit, loss_true, loss_rbar = "exact", loss_restrict = "full", loss_out;
    std::size_t loss_K = 1;
    bool loss_align = false;
    loss->add_option("--metric", loss_metric, "d1, d2 or d3")->check(CLI::IsMember({"d1", "d2", "d3"}));
    loss->add_option("--K", loss_K, "Sparsity of the true gate")->required();
    loss->add_option("--fit", loss_fit, "Fitted measure document")->required();
    loss->add_option("--true", loss_true, "True measure document")->required();
    loss->add_option("--rbar", loss_rbar, "exact or conjecture")->check(CLI::IsMember({"exact", "conjecture"}));
    loss->add_option("--restrict", loss_restrict, "full, expert_weight or expert_only")
        ->check(CLI::IsMember({"full", "expert_weight", "expert_only"}));
    loss->add_flag("--align-gauge", loss_align, "Shift the fitted gates into the truth's gauge first");
    loss->add_option("--out", loss_out, "Write the JSON report here instead of stdout");

    // hellinger
    auto* hel = app.add_subcommand("hellinger", "Expected Hellinger distance between two conditional densities");
    std::string hel_a, hel_b;
    std::size_t hel_Ka = 1, hel_Kb = 1, hel_mc = 1000, hel_grid = 2001, hel_threads = 1;
    std::vector<double> hel_lo, hel_hi;
    hel->add_option("--a", hel_a, "First measure")->required();
    hel->add_option("--Ka", hel_Ka, "Sparsity of the first measure")->required();
    hel->add_option("--b", hel_b, "Second measure")->required();
    hel->add_option("--Kb", hel_Kb, "Sparsity of the second measure")->required();
    hel->add_option("--n-mc", hel_mc, "Monte-Carlo samples of x");
    hel->add_option("--grid", hel_grid, "y quadrature points");
    hel->add_option("--jobs", hel_threads, "Worker threads");
    hel->add_option("--seed", seed, "Random seed")->required();
    hel->add_option("--x-lo", hel_lo, "Lower input bounds");
    hel->add_option("--x-hi", hel_hi, "Upper input bounds");

    // partition-check
    auto* part = app.add_subcommand("partition-check", "Region match rate under shrinking slope perturbations");
    std::string part_truth;
    std::size_t part_K = 1, part_mc = 100000;
    std::vector<double> part_lo, part_hi;
    part->add_option("--truth", part_truth, "True measure")->required();
    part->add_option("--K", part_K, "Gate sparsity")->required();
    part->add_option("--n-mc", part_mc, "Monte-Carlo samples of x");
    part->add_option("--seed", seed, "Random seed")->required();
    part->add_option("--x-lo", part_lo, "Lower input bounds");
    part->add_option("--x-hi", part_hi, "Upper input bounds");

    // polysys
    auto* poly = app.add_subcommand("polysys", "Residual table or nontrivial-solution search");
    int poly_m = 2, poly_d = 1, poly_r = 3, poly_restarts = 200;
    double poly_c = 1.0;
    bool poly_search = false;
    std::string poly_conv = "weighted";
    auto* poly_seed = poly->add_option("--seed", seed, "Random seed (required with --search)");
    poly->add_option("--m", poly_m, "Cell size");
    poly->add_option("--d", poly_d, "Input dimension");
    poly->add_option("--r", poly_r, "Order cap");
    poly->add_option("--c", poly_c, "Scale of the two-component witness");
    poly->add_flag("--search", poly_search, "Search for a nontrivial solution instead of printing residuals");
    poly->add_option("--restarts", poly_restarts, "Search restarts");
    poly->add_option("--convention", poly_conv, "weighted or flat")->check(CLI::IsMember({"weighted", "flat"}));

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Replicated sample-size sweep");
    std::string sweep_cfg, sweep_out, sweep_plot;
    std::size_t sweep_jobs = 0;
    bool sweep_full = false;
    sweep->add_option("--config", sweep_cfg, "Sweep config")->required();
    sweep->add_option("--seed", seed, "Base seed")->required();
    sweep->add_option("--out", sweep_out, "CSV output")->required();
    sweep->add_option("--plot", sweep_plot, "SVG output");
    sweep->add_option("--jobs", sweep_jobs, "Worker threads (overrides the config)");
    sweep->add_flag("--full", sweep_full, "Full grid: 200 sizes up to 1e5, 40 replicates");

    // plot
    auto* plot = app.add_subcommand("plot", "SVG log-log plot from a sweep CSV");
    std::string plot_csv, plot_out, plot_title = "mean loss vs n";
    bool plot_no_line = false;
    plot->add_option("--csv", plot_csv, "Sweep CSV")->required();
    plot->add_option("--out", plot_out, "SVG output")->required();
    plot->add_option("--title", plot_title, "Plot title");
    plot->add_flag("--allow-missing-line", plot_no_line, "Plot even when the slope cannot be fitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (!kernels_name.empty() && !kernels::select(kernels_name))
            throw InvalidArgument("kernel variant unavailable: " + kernels_name);

        if (*gen) {
            const MixingMeasure truth = read_measure(gen_truth);
            const Dataset data = sample_dataset(truth, gen_K, gen_n, box_from(gen_lo, gen_hi, truth.dim()), seed);
            write_text_file(gen_out, to_tsv(data));
            std::cout << "wrote " << data.size() << " rows to " << gen_out << "\n";
            return 0;
        }
        if (*fitc) {
            const ConfigDocument doc = read_config(fit_cfg);
            FitConfig cfg = fit_config_from(doc);
            cfg.seed = seed;
            if (cfg.init && cfg.init->cell_plan.empty())
                cfg.init->cell_plan = random_cell_plan(cfg.k, cfg.init->truth.order(), seed);
            const std::size_t d = cfg.start ? cfg.start->dim() : cfg.init->truth.dim();
            const Box bounds = box_from(fit_lo, fit_hi, d);
            const Dataset data = read_tsv(fit_data, &bounds);
            const FitResult fr = fit(data, cfg);
            write_measure(fr.measure, fit_out);
            nlohmann::json j;
            j["iterations"] = fr.iterations;
            j["converged"] = fr.converged;
            j["final_loglik"] = fr.loglik_trace.back();
            j["loglik_trace"] = fr.loglik_trace;
            j["wallclock_ms"] = fr.wallclock_ms;
            j["measure"] = fit_out;
            const std::string text = j.dump(2) + "\n";
            if (fit_summary.empty()) std::cout << text;
            else write_text_file(fit_summary, text);
            return 0;
        }
        if (*loss) {
            const MixingMeasure truth = read_measure(loss_true);
            MixingMeasure fitted = read_measure(loss_fit);
            if (loss_align) fitted = align_gauge(fitted, truth);
            LossOptions opts;
            opts.restrict = restriction_from(loss_restrict);
            LossReport rep;
            if (loss_metric == "d1") {
                rep = loss_d1(fitted, truth, loss_K, opts);
            } else if (loss_metric == "d2") {
                const RbarPolicy pol = loss_rbar == "exact" ? RbarPolicy::ExactTable : RbarPolicy::Conjecture;
                rep = loss_d2(fitted, truth, loss_K, [pol](int m) { return rbar(m, pol).value; }, opts);
            } else {
                rep = loss_d3(fitted, truth, loss_K, opts);
            }
            if (loss_out.empty()) std::cout << rep.to_json() << "\n";
            else write_text_file(loss_out, rep.to_json() + "\n");
            return 0;
        }
        if (*hel) {
            const MixingMeasure a = read_measure(hel_a), b = read_measure(hel_b);
            const auto est = expected_hellinger(a, hel_Ka, b, hel_Kb, box_from(hel_lo, hel_hi, a.dim()), hel_mc, seed,
                                                hel_grid, hel_threads);
            std::cout << "hellinger\t" << format_double(est.mean) << "\nstd_error\t" << format_double(est.std_error)
                      << "\n";
            return 0;
        }
        if (*part) {
            const MixingMeasure truth = read_measure(part_truth);
            const Box box = box_from(part_lo, part_hi, truth.dim());
            std::cout << "eta\tmatch_rate\n";
            for (int e = 1; e <= 6; ++e) {
                const double eta = std::pow(10.0, -e);
                const MixingMeasure pert = perturb_gating_slopes(truth, eta, seed + static_cast<std::uint64_t>(e));
                const double rate = partition_match_rate(truth, pert, identity_assignment(truth.order()), part_K, part_K,
                                                         box, part_mc, seed);
                std::cout << "1e-" << e << "\t" << format_double(rate) << "\n";
            }
            return 0;
        }
        if (*poly) {
            const PolySystemInstance inst{poly_m, poly_d, poly_r};
            inst.validate();
            const IndexConvention conv = poly_conv == "flat" ? IndexConvention::Flat : IndexConvention::WeightedScale;
            if (poly_search) {
                if (poly_seed->count() == 0) throw InvalidArgument("polysys --search requires --seed");
                SearchOptions so;
                so.convention = conv;
                const auto found = search_nontrivial(inst, poly_restarts, seed, so);
                if (!found) {
                    std::cout << "no verified nontrivial solution in " << poly_restarts
                              << " restarts (this is not a proof that none exists)\n";
                    return 0;
                }
                std::cout << "found\tmax_abs_residual=" << format_double(max_abs_residual(inst, *found, conv)) << "\n";
                for (int i = 0; i < poly_m; ++i) {
                    std::cout << "i=" << i << "\tz1=";
                    for (double v : found->z1[i]) std::cout << format_double(v) << " ";
                    std::cout << "\tz2=";
                    for (double v : found->z2[i]) std::cout << format_double(v) << " ";
                    std::cout << "\tz3=" << format_double(found->z3[i]) << "\tz4=" << format_double(found->z4[i])
                              << "\tz5=" << format_double(found->z5[i]) << "\n";
                }
                return 0;
            }
            if (poly_m != 2) throw InvalidArgument("residual table uses the two-component witness; pass --m 2");
            const PolyCandidate z = two_component_witness(poly_d, poly_c);
            std::cout << "eta1\teta2\tresidual\n";
            for (const auto& eq : enumerate_equations(inst)) {
                std::string e1;
                for (std::size_t p = 0; p < eq.eta1.size(); ++p) e1 += (p ? "," : "") + std::to_string(eq.eta1[p]);
                std::cout << e1 << "\t" << eq.eta2 << "\t" << tsv_number(residual(inst, z, eq, conv)) << "\n";
            }
            return 0;
        }
        if (*sweep) {
            ConfigDocument doc = read_config(sweep_cfg);
            if (sweep_full) doc.values["full"] = "on";
            SweepConfig cfg = sweep_config_from(doc);
            cfg.base_seed = seed;
            if (sweep_jobs > 0) cfg.jobs = sweep_jobs;
            const SweepResult res = run_sweep(cfg);
            emit_csv(res, sweep_out);
            std::cout << "rows\t" << res.rows.size() << "\nfailed\t" << res.failed_rows() << "\n";
            if (std::isfinite(res.slope.slope))
                std::cout << "slope\t" << format_double(res.slope.slope) << "\nslope_stderr\t"
                          << format_double(res.slope.stderr_slope) << "\n";
            for (const auto& f : res.failures) std::cerr << "failed: " << f << "\n";
            if (!sweep_plot.empty()) {
                SvgStyle style;
                style.title = cfg.loss.name() + " vs n";
                style.y_label = cfg.loss.name();
                style.allow_missing_line = true;
                emit_svg_loglog(res, sweep_plot, style);
            }
            return res.failed_rows() > 0 ? 2 : 0;
        }
        if (*plot) {
            const SweepResult res = read_csv(plot_csv);
            SvgStyle style;
            style.title = plot_title;
            style.allow_missing_line = plot_no_line;
            emit_svg_loglog(res, plot_out, style);
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DegenerateData& e) {
        std::cerr << "error: degenerate data at sample " << e.sample_index() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
