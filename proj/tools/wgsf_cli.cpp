// Command-line driver: simulate, sweep, analyze, oracle-check, scale.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "wgsf/wgsf.hpp"

namespace fs = std::filesystem;
using namespace wgsf;
using io::json;

namespace {

struct Common {
    std::string config;
    std::string out = ".";
    unsigned jobs = 0;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::string kappa_source = "mean";
};

KappaSource kappa_source(const std::string& s) {
    if (s == "mean") return KappaSource::mean;
    if (s == "per-shot-median") return KappaSource::per_shot_median;
    throw ValidationError("--kappa-source must be mean or per-shot-median");
}

/// Accepts a plain configuration or a run summary that embeds one under "config".
SimulationConfig load_any_config(const std::string& path) {
    const auto text = io::read_file(path);
    const auto j = io::detail::parse(text);
    if (j.is_object() && j.contains("config") && j.at("config").is_object())
        return io::detail::config_from(j.at("config"), text, "config");
    return io::parse_config(text);
}

void apply_overrides(SimulationConfig& c, const Common& o) {
    if (o.seed) c.seed = *o.seed;
    if (o.mode) {
        const auto m = parse_model_mode(*o.mode);
        if (!m) throw ValidationError("--mode must be dynamic, static or frozen");
        c.model_mode = *m;
    }
    validate(c);
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

EnsembleOptions ensemble_options(const Common& o) {
    EnsembleOptions e;
    e.jobs = o.jobs;
    return e;
}

std::string couplings_csv(const CouplingSet& c) {
    std::string out = "l,m,j_re,j_im,gamma_re,gamma_im,g_re,g_im\n";
    for (Eigen::Index l = 0; l < c.size(); ++l)
        for (Eigen::Index m = 0; m < c.size(); ++m)
            out += std::to_string(l) + ',' + std::to_string(m) + ',' + io::fmt(c.j_matrix(l, m).real()) + ',' +
                   io::fmt(c.j_matrix(l, m).imag()) + ',' + io::fmt(c.gamma_matrix(l, m).real()) + ',' +
                   io::fmt(c.gamma_matrix(l, m).imag()) + ',' + io::fmt(c.g(l, m).real()) + ',' +
                   io::fmt(c.g(l, m).imag()) + '\n';
    return out;
}

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

int cmd_simulate(const Common& o, bool dump_couplings, bool write_g2) {
    const auto src = kappa_source(o.kappa_source);
    auto cfg = load_any_config(o.config);
    apply_overrides(cfg, o);
    const auto dir = prepare_out(o.out);
    if (dump_couplings) {
        const auto z = sample_initial_state(cfg, 0).z;
        io::write_file((dir / "couplings.csv").string(), couplings_csv(build_couplings(geometry_for(cfg), z)));
    }
    const auto series = run_ensemble(cfg, ensemble_options(o));
    io::write_file((dir / "series.csv").string(), io::series_csv(series));

    std::string et = "t,g2_pp,g2_mm,g2_pm\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto safe = [&](Channel ch) {
        try {
            return equal_time_g2(series, ch);
        } catch (const EmptyResultError&) {
            return std::vector<double>(series.size(), nan);
        }
    };
    const auto gpp = safe(Channel::plus_plus), gmm = safe(Channel::minus_minus), gpm = safe(Channel::plus_minus);
    for (std::size_t i = 0; i < series.size(); ++i)
        et += io::fmt(series.time_grid[i]) + ',' + io::fmt(gpp[i]) + ',' + io::fmt(gmm[i]) + ',' + io::fmt(gpm[i]) + '\n';
    io::write_file((dir / "equal_time_g2.csv").string(), et);
    if (write_g2 && series.n_traj >= 2) {
        io::write_file((dir / "g2_pp.csv").string(), io::g2_csv(accumulate_g2(series, Direction::plus)));
        io::write_file((dir / "g2_mm.csv").string(), io::g2_csv(accumulate_g2(series, Direction::minus)));
        io::write_file((dir / "g2_pm.csv").string(), io::g2_csv(cross_correlation(series)));
    }

    json summary;
    summary["config"] = io::to_json(cfg);
    summary["seed"] = cfg.seed;
    summary["kappa_source"] = o.kappa_source;
    summary["n_traj"] = series.n_traj;
    summary["n_diverged"] = series.n_diverged;
    summary["negative_variance_events"] = series.negative_variance;
    summary["statistics"] = io::to_json(burst_statistics(series, src));
    const auto sc = physical_scales(cfg.v_bar, cfg.lambda0, cfg.gamma_single > 0 ? cfg.gamma_single : 1.0,
                                    effective_cooperation(cfg));
    summary["scales"] = {{"sigma_v", sc.sigma_v},
                         {"r_tau", sc.r_tau},
                         {"tau_th", nullable(sc.tau_th)},
                         {"tau_col", sc.tau_col},
                         {"n_mc", effective_cooperation(cfg)}};
    io::write_file((dir / "summary.json").string(), io::dump(summary));
    std::cout << io::dump(summary["statistics"]);
    return 0;
}

int cmd_sweep(const Common& o) {
    const auto src = kappa_source(o.kappa_source);
    auto spec = io::parse_sweep(io::read_file(o.config));
    if (o.seed) spec.replicate_seeds = {*o.seed};
    if (o.mode) {
        const auto m = parse_model_mode(*o.mode);
        if (!m) throw ValidationError("--mode must be dynamic, static or frozen");
        spec.base.model_mode = *m;
    }
    validate(spec);
    const auto dir = prepare_out(o.out);
    const auto rows = sweep_directionality(spec, ensemble_options(o), src);
    io::write_file((dir / "sweep.csv").string(), io::sweep_csv(rows));
    json summary;
    summary["base"] = io::to_json(spec.base);
    summary["axis_n"] = spec.axis_n;
    summary["axis_sigma_v"] = spec.axis_sigma_v;
    summary["replicate_seeds"] = spec.replicate_seeds;
    summary["static_tau"] = spec.static_tau == StaticTau::constant ? "constant" : "superradiant";
    summary["kappa_source"] = o.kappa_source;
    std::size_t failed = 0;
    for (const auto& r : rows) failed += !r.error.empty();
    summary["failed_cells"] = failed;
    io::write_file((dir / "summary.json").string(), io::dump(summary));
    std::cout << io::sweep_csv(rows);
    return 0;
}

std::vector<std::pair<double, double>> pairs(const io::CsvTable& t, const std::string& x, const std::string& y) {
    const auto a = t.column(x), b = t.column(y);
    std::vector<std::pair<double, double>> p;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::isfinite(a[i]) && std::isfinite(b[i])) p.emplace_back(a[i], b[i]);
    return p;
}

int cmd_analyze(const std::string& kind, const std::string& input, const std::string& x, const std::string& y,
                double gamma, const std::string& out) {
    const auto table = io::load_csv(input);
    json result;
    if (kind == "threshold") {
        result = io::to_json(fit_threshold(pairs(table, x, y)));
    } else if (kind == "fwhm") {
        result = io::to_json(fit_fwhm_scaling(pairs(table, x, y), gamma));
    } else if (kind == "series") {
        const auto t = table.column("t");
        auto shape = [&](const std::vector<double>& y) {
            const auto k = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
            json r = {{"peak", y.at(k)}, {"delay", t.at(k)}, {"fwhm", nullptr}};
            try {
                r["fwhm"] = burst_metrics(y, t).fwhm;
            } catch (const FwhmUndefinedError&) {
            }
            return r;
        };
        const auto ip = table.column("i_plus"), im = table.column("i_minus");
        result = {{"plus", shape(ip)}, {"minus", shape(im)}};
        result["kappa"] = directionality(result["plus"]["peak"].get<double>(), result["minus"]["peak"].get<double>());
    } else {
        throw ValidationError("analyze: kind must be threshold, fwhm or series");
    }
    const auto text = io::dump(result);
    if (!out.empty()) {
        const fs::path p(out);
        if (p.has_parent_path()) prepare_out(p.parent_path().string());
        io::write_file(out, text);
    }
    std::cout << text;
    return 0;
}

int cmd_oracle(const Common& o, double tolerance) {
    auto cfg = load_any_config(o.config);
    apply_overrides(cfg, o);
    const auto dir = prepare_out(o.out);
    const auto r = oracle_check(cfg, ensemble_options(o), tolerance);
    const auto& c = r.comparison;
    std::string csv = "t,i_plus,i_minus,sz,oracle_i_plus,oracle_i_minus,oracle_sz\n";
    for (std::size_t i = 0; i < c.time_grid.size(); ++i)
        csv += io::fmt(c.time_grid[i]) + ',' + io::fmt(c.twa.mean_i_plus[i]) + ',' + io::fmt(c.twa.mean_i_minus[i]) + ',' +
               io::fmt(c.twa.sz_mean[i]) + ',' + io::fmt(c.oracle.i_plus[i]) + ',' + io::fmt(c.oracle.i_minus[i]) + ',' +
               io::fmt(c.oracle.sz_total[i]) + '\n';
    io::write_file((dir / "oracle_comparison.csv").string(), csv);
    json j;
    j["config"] = io::to_json(cfg);
    j["seed"] = cfg.seed;
    j["passed"] = r.passed;
    j["tolerance"] = tolerance;
    j["positions"] = c.positions;
    j["max_rel_i_plus"] = c.max_rel_i_plus;
    j["max_rel_i_minus"] = c.max_rel_i_minus;
    j["max_rel_sz"] = c.max_rel_sz;
    j["max_z_i_plus"] = c.max_z_i_plus;
    j["max_z_i_minus"] = c.max_z_i_minus;
    j["rel_i_plus_at_peak"] = c.rel_i_plus_at_peak;
    j["free_decay_deviation"] = r.free_decay_deviation ? json(*r.free_decay_deviation) : json(nullptr);
    io::write_file((dir / "summary.json").string(), io::dump(j));
    std::cout << io::dump(j);
    return r.passed ? 0 : 1;
}

int cmd_scale(double n_exp, double g1d_exp, double n_sim, std::optional<double> gamma_hz, std::optional<double> lambda0,
              std::optional<double> v_bar, std::optional<double> n_mc) {
    json j;
    if (n_sim > 0) j["gamma_1d"] = reduced_coupling(n_exp, g1d_exp, n_sim);
    if (gamma_hz && lambda0 && v_bar && n_mc) {
        ExperimentParameters p{*gamma_hz, *lambda0, *v_bar, *n_mc};
        const auto c = from_experiment(p);
        j["config"] = io::to_json(c);
        j["sigma_v"] = c.v_bar;
        j["r_tau"] = timescale_ratio(c.v_bar, *n_mc);
    }
    if (j.empty()) throw ValidationError("scale: give --n-exp/--gamma-1d-exp/--n-sim or --gamma-hz/--lambda0/--v-bar/--n-mc");
    std::cout << io::dump(j);
    return 0;
}

void add_common(CLI::App* sub, Common& o, bool needs_config = true) {
    auto* c = sub->add_option("--config", o.config, "configuration (JSON)");
    if (needs_config) c->required();
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
    sub->add_option("--seed", o.seed, "override the seed");
    sub->add_option("--mode", o.mode, "override the model: dynamic, static or frozen");
    sub->add_option("--kappa-source", o.kappa_source, "mean or per-shot-median");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Waveguide superfluorescence simulator"};
    app.require_subcommand(1);
    Common o;

    auto* sim = app.add_subcommand("simulate", "run one ensemble");
    add_common(sim, o);
    bool dump_couplings = false, no_g2 = false;
    sim->add_flag("--dump-couplings", dump_couplings, "write the couplings of trajectory 0 as CSV");
    sim->add_flag("--no-g2", no_g2, "skip the two-time correlation grids");

    auto* sweep = app.add_subcommand("sweep", "directionality sweep from a sweep specification");
    add_common(sweep, o);

    std::string kind, input, xcol = "n_mc", ycol = "r_plus", out_file;
    double gamma = 1.0;
    auto* an = app.add_subcommand("analyze", "fits on existing CSV files");
    an->add_option("kind", kind, "threshold, fwhm or series")->required();
    an->add_option("--input", input, "CSV file")->required();
    an->add_option("--x", xcol, "abscissa column");
    an->add_option("--y", ycol, "ordinate column");
    an->add_option("--gamma", gamma, "decay rate for the fwhm fit");
    an->add_option("--out", out_file, "write the JSON result here");

    double tolerance = 0.1;
    auto* orc = app.add_subcommand("oracle-check", "compare the phase-space ensemble with the exact master equation");
    add_common(orc, o);
    orc->add_option("--tolerance", tolerance, "relative intensity tolerance");

    double n_exp = 0, g1d_exp = 0, n_sim = 0;
    std::optional<double> gamma_hz, lambda0, v_bar, n_mc;
    auto* sc = app.add_subcommand("scale", "derived parameters of a reduced model");
    sc->add_option("--n-exp", n_exp);
    sc->add_option("--gamma-1d-exp", g1d_exp);
    sc->add_option("--n-sim", n_sim);
    sc->add_option("--gamma-hz", gamma_hz);
    sc->add_option("--lambda0", lambda0, "wavelength in metres");
    sc->add_option("--v-bar", v_bar, "rms velocity in m/s");
    sc->add_option("--n-mc", n_mc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sim) return cmd_simulate(o, dump_couplings, !no_g2);
        if (*sweep) return cmd_sweep(o);
        if (*an) return cmd_analyze(kind, input, xcol, ycol, gamma, out_file);
        if (*orc) return cmd_oracle(o, tolerance);
        if (*sc) return cmd_scale(n_exp, g1d_exp, n_sim, gamma_hz, lambda0, v_bar, n_mc);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what();
        if (const auto* v = dynamic_cast<const ValidationError*>(&e); v && v->line()) std::cerr << " (line " << v->line() << ')';
        std::cerr << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
