#pragma once

#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rhm/harness.hpp"

namespace rhm {

// Command-line front end. Subcommands map one-to-one onto ExperimentKind;
// usage problems raise UsageError (exit code 2 in the binary).

namespace cli_detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

inline double to_real(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw UsageError("cannot parse " + what + " value '" + s + "'");
    }
}

// "a:b:step", inclusive of b up to rounding. Points are a + k*step rather
// than a running sum, so the endpoint does not drift with the step count.
inline std::vector<double> parse_linear_grid(const std::string& spec, const std::string& name) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw UsageError(name + " grid must look like a:b:step");
    const double a = to_real(parts[0], name);
    const double b = to_real(parts[1], name);
    const double step = to_real(parts[2], name);
    if (step <= 0.0) throw UsageError(name + " grid step must be positive");
    if (b <= a) throw UsageError(name + " grid must be increasing (b > a)");
    const int n = static_cast<int>(std::floor((b - a) / step + 1e-6)) + 1;
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) g[k] = std::min(a + k * step, b);
    return g;
}

// "a:b:n" with n geometrically spaced points.
inline std::vector<double> parse_geometric_grid(const std::string& spec,
                                                const std::string& name) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw UsageError(name + " grid must look like a:b:n");
    const double a = to_real(parts[0], name);
    const double b = to_real(parts[1], name);
    const long n = std::lround(to_real(parts[2], name));
    if (a <= 0.0) throw UsageError(name + " geometric grid needs a > 0");
    if (b <= a) throw UsageError(name + " grid must be increasing (b > a)");
    if (n < 2) throw UsageError(name + " geometric grid needs at least 2 points");
    std::vector<double> g(n);
    const double ratio = b / a;
    for (long i = 0; i < n; ++i)
        g[i] = a * std::pow(ratio, static_cast<double>(i) / static_cast<double>(n - 1));
    g.back() = b;
    return g;
}

inline int default_workers() {
    if (const char* env = std::getenv("RHM_LAB_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w >= 1) return w;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

}  // namespace cli_detail

// Parses argv into a validated config. Returns nullopt when help was printed.
inline std::optional<ExperimentConfig> parse_cli(int argc, const char* const* argv) {
    CLI::App app{"Hierarchy-model denoising laboratory: exact message-passing posteriors, "
                 "mean-field maps, and a Gaussian-mixture control, emitted as plot-ready "
                 "tables"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    cfg.workers = cli_detail::default_workers();

    std::string eps_spec, tfrac_spec;
    std::vector<std::string> tgrid_spec;  // {type, a:b:n}
    std::string format = "csv";

    struct SubSpec {
        ExperimentKind kind;
        const char* name;
        const char* help;
        bool rhm_flags;      // --v/--s/--m/--L
        bool rhm_required;
        int default_trials;
    };
    const std::vector<SubSpec> subs = {
        {ExperimentKind::DenoiseEps, "denoise-eps",
         "Per-layer reconstruction statistics of the exact posterior under uniform "
         "corruption, swept over eps", true, true, 20},
        {ExperimentKind::DenoiseTime, "denoise-time",
         "Per-layer reconstruction statistics under forward diffusion, swept over t", true,
         true, 20},
        {ExperimentKind::MeanfieldProfile, "meanfield-profile",
         "Closed-form layer profiles of the mean-field theory over an eps grid", true, true, 1},
        {ExperimentKind::PhaseDiagram, "phase-diagram",
         "Theory and measured class-inference verdicts over (m, eps) cells", true, true, 20},
        {ExperimentKind::IterationMap, "iteration-map",
         "The upward iteration map F(p) tabulated on [1/v, 1]", true, true, 1},
        {ExperimentKind::EpsMap, "eps-map",
         "Effective corruption eps(t) of the diffusion process over a time grid", true, true,
         1000},
        {ExperimentKind::GaussianFlip, "gaussian-flip",
         "Mode-flip rate of the two-mode Gaussian mixture under forward-backward diffusion",
         false, false, 1000},
        {ExperimentKind::OracleCheck, "oracle-check",
         "Exact-posterior cross-check of message passing against brute-force enumeration",
         true, false, 100},
    };

    ExperimentKind chosen = cfg.kind;
    int default_trials = 1;
    std::vector<CLI::Option*> trials_opts;
    for (const SubSpec& spec : subs) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.help);
        sub->callback([&chosen, &default_trials, spec] {
            chosen = spec.kind;
            default_trials = spec.default_trials;
        });
        if (spec.rhm_flags) {
            auto* ov = sub->add_option("--v", cfg.v, "alphabet/class cardinality");
            auto* os = sub->add_option("--s", cfg.s, "branching factor");
            auto* ol = sub->add_option("--L", cfg.L, "tree depth");
            if (spec.kind == ExperimentKind::PhaseDiagram) {
                sub->add_option("--m", cfg.m_list,
                                "productions per symbol (repeat or comma-separate)")
                    ->required()
                    ->delimiter(',');
            } else {
                auto* om = sub->add_option("--m", cfg.m, "productions per symbol");
                if (spec.rhm_required) om->required();
            }
            if (spec.rhm_required) {
                ov->required();
                os->required();
                if (spec.kind != ExperimentKind::IterationMap) ol->required();
            } else {
                // oracle-check defaults to the smallest nontrivial instance
                cfg.v = 3;
                cfg.s = 2;
                cfg.m = 2;
                cfg.L = 2;
            }
        }
        sub->add_option("--eps-grid", eps_spec, "corruption grid a:b:step (default 0:1:0.05)");
        sub->add_option("--t-grid", tgrid_spec,
                        "time grid: geometric a:b:n (default geometric 0.01:5:40)")
            ->expected(2);
        sub->add_option("--tfrac-grid", tfrac_spec,
                        "inversion-time fractions a:b:step (default 0:1:0.1)");
        trials_opts.push_back(
            sub->add_option("--trials", cfg.trials,
                            "realizations per grid cell (default " +
                                std::to_string(spec.default_trials) + ")"));
        sub->add_option("--seed", cfg.seed, "master seed");
        sub->add_option("--workers", cfg.workers,
                        "worker threads (default from RHM_LAB_WORKERS, else 1)");
        sub->add_option("--out", cfg.out, "output path (default stdout)");
        sub->add_option("--format", format, "output format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--map-points", cfg.map_points, "points of the iteration map");
        if (spec.kind == ExperimentKind::GaussianFlip) {
            sub->add_option("--gauss-d", cfg.gauss_d, "mixture dimension");
            sub->add_option("--gauss-T", cfg.gauss_T, "discrete schedule length");
            sub->add_option("--gauss-sigma", cfg.gauss_sigma, "mode width");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return std::nullopt;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e);
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    cfg.kind = chosen;
    bool trials_given = false;
    for (const CLI::Option* opt : trials_opts) trials_given |= opt->count() > 0;
    if (!trials_given) cfg.trials = default_trials;
    cfg.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
    cfg.eps_grid = cli_detail::parse_linear_grid(eps_spec.empty() ? "0:1:0.05" : eps_spec,
                                                 "eps");
    if (!tgrid_spec.empty()) {
        if (tgrid_spec[0] != "geometric")
            throw UsageError("only geometric time grids are supported: --t-grid geometric "
                             "a:b:n");
        cfg.t_grid = cli_detail::parse_geometric_grid(tgrid_spec[1], "t");
    } else {
        cfg.t_grid = cli_detail::parse_geometric_grid("0.01:5:40", "t");
    }
    cfg.tfrac_grid =
        cli_detail::parse_linear_grid(tfrac_spec.empty() ? "0:1:0.1" : tfrac_spec, "t-fraction");

    validate_config(cfg);
    // Surface parameter problems as usage errors before any work starts.
    if (cfg.kind != ExperimentKind::GaussianFlip) {
        try {
            if (cfg.kind == ExperimentKind::PhaseDiagram) {
                for (int m : cfg.m_list) make_params(cfg.v, cfg.s, m, cfg.L);
            } else {
                make_params(cfg.v, cfg.s, cfg.m, cfg.kind == ExperimentKind::IterationMap
                                                     ? 1
                                                     : cfg.L);
            }
        } catch (const InvalidParams& e) {
            throw UsageError(e.what());
        }
    }
    return cfg;
}

}  // namespace rhm
