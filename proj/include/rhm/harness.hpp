#pragma once

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rhm/bp.hpp"
#include "rhm/brute.hpp"
#include "rhm/format.hpp"
#include "rhm/gaussian.hpp"
#include "rhm/meanfield.hpp"
#include "rhm/noise.hpp"

namespace rhm {

inline constexpr const char* kArtifactVersion = "1.0.0";

// Experiment sweeps. Results are bit-stable: every task draws its random
// stream from (master seed, cell key, trial) via derive_stream, cell keys are
// the bit patterns of grid values (never positional indices), and rows are
// assembled in a fixed order after all tasks finish. Output files are
// therefore byte-identical for a given config regardless of worker count, and
// adding grid points does not perturb existing cells.

// Channel tags keep independent purposes on independent streams.
inline constexpr std::uint64_t kModelTag = 0x6d6f64656c303161ULL;   // grammar + sample
inline constexpr std::uint64_t kNoiseTag = 0x6e6f697365303162ULL;   // diffusion noise
inline constexpr std::uint64_t kGaussTag = 0x6761757373303163ULL;   // mixture trials
inline constexpr std::uint64_t kOracleTag = 0x6f7261636c653031ULL;  // oracle instances

enum class ExperimentKind {
    DenoiseEps,
    DenoiseTime,
    MeanfieldProfile,
    PhaseDiagram,
    IterationMap,
    EpsMap,
    GaussianFlip,
    OracleCheck,
};

inline const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::DenoiseEps: return "denoise-eps";
        case ExperimentKind::DenoiseTime: return "denoise-time";
        case ExperimentKind::MeanfieldProfile: return "meanfield-profile";
        case ExperimentKind::PhaseDiagram: return "phase-diagram";
        case ExperimentKind::IterationMap: return "iteration-map";
        case ExperimentKind::EpsMap: return "eps-map";
        case ExperimentKind::GaussianFlip: return "gaussian-flip";
        case ExperimentKind::OracleCheck: return "oracle-check";
    }
    return "unknown";
}

enum class OutputFormat { Csv, Json };

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::DenoiseEps;

    int v = 32, s = 2, m = 8, L = 10;
    std::vector<int> m_list;  // phase-diagram only

    std::vector<double> eps_grid;    // corruption levels
    std::vector<double> t_grid;      // diffusion times
    std::vector<double> tfrac_grid;  // gaussian inversion times as fractions of T

    int trials = 1;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out;  // empty = stdout
    OutputFormat format = OutputFormat::Csv;

    int map_points = 512;  // iteration-map resolution

    // gaussian-flip
    std::size_t gauss_d = 1024;
    int gauss_T = 1000;
    double gauss_sigma = 1.0;
};

namespace detail {

inline void require_grid(const std::vector<double>& g, const std::string& name) {
    if (g.empty()) throw UsageError(name + " grid is empty");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (g[i] <= g[i - 1]) throw UsageError(name + " grid is not strictly increasing");
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw UsageError("trials must be >= 1");
    if (cfg.workers < 1) throw UsageError("workers must be >= 1");
    switch (cfg.kind) {
        case ExperimentKind::DenoiseEps:
        case ExperimentKind::MeanfieldProfile:
            detail::require_grid(cfg.eps_grid, "eps");
            break;
        case ExperimentKind::PhaseDiagram:
            detail::require_grid(cfg.eps_grid, "eps");
            if (cfg.m_list.empty()) throw UsageError("phase-diagram needs at least one m");
            break;
        case ExperimentKind::DenoiseTime:
        case ExperimentKind::EpsMap:
            detail::require_grid(cfg.t_grid, "t");
            break;
        case ExperimentKind::GaussianFlip:
            detail::require_grid(cfg.tfrac_grid, "t-fraction");
            for (double f : cfg.tfrac_grid)
                if (f < 0.0 || f > 1.0) throw UsageError("t fractions must lie in [0,1]");
            break;
        case ExperimentKind::IterationMap:
            if (cfg.map_points < 2) throw UsageError("iteration map needs >= 2 points");
            break;
        case ExperimentKind::OracleCheck:
            break;
    }
}

struct ResultEnvelope {
    nlohmann::json config_echo;  // computational parameters only (no workers/out)
    std::string version = kArtifactVersion;
    std::vector<std::string> header;
    std::vector<nlohmann::json> rows;  // arrays matching `header`
    std::uint64_t argmax_ties = 0;
    std::uint64_t degenerate_cells = 0;
    std::vector<std::string> failed_cells;
    double wall_seconds = 0.0;  // reported on stderr, never serialized
};

namespace detail {

template <typename Fn>
inline void run_parallel(std::size_t n_tasks, int workers, Fn&& fn) {
    if (workers <= 1 || n_tasks <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_tasks) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int extra = std::min<int>(workers - 1, static_cast<int>(n_tasks) - 1);
    pool.reserve(extra);
    for (int w = 0; w < extra; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

inline std::uint64_t bits_of(double x) { return std::bit_cast<std::uint64_t>(x); }

struct TrialModel {
    RuleSet rules;
    SampleTree sample;
};

inline TrialModel make_trial_model(const RhmParams& prm, std::uint64_t master, int m_key,
                                   std::uint64_t trial) {
    const std::uint64_t seed =
        derive_stream(master, kModelTag ^ splitmix64(static_cast<std::uint64_t>(m_key)), trial);
    Rng rng(seed);
    RuleSet rules = sample_ruleset(prm, rng.next());
    const int cls = static_cast<int>(rng.below(static_cast<std::uint64_t>(prm.v)));
    SampleTree sample = generate_sample(rules, cls, rng);
    return {std::move(rules), std::move(sample)};
}

struct LayerTask {
    std::vector<LayerStats> stats;
    double wrong_sum = 0.0;  // eps-map pooling
    std::uint64_t wrong_count = 0;
    std::string error;
};

inline nlohmann::json config_echo(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["kind"] = kind_name(cfg.kind);
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    switch (cfg.kind) {
        case ExperimentKind::GaussianFlip:
            j["d"] = cfg.gauss_d;
            j["T"] = cfg.gauss_T;
            j["sigma"] = cfg.gauss_sigma;
            j["tfrac_grid"] = cfg.tfrac_grid;
            break;
        case ExperimentKind::IterationMap:
            j["v"] = cfg.v;
            j["s"] = cfg.s;
            j["m"] = cfg.m;
            j["map_points"] = cfg.map_points;
            break;
        default:
            j["v"] = cfg.v;
            j["s"] = cfg.s;
            j["L"] = cfg.L;
            if (cfg.kind == ExperimentKind::PhaseDiagram)
                j["m_list"] = cfg.m_list;
            else
                j["m"] = cfg.m;
            if (cfg.kind == ExperimentKind::DenoiseTime || cfg.kind == ExperimentKind::EpsMap)
                j["t_grid"] = cfg.t_grid;
            else if (cfg.kind != ExperimentKind::OracleCheck)
                j["eps_grid"] = cfg.eps_grid;
            break;
    }
    return j;
}

// denoise-eps / denoise-time: one BP solve per (grid value, trial), averaged
// into one row per (grid value, layer).
inline void run_denoise(const ExperimentConfig& cfg, ResultEnvelope& env, bool time_mode) {
    const RhmParams prm = make_params(cfg.v, cfg.s, cfg.m, cfg.L);
    const std::vector<double>& grid = time_mode ? cfg.t_grid : cfg.eps_grid;
    const DiffusionSchedule sched;
    const std::size_t n_cells = grid.size();
    const std::size_t n_tasks = n_cells * cfg.trials;
    std::vector<LayerTask> results(n_tasks);

    run_parallel(n_tasks, cfg.workers, [&](std::size_t task) {
        const std::size_t cell = task / cfg.trials;
        const std::uint64_t trial = task % cfg.trials;
        LayerTask& out = results[task];
        try {
            const TrialModel model = make_trial_model(prm, cfg.seed, cfg.m, trial);
            BeliefField beliefs;
            if (time_mode) {
                Rng noise(derive_stream(cfg.seed, kNoiseTag ^ bits_of(grid[cell]), trial));
                const LeafEncoding enc = encode_onehot(model.sample, prm.v);
                beliefs = bayes_leaf_beliefs(diffuse_leaves(enc, grid[cell], sched, noise), sched);
            } else {
                beliefs = epsilon_beliefs(model.sample, prm.v, grid[cell]);
            }
            const FactorTree tree{model.rules};
            const MessageSet ms = run_bp(tree, beliefs);
            out.stats = reconstruction_profile(node_marginals(tree, ms), model.sample);
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    env.header = {"eps_or_t", "layer",  "mean_true_marginal", "mean_max_marginal",
                  "frac_argmax_correct", "n_real", "seed"};
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        std::vector<LayerStats> acc(prm.L + 1);
        std::uint64_t n_ok = 0;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            const LayerTask& r = results[cell * cfg.trials + trial];
            if (!r.error.empty()) {
                env.failed_cells.push_back(std::string(kind_name(cfg.kind)) + " cell=" +
                                           format_real(grid[cell]) + " trial=" +
                                           std::to_string(trial) + ": " + r.error);
                ++env.degenerate_cells;
                continue;
            }
            ++n_ok;
            for (int ell = 0; ell <= prm.L; ++ell) {
                acc[ell].mean_true_marginal += r.stats[ell].mean_true_marginal;
                acc[ell].mean_max_marginal += r.stats[ell].mean_max_marginal;
                acc[ell].frac_argmax_correct += r.stats[ell].frac_argmax_correct;
                env.argmax_ties += r.stats[ell].argmax_ties;
            }
        }
        if (n_ok == 0) continue;
        for (int ell = 0; ell <= prm.L; ++ell) {
            env.rows.push_back(nlohmann::json::array(
                {grid[cell], ell, acc[ell].mean_true_marginal / n_ok,
                 acc[ell].mean_max_marginal / n_ok, acc[ell].frac_argmax_correct / n_ok, n_ok,
                 cfg.seed}));
        }
    }
}

inline void run_meanfield_profile(const ExperimentConfig& cfg, ResultEnvelope& env) {
    const RhmParams prm = make_params(cfg.v, cfg.s, cfg.m, cfg.L);
    env.header = {"eps", "layer", "p_up", "p_down", "p"};
    for (double eps : cfg.eps_grid) {
        const meanfield::MeanFieldState st = meanfield::layer_profiles(eps, prm);
        for (int ell = 0; ell <= prm.L; ++ell)
            env.rows.push_back(
                nlohmann::json::array({eps, ell, st.p_up[ell], st.p_down[ell], st.p[ell]}));
    }
}

inline void run_phase_diagram(const ExperimentConfig& cfg, ResultEnvelope& env) {
    struct Cell {
        double bp_class_sum = 0.0;
        std::uint64_t n_ok = 0;
        std::string error;
    };
    const std::size_t n_m = cfg.m_list.size();
    const std::size_t n_eps = cfg.eps_grid.size();
    const std::size_t n_tasks = n_m * n_eps * cfg.trials;
    std::vector<Cell> results(n_tasks);

    run_parallel(n_tasks, cfg.workers, [&](std::size_t task) {
        const std::size_t mi = task / (n_eps * cfg.trials);
        const std::size_t cell = (task / cfg.trials) % n_eps;
        const std::uint64_t trial = task % cfg.trials;
        Cell& out = results[task];
        try {
            const RhmParams prm = make_params(cfg.v, cfg.s, cfg.m_list[mi], cfg.L);
            const TrialModel model = make_trial_model(prm, cfg.seed, cfg.m_list[mi], trial);
            const BeliefField beliefs =
                epsilon_beliefs(model.sample, prm.v, cfg.eps_grid[cell]);
            const FactorTree tree{model.rules};
            const MessageSet ms = run_bp(tree, beliefs);
            const MarginalProfile prof = node_marginals(tree, ms);
            out.bp_class_sum = prof.node_marginals[prm.L](0, model.sample.class_symbol());
            out.n_ok = 1;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    env.header = {"sf", "m", "eps", "theory_class_p", "bp_class_p",
                  "inference_theory", "inference_bp", "trials", "seed"};
    for (std::size_t mi = 0; mi < n_m; ++mi) {
        const RhmParams prm = make_params(cfg.v, cfg.s, cfg.m_list[mi], cfg.L);
        const double sf = prm.s * prm.f_approx;
        for (std::size_t cell = 0; cell < n_eps; ++cell) {
            const double eps = cfg.eps_grid[cell];
            double bp_sum = 0.0;
            std::uint64_t n_ok = 0;
            for (int trial = 0; trial < cfg.trials; ++trial) {
                const Cell& r = results[(mi * n_eps + cell) * cfg.trials + trial];
                if (!r.error.empty()) {
                    env.failed_cells.push_back("phase-diagram m=" + std::to_string(prm.m) +
                                               " eps=" + format_real(eps) + " trial=" +
                                               std::to_string(trial) + ": " + r.error);
                    ++env.degenerate_cells;
                    continue;
                }
                bp_sum += r.bp_class_sum;
                ++n_ok;
            }
            if (n_ok == 0) continue;
            const double bp_class_p = bp_sum / n_ok;
            const double init = 1.0 - eps + eps / prm.v;
            const double theory_p = meanfield::class_belief(eps, prm);
            const bool inf_th = meanfield::theory_inference(eps, prm);
            // At eps = 1 the class marginal equals the initialization belief
            // analytically; the 1e-12 guard keeps summation noise from
            // flipping the verdict there.
            const bool inf_bp = eps == 0.0 ? true : bp_class_p > init + 1e-12;
            env.rows.push_back(nlohmann::json::array({sf, prm.m, eps, theory_p, bp_class_p,
                                                      inf_th ? 1 : 0, inf_bp ? 1 : 0, n_ok,
                                                      cfg.seed}));
        }
    }
}

inline void run_iteration_map(const ExperimentConfig& cfg, ResultEnvelope& env) {
    const RhmParams prm = make_params(cfg.v, cfg.s, cfg.m, 1);
    env.header = {"p", "F(p)"};
    const double lo = 1.0 / prm.v;
    for (int i = 0; i < cfg.map_points; ++i) {
        const double p = lo + (1.0 - lo) * i / (cfg.map_points - 1.0);
        env.rows.push_back(nlohmann::json::array({p, meanfield::upward_step(p, prm)}));
    }
}

inline void run_eps_map(const ExperimentConfig& cfg, ResultEnvelope& env) {
    const RhmParams prm = make_params(cfg.v, cfg.s, cfg.m, cfg.L);
    const DiffusionSchedule sched;
    const std::size_t n_cells = cfg.t_grid.size();
    const std::size_t n_tasks = n_cells * cfg.trials;
    std::vector<LayerTask> results(n_tasks);

    run_parallel(n_tasks, cfg.workers, [&](std::size_t task) {
        const std::size_t cell = task / cfg.trials;
        const std::uint64_t trial = task % cfg.trials;
        LayerTask& out = results[task];
        try {
            const TrialModel model = make_trial_model(prm, cfg.seed, cfg.m, trial);
            Rng noise(derive_stream(cfg.seed, kNoiseTag ^ bits_of(cfg.t_grid[cell]), trial));
            const LeafEncoding enc = encode_onehot(model.sample, prm.v);
            const BeliefField beliefs =
                bayes_leaf_beliefs(diffuse_leaves(enc, cfg.t_grid[cell], sched, noise), sched);
            std::tie(out.wrong_sum, out.wrong_count) = wrong_mass(beliefs, model.sample);
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    env.header = {"t", "eff_eps", "n_real", "seed"};
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        double sum = 0.0;
        std::uint64_t count = 0, n_ok = 0;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            const LayerTask& r = results[cell * cfg.trials + trial];
            if (!r.error.empty()) {
                env.failed_cells.push_back("eps-map cell=" + format_real(cfg.t_grid[cell]) +
                                           " trial=" + std::to_string(trial) + ": " + r.error);
                ++env.degenerate_cells;
                continue;
            }
            sum += r.wrong_sum;
            count += r.wrong_count;
            ++n_ok;
        }
        if (n_ok == 0) continue;
        const double eff =
            std::min(1.0, std::max(0.0, prm.v * sum / static_cast<double>(count)));
        env.rows.push_back(nlohmann::json::array({cfg.t_grid[cell], eff, n_ok, cfg.seed}));
    }
}

inline void run_gaussian_flip(const ExperimentConfig& cfg, ResultEnvelope& env) {
    const gaussian::MixtureParams mix =
        gaussian::MixtureParams::ones(cfg.gauss_d, cfg.gauss_sigma);
    const gaussian::DiscreteSchedule sched = gaussian::DiscreteSchedule::linear(cfg.gauss_T);

    struct Cell {
        int flipped = 0;
        std::string error;
    };
    const std::size_t n_cells = cfg.tfrac_grid.size();
    const std::size_t n_tasks = n_cells * cfg.trials;
    std::vector<Cell> results(n_tasks);

    run_parallel(n_tasks, cfg.workers, [&](std::size_t task) {
        const std::size_t cell = task / cfg.trials;
        const std::uint64_t trial = task % cfg.trials;
        Cell& out = results[task];
        try {
            const int t_inv = static_cast<int>(std::llround(cfg.tfrac_grid[cell] * sched.T));
            Rng rng(derive_stream(cfg.seed, kGaussTag ^ bits_of(cfg.tfrac_grid[cell]), trial));
            const gaussian::FlipStats st = gaussian::mode_flip_rate(t_inv, mix, sched, 1, rng);
            out.flipped = static_cast<int>(st.flips);
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    // Wilson 95% interval for the flip probability.
    const double z = 1.959963984540054;
    env.header = {"t_over_T", "flip_rate", "ci_low", "ci_high", "n_trials", "seed"};
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        std::uint64_t flips = 0, n_ok = 0;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            const Cell& r = results[cell * cfg.trials + trial];
            if (!r.error.empty()) {
                env.failed_cells.push_back("gaussian-flip cell=" +
                                           format_real(cfg.tfrac_grid[cell]) + " trial=" +
                                           std::to_string(trial) + ": " + r.error);
                ++env.degenerate_cells;
                continue;
            }
            flips += r.flipped;
            ++n_ok;
        }
        if (n_ok == 0) continue;
        const double n = static_cast<double>(n_ok);
        const double ph = flips / n;
        const double denom = 1.0 + z * z / n;
        const double center = ph + z * z / (2.0 * n);
        const double half = z * std::sqrt(ph * (1.0 - ph) / n + z * z / (4.0 * n * n));
        env.rows.push_back(nlohmann::json::array({cfg.tfrac_grid[cell], ph,
                                                  (center - half) / denom,
                                                  (center + half) / denom, n_ok, cfg.seed}));
    }
}

inline void run_oracle_check(const ExperimentConfig& cfg, ResultEnvelope& env) {
    const RhmParams prm = make_params(cfg.v, cfg.s, cfg.m, cfg.L);
    struct Cell {
        double eps = 0.0;
        double max_dev = 0.0;
        std::string error;
    };
    std::vector<Cell> results(cfg.trials);

    run_parallel(cfg.trials, cfg.workers, [&](std::size_t task) {
        Cell& out = results[task];
        try {
            Rng rng(derive_stream(cfg.seed, kOracleTag, task));
            const RuleSet rules = sample_ruleset(prm, rng.next());
            const int cls = static_cast<int>(rng.below(static_cast<std::uint64_t>(prm.v)));
            SampleTree sample = generate_sample(rules, cls, rng);
            out.eps = rng.uniform();
            const BeliefField beliefs = epsilon_beliefs(sample, prm.v, out.eps);
            const FactorTree tree{rules};
            const MarginalProfile bp = node_marginals(tree, run_bp(tree, beliefs));
            const MarginalProfile exact = brute_force_posterior(rules, beliefs);
            for (int ell = 0; ell <= prm.L; ++ell)
                for (std::size_t k = 0; k < bp.node_marginals[ell].a.size(); ++k)
                    out.max_dev = std::max(out.max_dev,
                                           std::abs(bp.node_marginals[ell].a[k] -
                                                    exact.node_marginals[ell].a[k]));
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    env.header = {"trial", "eps", "max_abs_dev", "seed"};
    for (int trial = 0; trial < cfg.trials; ++trial) {
        const Cell& r = results[trial];
        if (!r.error.empty()) {
            env.failed_cells.push_back("oracle-check trial=" + std::to_string(trial) + ": " +
                                       r.error);
            ++env.degenerate_cells;
            continue;
        }
        env.rows.push_back(nlohmann::json::array({trial, r.eps, r.max_dev, cfg.seed}));
    }
}

}  // namespace detail

inline ResultEnvelope run(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const auto start = std::chrono::steady_clock::now();
    ResultEnvelope env;
    env.config_echo = detail::config_echo(cfg);
    switch (cfg.kind) {
        case ExperimentKind::DenoiseEps: detail::run_denoise(cfg, env, false); break;
        case ExperimentKind::DenoiseTime: detail::run_denoise(cfg, env, true); break;
        case ExperimentKind::MeanfieldProfile: detail::run_meanfield_profile(cfg, env); break;
        case ExperimentKind::PhaseDiagram: detail::run_phase_diagram(cfg, env); break;
        case ExperimentKind::IterationMap: detail::run_iteration_map(cfg, env); break;
        case ExperimentKind::EpsMap: detail::run_eps_map(cfg, env); break;
        case ExperimentKind::GaussianFlip: detail::run_gaussian_flip(cfg, env); break;
        case ExperimentKind::OracleCheck: detail::run_oracle_check(cfg, env); break;
    }
    env.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return env;
}

inline std::string cell_to_string(const nlohmann::json& c) {
    if (c.is_number_float()) return format_real(c.get<double>());
    if (c.is_number_unsigned()) return format_uint(c.get<std::uint64_t>());
    if (c.is_number_integer()) return format_int(c.get<std::int64_t>());
    if (c.is_boolean()) return c.get<bool>() ? "1" : "0";
    return c.get<std::string>();
}

inline std::string to_csv(const ResultEnvelope& env) {
    std::string out;
    for (std::size_t i = 0; i < env.header.size(); ++i) {
        if (i) out += ",";
        out += env.header[i];
    }
    out += "\n";
    for (const auto& row : env.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += cell_to_string(row[i]);
        }
        out += "\n";
    }
    return out;
}

inline std::string to_json(const ResultEnvelope& env) {
    nlohmann::json j;
    j["artifact_version"] = env.version;
    j["config"] = env.config_echo;
    j["header"] = env.header;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : env.rows) rows.push_back(r);
    j["rows"] = rows;
    j["counters"] = {{"argmax_ties", env.argmax_ties},
                     {"degenerate_cells", env.degenerate_cells}};
    j["failed_cells"] = env.failed_cells;
    return j.dump(2) + "\n";
}

}  // namespace rhm
