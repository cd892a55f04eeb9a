#pragma once

// Command-line front end. run_cli is kept free of process state so tests can
// drive it directly; the executable only forwards argv.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aab/aab.hpp"
#include "svg_plot.hpp"

namespace aab::cli {

namespace fs = std::filesystem;

enum Exit : int { Ok = 0, Failure = 1, BadInput = 2, Infeasible = 3, Violation = 4 };

inline int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::ConfigParse:
    case ErrorCode::UnknownName:
    case ErrorCode::InvalidArgument:
    case ErrorCode::QualityOutOfRange:
    case ErrorCode::NegativeCost:
    case ErrorCode::LengthMismatch:
    case ErrorCode::NonPositiveArgument:
        return BadInput;
    case ErrorCode::InfeasibleInstance:
    case ErrorCode::NonPositiveDelta:
    case ErrorCode::OracleUnavailable:
    case ErrorCode::PoolTooLarge:
        return Infeasible;
    default:
        return Failure;
    }
}

struct Options {
    std::string config_path;
    std::vector<std::string> engines;
    std::string out_dir;
    std::optional<std::size_t> seeds;
    bool plot = false;
    std::size_t scale = 1;
};

inline const std::vector<std::string> kAllEngines = {"ccb-ns", "ccb-s", "ccb-se", "eps-greedy"};

class Runner {
public:
    Runner(Options opt, std::ostream& out) : opt_(std::move(opt)), out_(out) {}

    int run() {
        auto config = load();
        const auto model = model_from_config(config);
        const auto pool = make_pool(config, model);
        const auto engines = engines_or(kAllEngines);
        std::vector<plot::Series> regret_plot, cost_plot;
        for (const auto& name : engines) {
            const auto kind = engine_from_name(name);
            const auto m = experiment(config, kind, pool, model);
            write_file("rounds_" + name + ".csv", [&](std::ostream& os) { write_round_csv(os, m); });
            write_file("regret_" + name + ".csv",
                       [&](std::ostream& os) { write_aggregate_csv(os, name, m.mean_regret, m.stderr_regret); });
            write_file("cost_" + name + ".csv", [&](std::ostream& os) {
                write_aggregate_csv(os, name, m.mean_cumulative_cost, m.stderr_cumulative_cost);
            });
            summary(m, config);
            regret_plot.push_back(series(name, m.mean_regret));
            cost_plot.push_back(series(name, m.mean_cumulative_cost));
        }
        if (opt_.plot) {
            svg("regret.svg", "Mean cumulative regret", "round", "regret", regret_plot);
            svg("cost.svg", "Mean cumulative cost", "round", "cost", cost_plot);
        }
        return Ok;
    }

    int sweep() {
        auto config = load();
        if (!config.qualities.empty())
            throw Error(ErrorCode::InvalidArgument, "sweep needs a generated pool, not an explicit one");
        const auto model = model_from_config(config);
        std::vector<plot::Series> lines;
        for (const auto& name : engines_or({"ccb-ns", "eps-greedy"})) {
            const auto kind = engine_from_name(name);
            plot::Series line{name, {}, {}};
            std::string rows = "n,engine,mean_total_cost,stderr,reference_cost,reference\n";
            for (std::size_t n : {11u, 22u, 44u, 88u}) {
                RunConfig c = config;
                c.n = n * opt_.scale;
                const auto pool = generate_feasible_split_pool(c.n, c.pool_seed, model, c.alpha);
                const auto m = experiment(c, kind, pool, model);
                const double mean = m.mean_cumulative_cost.back();
                const double se = m.stderr_cumulative_cost.back();
                rows += std::to_string(c.n) + ',' + name + ',' + fmt(mean) + ',' + fmt(se) + ',' +
                        fmt(m.reference.cost) + ',' + reference_name(m.reference) + '\n';
                out_ << name << " n=" << c.n << " total cost " << fmt(mean) << " +/- " << fmt(se) << '\n';
                line.x.push_back(static_cast<double>(c.n));
                line.y.push_back(mean);
            }
            write_file("sweep_" + name + ".csv", [&](std::ostream& os) { os << rows; });
            lines.push_back(std::move(line));
        }
        if (opt_.plot) svg("sweep.svg", "Total cost against pool size", "workers", "total cost", lines);
        return Ok;
    }

    int verify() {
        auto config = load();
        const auto model = model_from_config(config);
        const auto pool = make_pool(config, model);
        const auto engines = engines_or({"ccb-s"});
        const std::size_t seeds = opt_.seeds.value_or(50);
        bool any_violation = false;
        for (const auto& name : engines) {
            const auto kind = engine_from_name(name);
            const MechanismSetup setup{model, EngineOptions::from_config(kind, solver_for(kind, config), config)};
            const auto grid = bid_grid(config.cost_max, grid_points(config));
            std::string mono = "seed,worker_id,low_bid,high_bid,low_count,high_count\n";
            std::ostringstream icir;
            icir << "seed,worker_id,bid,allocation_count,payment,utility,violation_flag\n";
            std::size_t monotone_failures = 0, ic_ir_failures = 0;
            double worst_gain = -std::numeric_limits<double>::infinity();
            double worst_ir = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < seeds; ++k) {
                const auto rho = draw_realization(pool, config.horizon, derive_seed(config.seed, "verify", k),
                                                  config.prior_positive);
                if (auto v = verify_expost_monotone(setup, pool, rho, grid)) {
                    if (monotone_failures++ == 0) out_ << name << " seed " << k << " counterexample: " << *v << '\n';
                    mono += std::to_string(k) + ',' + std::to_string(v->worker.value) + ',' + fmt(v->low_bid) + ',' +
                            fmt(v->high_bid) + ',' + std::to_string(v->low_count) + ',' +
                            std::to_string(v->high_count) + '\n';
                    continue;  // payments need a monotone curve
                }
                const auto report = verify_ic_ir(setup, pool, rho, config.cost_max, config.resolution());
                worst_gain = std::max(worst_gain, report.max_ic_gain);
                worst_ir = std::min(worst_ir, report.min_truthful_utility);
                if (!report.ok()) ++ic_ir_failures;
                for (const auto& r : report.rows)
                    icir << k << ',' << r.worker.value << ',' << r.bid << ',' << r.allocation_count << ','
                         << r.payment << ',' << r.utility << ',' << (r.violation ? 1 : 0) << '\n';
            }
            write_file("monotonicity_" + name + ".csv", [&](std::ostream& os) { os << mono; });
            write_file("ic-ir_" + name + ".csv", [&](std::ostream& os) { os << icir.str(); });
            out_ << name << ": " << seeds << " realizations, " << monotone_failures << " non-monotone, "
                 << ic_ir_failures << " IC/IR failures";
            if (std::isfinite(worst_gain))
                out_ << ", max IC gain " << fmt(worst_gain) << " (tolerance "
                     << fmt(config.resolution() * static_cast<double>(config.horizon)) << "), min truthful utility "
                     << fmt(worst_ir);
            out_ << '\n';
            any_violation = any_violation || monotone_failures > 0 || ic_ir_failures > 0;
        }
        return any_violation ? Violation : Ok;
    }

    int bounds() {
        auto config = load();
        const auto model = model_from_config(config);
        const auto pool = make_pool(config, model);
        const std::size_t n = pool.size();
        double delta = 0.0;
        if (n <= kBruteForceCap) {
            delta = compute_delta_separation(model, pool.qualities, config.alpha).delta;
        } else if (!(config.xi > 0.0)) {
            throw Error(ErrorCode::PoolTooLarge, "delta needs n <= 20 unless xi > 0");
        }
        if (!(delta > 0.0) && !(config.xi > 0.0))
            throw Error(ErrorCode::NonPositiveDelta, "delta separation is zero and xi is zero");
        const auto b = exploration_bound(n, config.mu, model, delta, config.xi);
        out_ << "n " << n << '\n';
        out_ << "delta " << (n <= kBruteForceCap ? fmt(delta) : std::string("n/a")) << '\n';
        if (delta > 0.0) out_ << "lower_bound " << fmt(regret_lower_bound(config.horizon, n, model, delta)) << '\n';
        else out_ << "lower_bound n/a\n";
        out_ << "ccb_ns_bound " << fmt(b.ccb_ns) << '\n';
        out_ << "ccb_s_bound " << fmt(b.ccb_s) << '\n';
        out_ << "range_bound " << fmt(b.range) << '\n';
        return Ok;
    }

    // Full desk-scale reproduction: every engine on the configured pool, then
    // the pool-size sweep.
    int repro() {
        const int r = run();
        if (r != Ok) return r;
        return sweep();
    }

private:
    RunConfig load() {
        auto config = load_config(opt_.config_path);
        if (opt_.seeds) config.replications = *opt_.seeds;
        if (opt_.scale != 1) {
            if (!config.qualities.empty())
                throw Error(ErrorCode::InvalidArgument, "--scale applies to generated pools only");
            config.n *= opt_.scale;
        }
        validate_config(config);
        return config;
    }

    std::vector<std::string> engines_or(const std::vector<std::string>& fallback) const {
        for (const auto& e : opt_.engines) engine_from_name(e);
        return opt_.engines.empty() ? fallback : opt_.engines;
    }

    static SolverKind solver_for(EngineKind kind, const RunConfig& config) {
        // Elimination is defined on the knapsack form only.
        return kind == EngineKind::CcbSe ? SolverKind::Greedy : solver_from_config(config);
    }

    static std::size_t grid_points(const RunConfig& c) {
        return static_cast<std::size_t>(std::llround(c.cost_max / c.resolution())) + 1;
    }

    MetricSeries experiment(const RunConfig& config, EngineKind kind, const WorkerPool& pool,
                            const ErrorModel& model) {
        ExperimentOptions eo;
        eo.model = model;
        eo.solver = solver_for(kind, config);
        return run_experiment(config, kind, pool, config.replications, eo);
    }

    void summary(const MetricSeries& m, const RunConfig& config) {
        std::size_t committed = 0;
        double commit_sum = 0.0, eliminated = 0.0;
        for (const auto& r : m.replications) {
            if (r.commit_round) {
                ++committed;
                commit_sum += static_cast<double>(*r.commit_round);
            }
            eliminated += static_cast<double>(r.eliminated);
        }
        const double reps = static_cast<double>(m.replications.size());
        out_ << m.engine << ": reference=" << reference_name(m.reference) << " cost " << fmt(m.reference.cost)
             << ", final regret " << fmt(m.final_mean_regret()) << " +/- " << fmt(m.final_stderr_regret())
             << ", total cost " << fmt(m.mean_cumulative_cost.back()) << ", violating rounds "
             << m.total_violations << ", penalized regret "
             << fmt(expected_regret_penalized(m, config.penalty_L, config.horizon));
        if (committed) out_ << ", mean commit round " << fmt(commit_sum / static_cast<double>(committed));
        if (m.engine == "ccb-se") out_ << ", mean eliminated " << fmt(eliminated / reps);
        out_ << '\n';
    }

    static std::string reference_name(const Reference& r) { return r.kind == ReferenceKind::Exact ? "exact" : "greedy"; }

    static std::string fmt(double x) {
        std::ostringstream os;
        os << std::setprecision(6) << x;
        return os.str();
    }

    static plot::Series series(const std::string& name, const std::vector<double>& y) {
        plot::Series s{name, {}, y};
        s.x.resize(y.size());
        for (std::size_t t = 0; t < y.size(); ++t) s.x[t] = static_cast<double>(t + 1);
        return s;
    }

    fs::path out_dir() const {
        if (!opt_.out_dir.empty()) return opt_.out_dir;
        if (const char* env = std::getenv("OUT_DIR"); env && *env) return env;
        return "out";
    }

    template <class F>
    void write_file(const std::string& name, F&& body) {
        const auto dir = out_dir();
        fs::create_directories(dir);
        std::ofstream os(dir / name);
        if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
        body(os);
    }

    void svg(const std::string& name, const std::string& title, const std::string& x, const std::string& y,
             const std::vector<plot::Series>& s) {
        write_file(name, [&](std::ostream& os) { plot::line_chart(os, title, x, y, s); });
    }

    Options opt_;
    std::ostream& out_;
};

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Assured accuracy worker selection: simulate, verify and bound"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub, bool engines) {
        sub->add_option("--config", opt.config_path, "run configuration (key = value)")->required();
        sub->add_option("--out", opt.out_dir, "output directory (default $OUT_DIR or ./out)");
        if (engines) sub->add_option("--engine", opt.engines, "ccb-ns, ccb-s, ccb-se or eps-greedy")->delimiter(',');
    };
    auto* run = app.add_subcommand("run", "simulate engines on the configured pool");
    add_common(run, true);
    run->add_option("--seeds", opt.seeds, "number of replications");
    run->add_flag("--plot", opt.plot, "also write SVG line charts");
    run->add_option("--scale", opt.scale, "multiply the generated pool size")->check(CLI::PositiveNumber);

    auto* sweep = app.add_subcommand("sweep", "total cost against pool size");
    add_common(sweep, true);
    sweep->add_option("--seeds", opt.seeds, "number of replications");
    sweep->add_flag("--plot", opt.plot, "also write an SVG line chart");
    sweep->add_option("--scale", opt.scale, "multiply the swept pool sizes")->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "ex-post monotonicity and IC/IR on frozen realizations");
    add_common(verify, true);
    verify->add_option("--seeds", opt.seeds, "number of realizations");

    auto* bounds = app.add_subcommand("bounds", "print lower and exploration bounds");
    add_common(bounds, false);

    auto* repro = app.add_subcommand("repro", "run every engine and the pool-size sweep");
    add_common(repro, true);
    repro->add_option("--seeds", opt.seeds, "number of replications");
    repro->add_flag("--plot", opt.plot, "also write SVG line charts");
    repro->add_option("--scale", opt.scale, "multiply the generated pool size")->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help
        err << "error: " << e.what() << '\n';
        return BadInput;
    }

    try {
        Runner runner(opt, out);
        if (run->parsed()) return runner.run();
        if (sweep->parsed()) return runner.sweep();
        if (verify->parsed()) return runner.verify();
        if (bounds->parsed()) return runner.bounds();
        return runner.repro();
    } catch (const Error& e) {
        err << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return Failure;
    }
}

} // namespace aab::cli
