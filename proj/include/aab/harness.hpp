#pragma once

// Experiment orchestration: pool generators, seeded replications, regret and
// cost series, and CSV output.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "aab/core.hpp"
#include "aab/engines.hpp"
#include "aab/realization.hpp"
#include "aab/subset_optimizer.hpp"
#include "aab/trace.hpp"

namespace aab {

// 6:5 split into a dominated block (cost 20, quality 2/3) and a varied block
// (cost ~ U[10,20], quality ~ U[2/3,1]). Reports are truthful.
inline WorkerPool generate_split_pool(std::size_t n_total, std::uint64_t seed) {
    if (n_total == 0 || n_total % 11 != 0)
        throw Error(ErrorCode::InvalidArgument, "pool size must be a positive multiple of 11");
    const std::size_t dominated = n_total / 11 * 6;
    WorkerPool pool;
    Rng rng(derive_seed(seed, "pool", n_total));
    for (std::size_t i = 0; i < n_total; ++i) {
        if (i < dominated) {
            pool.qualities.push_back(2.0 / 3.0);
            pool.true_costs.push_back(20.0);
        } else {
            pool.true_costs.push_back(rng.uniform(10.0, 20.0));
            pool.qualities.push_back(rng.uniform(2.0 / 3.0, 1.0));
        }
    }
    pool.reported_costs = pool.true_costs;
    return pool;
}

// Every subset of the full pool satisfies the constraint on true qualities.
inline bool full_pool_feasible(const WorkerPool& pool, const ErrorModel& model, double alpha) {
    return model.evaluate(full_subset(pool.size()), pool.qualities) < alpha;
}

// Redraws until the full pool meets `alpha` on true qualities; the learning
// algorithms assume selecting everyone always satisfies the constraint.
inline WorkerPool generate_feasible_split_pool(std::size_t n_total, std::uint64_t seed, const ErrorModel& model,
                                               double alpha, std::size_t max_attempts = 1000) {
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        auto pool = generate_split_pool(n_total, derive_seed(seed, "pool-attempt", attempt));
        if (full_pool_feasible(pool, model, alpha)) return pool;
    }
    throw Error(ErrorCode::InfeasibleInstance, "no feasible pool drawn for this size and threshold");
}

// Explicit pool from the config, otherwise a feasible generated pool.
inline WorkerPool make_pool(const RunConfig& config, const ErrorModel& model) {
    if (config.qualities.empty()) return generate_feasible_split_pool(config.n, config.pool_seed, model, config.alpha);
    WorkerPool pool{config.qualities, config.costs, config.costs};
    require_valid(pool);
    if (!full_pool_feasible(pool, model, config.alpha))
        throw Error(ErrorCode::InfeasibleInstance, "the full pool does not meet alpha on true qualities");
    return pool;
}

inline ErrorModel model_from_config(const RunConfig& config) { return ErrorModel::from_name(config.model); }

inline SolverKind solver_from_config(const RunConfig& config) {
    return config.solver == "exact" ? SolverKind::Exact : SolverKind::Greedy;
}

// ---- reference solution ------------------------------------------------------------

enum class ReferenceKind { Exact, Greedy };

struct Reference {
    ReferenceKind kind = ReferenceKind::Exact;
    Subset set;
    double cost = 0.0;
};

// Optimum on true qualities: brute force up to the cap, otherwise the greedy
// knapsack solution (flagged).
inline Reference reference_solution(const WorkerPool& pool, const ErrorModel& model, double alpha,
                                    std::optional<ReferenceKind> force = std::nullopt) {
    const bool exact = force ? *force == ReferenceKind::Exact : pool.size() <= kBruteForceCap;
    if (exact) {
        if (pool.size() > kBruteForceCap) throw Error(ErrorCode::OracleUnavailable, "pool too large for brute force");
        auto s = solve_exact(model, pool.qualities, pool.reported_costs, alpha);
        if (!s) throw Error(ErrorCode::OracleUnavailable, "no subset meets the threshold on true qualities");
        return {ReferenceKind::Exact, *s, subset_cost(*s, pool.reported_costs)};
    }
    auto k = model.knapsack_form();
    if (!k) throw Error(ErrorCode::OracleUnavailable, "greedy reference needs the knapsack model");
    auto s = greedy_select(
        knapsack_from_qualities(*k, pool.qualities, pool.reported_costs, alpha, full_subset(pool.size())));
    if (!s) throw Error(ErrorCode::OracleUnavailable, "no subset meets the threshold on true qualities");
    return {ReferenceKind::Greedy, *s, subset_cost(*s, pool.reported_costs)};
}

// ---- replications ------------------------------------------------------------------

struct ReplicationSeries {
    std::uint64_t seed = 0;
    std::vector<double> round_cost;
    std::vector<double> cumulative_regret;
    std::vector<std::uint8_t> violated;
    std::optional<std::size_t> commit_round;
    std::size_t violations = 0;
    std::size_t eliminated = 0;
};

struct MetricSeries {
    std::string engine;
    Reference reference;
    std::vector<ReplicationSeries> replications;
    // Per round, across replications.
    std::vector<double> mean_regret, stderr_regret;
    std::vector<double> mean_cumulative_cost, stderr_cumulative_cost;
    std::size_t total_violations = 0;

    double final_mean_regret() const { return mean_regret.empty() ? 0.0 : mean_regret.back(); }
    double final_stderr_regret() const { return stderr_regret.empty() ? 0.0 : stderr_regret.back(); }
};

struct ExperimentOptions {
    ErrorModel model = HoeffdingError{};
    SolverKind solver = SolverKind::Greedy;
    std::optional<ReferenceKind> reference;  // default: exact when n <= 20
    std::size_t threads = 0;                  // 0: hardware concurrency
};

inline ReplicationSeries run_replication(const WorkerPool& pool, const RunConfig& config, EngineKind kind,
                                         const ExperimentOptions& opts, const Reference& ref, std::size_t index) {
    ReplicationSeries rep;
    rep.seed = derive_seed(config.seed, "replication", index);
    const auto rho = draw_realization(pool, config.horizon, derive_seed(rep.seed, "realization", 0),
                                      config.prior_positive);
    const auto options = EngineOptions::from_config(kind, opts.solver, config, derive_seed(rep.seed, "decision", 0));
    const auto trace = run_trace(pool, opts.model, options, rho, config);
    rep.round_cost.reserve(config.horizon);
    rep.cumulative_regret.reserve(config.horizon);
    rep.violated.reserve(config.horizon);
    double regret = 0.0;
    for (const auto& r : trace.rounds) {
        regret += r.round_cost - ref.cost;
        rep.round_cost.push_back(r.round_cost);
        rep.cumulative_regret.push_back(regret);
        rep.violated.push_back(r.constraint_ok_true_q ? 0 : 1);
        rep.violations += r.constraint_ok_true_q ? 0 : 1;
    }
    rep.commit_round = trace.commit_round;
    rep.eliminated = trace.eliminated.size();
    return rep;
}

template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += threads) body(i);
        });
    for (auto& t : pool) t.join();
}

inline void summarise(MetricSeries& m, std::size_t horizon) {
    const auto reps = m.replications.size();
    m.mean_regret.assign(horizon, 0.0);
    m.stderr_regret.assign(horizon, 0.0);
    m.mean_cumulative_cost.assign(horizon, 0.0);
    m.stderr_cumulative_cost.assign(horizon, 0.0);
    m.total_violations = 0;
    for (const auto& r : m.replications) m.total_violations += r.violations;
    if (reps == 0) return;
    std::vector<double> cumulative(reps, 0.0);
    for (std::size_t t = 0; t < horizon; ++t) {
        double sr = 0.0, sr2 = 0.0, sc = 0.0, sc2 = 0.0;
        // Fixed replication order keeps the reduction bit-reproducible.
        for (std::size_t k = 0; k < reps; ++k) {
            const double regret = m.replications[k].cumulative_regret[t];
            cumulative[k] += m.replications[k].round_cost[t];
            sr += regret;
            sr2 += regret * regret;
            sc += cumulative[k];
            sc2 += cumulative[k] * cumulative[k];
        }
        const double n = static_cast<double>(reps);
        auto se = [n](double s, double s2) {
            if (n < 2) return 0.0;
            const double var = std::max(0.0, (s2 - s * s / n) / (n - 1));
            return std::sqrt(var / n);
        };
        m.mean_regret[t] = sr / n;
        m.stderr_regret[t] = se(sr, sr2);
        m.mean_cumulative_cost[t] = sc / n;
        m.stderr_cumulative_cost[t] = se(sc, sc2);
    }
}

// Seeded replications of one engine on a fixed pool. Regret is measured
// against the reference optimum on true qualities at alpha.
inline MetricSeries run_experiment(const RunConfig& config, EngineKind kind, const WorkerPool& pool,
                                   std::size_t replications, const ExperimentOptions& opts = {}) {
    validate_config(config);
    require_valid(pool);
    MetricSeries m;
    m.engine = std::string(to_string(kind));
    m.reference = reference_solution(pool, opts.model, config.alpha, opts.reference);
    m.replications.resize(replications);
    parallel_for(replications, opts.threads,
                 [&](std::size_t k) { m.replications[k] = run_replication(pool, config, kind, opts, m.reference, k); });
    summarise(m, config.horizon);
    return m;
}

// (1 - mu) * raw + mu * L * T
inline double expected_regret_penalized(double raw_regret, double mu, double penalty_L, std::size_t horizon) {
    return (1.0 - mu) * raw_regret + mu * penalty_L * static_cast<double>(horizon);
}

inline double expected_regret_penalized(const MetricSeries& m, double penalty_L, std::size_t horizon) {
    return expected_regret_penalized(m.final_mean_regret(), 1.0 / static_cast<double>(horizon), penalty_L, horizon);
}

// ---- CSV ---------------------------------------------------------------------------

inline void write_round_csv(std::ostream& os, const MetricSeries& m) {
    os << "round,engine,seed,cost,regret,violated\n";
    for (const auto& rep : m.replications)
        for (std::size_t t = 0; t < rep.round_cost.size(); ++t)
            os << (t + 1) << ',' << m.engine << ',' << rep.seed << ',' << rep.round_cost[t] << ','
               << rep.cumulative_regret[t] << ',' << static_cast<int>(rep.violated[t]) << '\n';
}

inline void write_aggregate_csv(std::ostream& os, const std::string& engine, const std::vector<double>& mean,
                                const std::vector<double>& stderr_values) {
    os << "round,engine,mean,stderr\n";
    for (std::size_t t = 0; t < mean.size(); ++t)
        os << (t + 1) << ',' << engine << ',' << mean[t] << ',' << stderr_values[t] << '\n';
}

} // namespace aab
