#pragma once

// Learning loops for assured-accuracy worker selection:
//   ccb-ns      optimise on UCB, certify on LCB, MINIMAL augmentation while exploring
//   ccb-s       as ccb-ns but every exploration round takes the whole pool
//   ccb-se      ccb-s on the knapsack instantiation with safe elimination
//   eps-greedy  full pool w.p. min(1, 100/t), else optimise on empirical means

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aab/core.hpp"
#include "aab/error_models.hpp"
#include "aab/estimates.hpp"
#include "aab/realization.hpp"
#include "aab/subset_optimizer.hpp"

namespace aab {

enum class EngineKind { CcbNs, CcbS, CcbSe, EpsGreedy };
enum class SolverKind { Exact, Greedy };
enum class Phase { Exploring, Exploiting };

inline std::string_view to_string(EngineKind k) {
    switch (k) {
    case EngineKind::CcbNs: return "ccb-ns";
    case EngineKind::CcbS: return "ccb-s";
    case EngineKind::CcbSe: return "ccb-se";
    case EngineKind::EpsGreedy: return "eps-greedy";
    }
    return "?";
}

inline EngineKind engine_from_name(std::string_view name) {
    if (name == "ccb-ns") return EngineKind::CcbNs;
    if (name == "ccb-s") return EngineKind::CcbS;
    if (name == "ccb-se") return EngineKind::CcbSe;
    if (name == "eps-greedy") return EngineKind::EpsGreedy;
    throw Error(ErrorCode::UnknownName, "unknown engine '" + std::string(name) + "'");
}

inline std::string_view to_string(SolverKind s) { return s == SolverKind::Exact ? "exact" : "greedy"; }

struct EngineOptions {
    EngineKind kind = EngineKind::CcbS;
    SolverKind solver = SolverKind::Exact;
    double alpha = 0.1;  // LCB certification threshold
    double xi = 0.0;     // UCB optimisation uses alpha - xi
    double mu = 0.05;
    std::uint64_t decision_seed = 0;  // eps-greedy coin flips only

    double ucb_alpha() const { return alpha - xi; }

    static EngineOptions from_config(EngineKind kind, SolverKind solver, const RunConfig& c,
                                     std::uint64_t decision_seed = 0) {
        return {kind, solver, c.alpha, c.xi, c.mu, decision_seed};
    }
};

struct RoundRecord {
    std::size_t round = 0;
    Subset selected;
    Label predicted = Label::Negative;
    Label truth = Label::Negative;
    double round_cost = 0.0;  // sum of reported costs
    bool constraint_ok_true_q = true;
    bool exploring = true;
};

struct EngineState {
    QualityEstimate estimates;
    Phase phase = Phase::Exploring;
    std::optional<Subset> committed_set;
    std::optional<std::size_t> commit_round;
    std::size_t round = 0;  // rounds played
    Subset eliminated;
    double ucb_alpha = 0.0;
    double lcb_alpha = 0.0;
};

inline double epsilon_schedule(std::size_t t) { return std::min(1.0, 100.0 / static_cast<double>(t)); }

class Engine {
public:
    Engine(const WorkerPool& pool, ErrorModel model, EngineOptions options)
        : pool_(pool), model_(model), options_(options), decisions_(options.decision_seed) {
        require_valid(pool);
        if (!(options.alpha > 0.0 && options.alpha < 1.0) || !(options.ucb_alpha() > 0.0) || options.xi < 0.0)
            throw Error(ErrorCode::InvalidArgument, "need 0 <= xi < alpha < 1");
        if (options.kind == EngineKind::CcbSe && (!model.knapsack_form() || options.solver != SolverKind::Greedy))
            throw Error(ErrorCode::InvalidArgument, "ccb-se needs the hoeffding model with the greedy solver");
        if (options.solver == SolverKind::Greedy && !model.knapsack_form())
            throw Error(ErrorCode::InvalidArgument, "greedy solver needs the hoeffding (knapsack) model");
        state_.estimates = QualityEstimate(pool.size(), options.mu);
        state_.ucb_alpha = options.ucb_alpha();
        state_.lcb_alpha = options.alpha;
        if (options.solver == SolverKind::Exact) catalog_ = SubsetCatalog(full_subset(pool.size()), pool.reported_costs);
        true_q_ = pool.qualities;
    }

    const EngineState& state() const { return state_; }
    const WorkerPool& pool() const { return pool_; }
    const EngineOptions& options() const { return options_; }

    // Play the next round against the frozen realization.
    RoundRecord step(const SuccessRealization& rho) {
        const std::size_t t = ++state_.round;
        if (t > rho.horizon()) throw Error(ErrorCode::InvalidArgument, "realization horizon exhausted");
        Subset selected;
        bool exploring = true;
        if (options_.kind == EngineKind::EpsGreedy) {
            selected = epsilon_greedy_select(t, exploring);
        } else if (state_.phase == Phase::Exploiting) {
            selected = *state_.committed_set;
            exploring = false;
        } else {
            selected = confidence_select(t, exploring);
        }
        return play(rho, t, std::move(selected), exploring);
    }

    // Min-cost S with f_S(q) < threshold over the non-eliminated workers.
    std::optional<Subset> solve(std::span<const double> q, double threshold) const {
        if (options_.solver == SolverKind::Exact)
            return catalog_.first_feasible(model_, q, threshold, catalog_.mask_of(state_.eliminated));
        const auto inst =
            knapsack_from_qualities(*model_.knapsack_form(), q, pool_.reported_costs, threshold, active());
        return greedy_select(inst);
    }

    Subset active() const {
        if (state_.eliminated.empty()) return full_subset(pool_.size());
        Subset a;
        for (std::size_t i = 0; i < pool_.size(); ++i)
            if (!contains(state_.eliminated, WorkerId{i})) a.push_back(WorkerId{i});
        return a;
    }

private:
    Subset confidence_select(std::size_t t, bool& exploring) {
        if (t == 1) return active();  // no estimates yet
        const auto upper = state_.estimates.upper_profile();
        const auto lower = state_.estimates.lower_profile();
        auto candidate = solve(upper, state_.ucb_alpha);
        if (candidate && model_.evaluate(*candidate, lower) < state_.lcb_alpha) {
            state_.phase = Phase::Exploiting;
            state_.committed_set = *candidate;
            state_.commit_round = t;
            exploring = false;
            return *candidate;
        }
        if (options_.kind == EngineKind::CcbNs) {
            Subset current = candidate.value_or(Subset{});
            Subset others;
            for (std::size_t i = 0; i < pool_.size(); ++i)
                if (!contains(current, WorkerId{i})) others.push_back(WorkerId{i});
            Subset extra =
                minimal_augment(current, others, lower, pool_.reported_costs, model_, state_.lcb_alpha);
            Subset merged;
            std::merge(current.begin(), current.end(), extra.begin(), extra.end(), std::back_inserter(merged));
            return merged;
        }
        return active();
    }

    Subset epsilon_greedy_select(std::size_t t, bool& exploring) {
        const bool explore = decisions_.bernoulli(epsilon_schedule(t));
        if (!explore && t > 1) {
            if (auto s = solve(state_.estimates.mean_profile(), state_.lcb_alpha)) {
                exploring = false;
                return *s;
            }
        }
        exploring = true;
        return full_subset(pool_.size());
    }

    RoundRecord play(const SuccessRealization& rho, std::size_t t, Subset selected, bool exploring) {
        RoundRecord rec;
        rec.round = t;
        rec.truth = rho.truth(t);
        rec.exploring = exploring;
        labels_.clear();
        for (auto w : selected) labels_.push_back(rho.reported_label(w, t));
        rec.predicted = aggregate_majority(labels_);
        rec.round_cost = subset_cost(selected, pool_.reported_costs);
        rec.constraint_ok_true_q = model_.evaluate(selected, true_q_) < options_.alpha;

        // Exploitation rounds read labels only.
        const bool learns = options_.kind == EngineKind::EpsGreedy || state_.phase == Phase::Exploring;
        if (learns) {
            for (auto w : selected) state_.estimates.record(w, rho.correct(w, t));
            if (options_.kind == EngineKind::CcbSe && state_.phase == Phase::Exploring) eliminate();
        }
        rec.selected = std::move(selected);
        return rec;
    }

    void eliminate() {
        const double demand = model_.knapsack_form()->demand(state_.ucb_alpha);
        Subset fresh = safe_eliminate(state_.estimates, pool_.reported_costs, demand, active());
        if (fresh.empty()) return;
        Subset merged;
        std::merge(state_.eliminated.begin(), state_.eliminated.end(), fresh.begin(), fresh.end(),
                   std::back_inserter(merged));
        state_.eliminated = std::move(merged);
    }

    WorkerPool pool_;
    ErrorModel model_;
    EngineOptions options_;
    EngineState state_;
    SubsetCatalog catalog_;
    Rng decisions_;
    std::vector<double> true_q_;
    std::vector<Label> labels_;
};

// ---- exploration bounds ------------------------------------------------------

struct ExplorationBounds {
    double ccb_ns = 0.0;  // 2n ln(2n/mu) / h^-1(Delta)^2
    double ccb_s = 0.0;   // 2 ln(2n/mu) / h^-1(Delta)^2
    double range = 0.0;   // min(ln(2n/mu) / (16 h^-1(xi)^2), ccb_s)
};

inline ExplorationBounds exploration_bound(std::size_t n, double mu, const ErrorModel& model, double delta,
                                           double xi = 0.0) {
    if (!(delta > 0.0) && !(xi > 0.0)) throw Error(ErrorCode::NonPositiveDelta, "delta separation is zero");
    const double log_term = std::log(2.0 * static_cast<double>(n) / mu);
    const double inf = std::numeric_limits<double>::infinity();
    ExplorationBounds b{inf, inf, inf};
    if (delta > 0.0) {
        const double x = model.smoothness_inverse(delta, n);
        b.ccb_s = 2.0 * log_term / (x * x);
        b.ccb_ns = static_cast<double>(n) * b.ccb_s;
    }
    b.range = b.ccb_s;
    if (xi > 0.0) {
        const double x = model.smoothness_inverse(xi, n);
        b.range = std::min(b.range, log_term / (16.0 * x * x));
    }
    return b;
}

// ln T / h^-1(Delta)^2, reported as a diagnostic.
inline double regret_lower_bound(std::size_t horizon, std::size_t n, const ErrorModel& model, double delta) {
    if (!(delta > 0.0)) throw Error(ErrorCode::NonPositiveDelta, "delta separation is zero");
    const double x = model.smoothness_inverse(delta, n);
    return std::log(static_cast<double>(horizon)) / (x * x);
}

} // namespace aab
