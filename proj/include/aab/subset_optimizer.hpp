#pragma once

// Min-cost subset selection under an accuracy constraint: brute force,
// the ratio-greedy minimum-knapsack heuristic, MINIMAL augmentation,
// cost-monotonicity certification and safe elimination.

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "aab/core.hpp"
#include "aab/error_models.hpp"
#include "aab/estimates.hpp"

namespace aab {

// ---- brute force -------------------------------------------------------------

// Every subset of `members`, ordered by (cost, size, lexicographic index set).
// Built once per cost vector and scanned for the first feasible entry.
class SubsetCatalog {
public:
    SubsetCatalog() = default;

    SubsetCatalog(Subset members, std::span<const double> costs) : members_(std::move(members)) {
        const std::size_t m = members_.size();
        if (m > kBruteForceCap) throw Error(ErrorCode::PoolTooLarge, "brute force is capped at 20 workers");
        const std::uint32_t count = 1u << m;
        masks_.resize(count - 1);
        std::vector<double> mask_cost(count, 0.0);
        for (std::uint32_t mask = 1; mask < count; ++mask) {
            // Summation in index order keeps equal-cost sets exactly equal.
            double c = 0.0;
            for (std::size_t k = 0; k < m; ++k)
                if (mask & (1u << k)) c += costs[members_[k].value];
            mask_cost[mask] = c;
            masks_[mask - 1] = mask;
        }
        std::sort(masks_.begin(), masks_.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (mask_cost[a] != mask_cost[b]) return mask_cost[a] < mask_cost[b];
            const int pa = std::popcount(a), pb = std::popcount(b);
            if (pa != pb) return pa < pb;
            // lowest differing position decides the lexicographic order
            const std::uint32_t diff = a ^ b;
            return (a & diff & (~diff + 1)) != 0;
        });
    }

    const Subset& members() const { return members_; }

    // First subset in catalog order with f_S(q) < alpha, skipping any subset
    // touching `excluded` (a mask over member positions).
    template <class Feasible>
    std::optional<Subset> first_where(Feasible&& feasible, std::uint32_t excluded = 0) const {
        for (std::uint32_t mask : masks_) {
            if (mask & excluded) continue;
            if (feasible(mask)) return to_subset(mask);
        }
        return std::nullopt;
    }

    std::optional<Subset> first_feasible(const ErrorModel& model, std::span<const double> q, double alpha,
                                         std::uint32_t excluded = 0) const {
        double buf[kBruteForceCap];
        for (std::uint32_t mask : masks_) {
            if (mask & excluded) continue;
            std::size_t s = 0;
            for (std::size_t k = 0; k < members_.size(); ++k)
                if (mask & (1u << k)) buf[s++] = q[members_[k].value];
            if (model.evaluate_members({buf, s}) < alpha) return to_subset(mask);
        }
        return std::nullopt;
    }

    std::uint32_t mask_of(const Subset& workers) const {
        std::uint32_t mask = 0;
        for (std::size_t k = 0; k < members_.size(); ++k)
            if (contains(workers, members_[k])) mask |= 1u << k;
        return mask;
    }

    Subset to_subset(std::uint32_t mask) const {
        Subset s;
        for (std::size_t k = 0; k < members_.size(); ++k)
            if (mask & (1u << k)) s.push_back(members_[k]);
        return s;
    }

private:
    Subset members_;
    std::vector<std::uint32_t> masks_;
};

// Minimum-cost S with f_S(q) < alpha; ties by fewer workers, then the
// lexicographically smallest index set. Empty when no subset qualifies.
inline std::optional<Subset> solve_exact(const ErrorModel& model, std::span<const double> q,
                                         std::span<const double> costs, double alpha) {
    if (q.size() != costs.size()) throw Error(ErrorCode::LengthMismatch, "qualities and costs differ in length");
    SubsetCatalog catalog(full_subset(q.size()), costs);
    return catalog.first_feasible(model, q, alpha);
}

// ---- minimum knapsack ------------------------------------------------------------

// min C(S) s.t. sum_{i in S} a_i >= M. `ids` maps positions back to workers;
// when empty, position k is worker k.
struct KnapsackInstance {
    std::vector<double> costs;
    std::vector<double> weights;
    double demand = 0.0;
    std::vector<WorkerId> ids;

    std::size_t size() const { return costs.size(); }
    WorkerId id(std::size_t k) const { return ids.empty() ? WorkerId{k} : ids[k]; }
    double total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
};

// Weights a_i = max(0, 2 q_i - 1) and demand ln(1/alpha)/epsilon, over the
// given candidate workers.
inline KnapsackInstance knapsack_from_qualities(const HoeffdingError& model, std::span<const double> q,
                                                std::span<const double> costs, double alpha,
                                                const Subset& candidates) {
    KnapsackInstance inst;
    inst.demand = model.demand(alpha);
    inst.costs.reserve(candidates.size());
    inst.weights.reserve(candidates.size());
    inst.ids.reserve(candidates.size());
    for (auto w : candidates) {
        inst.costs.push_back(costs[w.value]);
        inst.weights.push_back(std::max(0.0, 2.0 * q[w.value] - 1.0));
        inst.ids.push_back(w);
    }
    return inst;
}

inline double cost_weight_ratio(double cost, double weight) {
    return weight > 0.0 ? cost / weight : std::numeric_limits<double>::infinity();
}

struct GreedyCandidate {
    Subset members;
    double cost = 0.0;
};

struct GreedyTrace {
    std::vector<WorkerId> ordering;  // ascending cost/weight, ties by index
    std::vector<Subset> small_sets;  // S_0, S_1, ...
    std::vector<Subset> big_sets;    // B_0, B_1, ...
    std::vector<GreedyCandidate> candidates;
    std::size_t chosen = 0;
};

struct GreedyResult {
    Subset selected;
    double cost = 0.0;
    GreedyTrace trace;
};

namespace detail {

inline std::vector<std::size_t> ratio_order(const KnapsackInstance& inst) {
    std::vector<std::size_t> order(inst.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> ratio(inst.size());
    for (std::size_t k = 0; k < inst.size(); ++k) ratio[k] = cost_weight_ratio(inst.costs[k], inst.weights[k]);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ratio[a] != ratio[b]) return ratio[a] < ratio[b];
        return inst.id(a) < inst.id(b);
    });
    return order;
}

// Walk the ratio-sorted list. An element that completes the demand on top of
// the current small elements is big and yields a candidate; otherwise it is
// small and joins every later candidate.
inline std::optional<GreedyResult> greedy_walk(const KnapsackInstance& inst, bool keep_trace) {
    if (inst.total_weight() < inst.demand) return std::nullopt;
    GreedyResult result;
    const auto order = ratio_order(inst);

    Subset smalls;
    double small_weight = 0.0;
    double small_cost = 0.0;
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best_big = 0;
    Subset best_smalls;
    bool previous_big = true;  // so the first small element opens S_0
    bool have_any_big = false;
    std::size_t candidate_index = 0;

    if (keep_trace) {
        result.trace.small_sets.emplace_back();
        result.trace.big_sets.emplace_back();
    }

    for (std::size_t k : order) {
        const WorkerId w = inst.id(k);
        if (keep_trace) result.trace.ordering.push_back(w);
        if (small_weight + inst.weights[k] >= inst.demand) {
            const double c = small_cost + inst.costs[k];
            if (keep_trace) {
                result.trace.big_sets.back().push_back(w);
                GreedyCandidate cand{smalls, c};
                cand.members.insert(std::lower_bound(cand.members.begin(), cand.members.end(), w), w);
                result.trace.candidates.push_back(std::move(cand));
            }
            if (c < best_cost) {
                best_cost = c;
                best_big = k;
                best_smalls = smalls;
                if (keep_trace) result.trace.chosen = candidate_index;
            }
            ++candidate_index;
            previous_big = true;
            have_any_big = true;
        } else {
            if (keep_trace && previous_big && have_any_big) {
                result.trace.small_sets.emplace_back();
                result.trace.big_sets.emplace_back();
            }
            smalls.insert(std::lower_bound(smalls.begin(), smalls.end(), w), w);
            small_weight += inst.weights[k];
            small_cost += inst.costs[k];
            if (keep_trace) result.trace.small_sets.back().push_back(w);
            previous_big = false;
        }
    }
    if (!have_any_big) return std::nullopt;

    result.selected = std::move(best_smalls);
    const WorkerId big = inst.id(best_big);
    result.selected.insert(std::lower_bound(result.selected.begin(), result.selected.end(), big), big);
    result.cost = best_cost;
    if (keep_trace) {
        for (auto& s : result.trace.small_sets) std::sort(s.begin(), s.end());
        for (auto& s : result.trace.big_sets) std::sort(s.begin(), s.end());
    }
    return result;
}

} // namespace detail

// Ratio-greedy 2-approximation for minimum knapsack. Throws
// INFEASIBLE_INSTANCE when even the whole pool misses the demand.
inline GreedyResult greedy_min_knapsack(const KnapsackInstance& inst) {
    if (inst.costs.size() != inst.weights.size() || (!inst.ids.empty() && inst.ids.size() != inst.costs.size()))
        throw Error(ErrorCode::LengthMismatch, "knapsack instance arrays differ in length");
    for (std::size_t k = 0; k < inst.size(); ++k)
        if (!(inst.weights[k] >= 0.0) || !(inst.costs[k] >= 0.0))
            throw Error(ErrorCode::InvalidArgument, "knapsack costs and weights must be non-negative");
    auto r = detail::greedy_walk(inst, true);
    if (!r) throw Error(ErrorCode::InfeasibleInstance, "total weight is below the demand");
    return std::move(*r);
}

// Same selection without the trace; empty when infeasible.
inline std::optional<Subset> greedy_select(const KnapsackInstance& inst) {
    auto r = detail::greedy_walk(inst, false);
    if (!r) return std::nullopt;
    return std::move(r->selected);
}

// Brute-force minimum knapsack with the solve_exact tie-break.
inline std::optional<Subset> solve_exact_knapsack(const KnapsackInstance& inst) {
    const std::size_t m = inst.size();
    if (m > kBruteForceCap) throw Error(ErrorCode::PoolTooLarge, "brute force is capped at 20 workers");
    std::vector<double> costs(m);
    Subset positions = full_subset(m);
    for (std::size_t k = 0; k < m; ++k) costs[k] = inst.costs[k];
    SubsetCatalog catalog(positions, costs);
    auto best = catalog.first_where([&](std::uint32_t mask) {
        double w = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            if (mask & (1u << k)) w += inst.weights[k];
        return w >= inst.demand;
    });
    if (!best) return std::nullopt;
    Subset out;
    for (auto p : *best) out.push_back(inst.id(p.value));
    std::sort(out.begin(), out.end());
    return out;
}

// ---- MINIMAL ---------------------------------------------------------------------

// Cheapest-first additions from `others` until f_{current ∪ S'}(q) < alpha.
// Returns all of `others` if no prefix of that order succeeds.
inline Subset minimal_augment(const Subset& current, const Subset& others, std::span<const double> q,
                              std::span<const double> costs, const ErrorModel& model, double alpha) {
    if (!current.empty() && model.evaluate(current, q) < alpha) return {};
    Subset order = others;
    std::stable_sort(order.begin(), order.end(),
                     [&](WorkerId a, WorkerId b) { return costs[a.value] < costs[b.value]; });
    Subset combined = current;
    Subset added;
    for (auto w : order) {
        combined.insert(std::lower_bound(combined.begin(), combined.end(), w), w);
        added.insert(std::lower_bound(added.begin(), added.end(), w), w);
        if (model.evaluate(combined, q) < alpha) return added;
    }
    return others;
}

// ---- monotonicity certification ---------------------------------------------

using KnapsackSolver = std::function<std::optional<Subset>(const KnapsackInstance&)>;

struct MonotoneCounterexample {
    KnapsackInstance instance;  // with the higher cost for `worker`
    WorkerId worker;
    double higher_cost = 0.0;
    double lower_cost = 0.0;
};

// Random feasible instances; lowering a selected worker's cost must keep it
// selected. Returns the first violation.
inline std::optional<MonotoneCounterexample> certify_monotone(const KnapsackSolver& solver, std::size_t trials,
                                                              std::uint64_t seed, std::size_t max_workers = 12) {
    Rng rng(seed);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t n = 1 + rng.index(max_workers);
        KnapsackInstance inst;
        for (std::size_t k = 0; k < n; ++k) {
            inst.costs.push_back(rng.uniform(0.0, 20.0));
            inst.weights.push_back(rng.uniform(0.0, 1.0));
        }
        inst.demand = rng.uniform(0.05, 1.0) * inst.total_weight();
        const WorkerId w{rng.index(n)};
        auto high = solver(inst);
        if (!high || !contains(*high, w)) continue;
        KnapsackInstance lowered = inst;
        lowered.costs[w.value] *= rng.uniform();
        auto low = solver(lowered);
        if (!low || !contains(*low, w))
            return MonotoneCounterexample{inst, w, inst.costs[w.value], lowered.costs[w.value]};
    }
    return std::nullopt;
}

// ---- safe elimination ---------------------------------------------------------

// Knapsack instantiation with LCB weights a^- = 2q^- - 1 and UCB weights
// a^+ = 2q^+ - 1. With `active` sorted by c/a^-, k is the shortest prefix whose
// LCB weight meets the demand; r beyond k is discarded when
// c_k/a^-_k <= c_r/a^+_r and c_r >= every prefix cost.
inline Subset safe_eliminate(const QualityEstimate& est, std::span<const double> costs, double demand,
                             const Subset& active) {
    const std::size_t m = active.size();
    std::vector<double> a_lo(m), a_hi(m);
    for (std::size_t k = 0; k < m; ++k) {
        const auto b = est.bounds(active[k]);
        a_lo[k] = std::max(0.0, 2.0 * b.lower - 1.0);
        a_hi[k] = std::max(0.0, 2.0 * b.upper - 1.0);
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> lo_ratio(m);
    for (std::size_t k = 0; k < m; ++k) lo_ratio[k] = cost_weight_ratio(costs[active[k].value], a_lo[k]);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lo_ratio[a] < lo_ratio[b]; });

    double prefix_weight = 0.0;
    double prefix_max_cost = 0.0;
    std::size_t k_end = m;
    for (std::size_t j = 0; j < m; ++j) {
        prefix_weight += a_lo[order[j]];
        prefix_max_cost = std::max(prefix_max_cost, costs[active[order[j]].value]);
        if (prefix_weight >= demand) {
            k_end = j;
            break;
        }
    }
    if (k_end == m) return {};
    const double kth_ratio = lo_ratio[order[k_end]];

    Subset eliminated;
    for (std::size_t j = k_end + 1; j < m; ++j) {
        const std::size_t r = order[j];
        const double c_r = costs[active[r].value];
        if (kth_ratio <= cost_weight_ratio(c_r, a_hi[r]) && c_r >= prefix_max_cost) eliminated.push_back(active[r]);
    }
    std::sort(eliminated.begin(), eliminated.end());
    return eliminated;
}

} // namespace aab
