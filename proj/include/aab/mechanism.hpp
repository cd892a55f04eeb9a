#pragma once

// Strategic layer: allocation counts as a function of bids on a frozen
// realization, ex-post monotonicity checks, critical-value payments and
// grid-level IC/IR verification.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "aab/core.hpp"
#include "aab/engines.hpp"
#include "aab/realization.hpp"
#include "aab/trace.hpp"

namespace aab {

struct MechanismSetup {
    ErrorModel model;
    EngineOptions options;
};

struct AllocationProfile {
    std::vector<std::size_t> counts;
    std::vector<double> payments;
    std::optional<std::size_t> commit_round;

    // u_i = -c_i * A_i + P_i
    std::vector<double> utilities(std::span<const double> true_costs) const {
        std::vector<double> u(counts.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            u[i] = -true_costs[i] * static_cast<double>(counts[i]) + (payments.empty() ? 0.0 : payments[i]);
        return u;
    }
};

// The pool's reported costs are the bids.
inline AllocationProfile allocation_count(const MechanismSetup& setup, const WorkerPool& bids_pool,
                                          const SuccessRealization& rho) {
    auto replay = replay_allocation(bids_pool, setup.model, setup.options, rho);
    AllocationProfile p;
    p.counts = std::move(replay.counts);
    p.commit_round = replay.commit_round;
    return p;
}

// Pool where everyone bids truthfully except `w`.
inline WorkerPool truthful_except(const WorkerPool& pool, WorkerId w, double bid) {
    WorkerPool p = pool;
    p.reported_costs = pool.true_costs;
    p.reported_costs[w.value] = bid;
    return p;
}

// `points` evenly spaced bids over [0, cost_max].
inline std::vector<double> bid_grid(double cost_max, std::size_t points) {
    if (points < 2 || !(cost_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "bid grid needs >= 2 points");
    std::vector<double> g(points);
    for (std::size_t k = 0; k < points; ++k)
        g[k] = cost_max * static_cast<double>(k) / static_cast<double>(points - 1);
    return g;
}

inline std::vector<std::size_t> allocation_curve(const MechanismSetup& setup, const WorkerPool& pool,
                                                 const SuccessRealization& rho, WorkerId w,
                                                 std::span<const double> grid) {
    std::vector<std::size_t> curve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        curve[k] = allocation_count(setup, truthful_except(pool, w, grid[k]), rho).counts[w.value];
    return curve;
}

struct MonotonicityViolation {
    WorkerId worker;
    double low_bid = 0.0;
    double high_bid = 0.0;
    std::size_t low_count = 0;
    std::size_t high_count = 0;
};

inline std::ostream& operator<<(std::ostream& os, const MonotonicityViolation& v) {
    return os << "worker " << v.worker.value << ": bid " << v.low_bid << " -> " << v.low_count << " tasks, bid "
              << v.high_bid << " -> " << v.high_count << " tasks";
}

// For every worker and every pair of grid bids (others truthful), a lower bid
// must not receive fewer tasks on the same realization.
inline std::optional<MonotonicityViolation> verify_expost_monotone(const MechanismSetup& setup,
                                                                   const WorkerPool& pool,
                                                                   const SuccessRealization& rho,
                                                                   std::span<const double> grid) {
    std::vector<double> sorted(grid.begin(), grid.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto curve = allocation_curve(setup, pool, rho, WorkerId{i}, sorted);
        // Non-increasing along the sorted grid is equivalent to every pair.
        for (std::size_t k = 1; k < curve.size(); ++k)
            if (curve[k] > curve[k - 1])
                return MonotonicityViolation{WorkerId{i}, sorted[k - 1], sorted[k], curve[k - 1], curve[k]};
    }
    return std::nullopt;
}

// Myerson payment for a non-increasing step allocation on [0, cost_max]:
//   P(b) = b * A(b) + integral_b^cost_max A_hat(z) dz
// where A_hat takes the allocation at the right end of each grid cell. Utility
// at the true cost is the integral itself (never negative); misreporting gains
// at most one cell width times the allocation drop inside that cell.
class CriticalPayment {
public:
    CriticalPayment(std::vector<double> grid, std::vector<std::size_t> curve)
        : grid_(std::move(grid)), curve_(std::move(curve)) {
        for (std::size_t k = 1; k < curve_.size(); ++k)
            if (curve_[k] > curve_[k - 1])
                throw Error(ErrorCode::NonMonotoneAllocation, "allocation rises with the bid");
    }

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<std::size_t>& curve() const { return curve_; }

    double resolution() const { return grid_.size() > 1 ? grid_[1] - grid_[0] : 0.0; }

    double integral_above(double bid) const {
        double total = 0.0;
        for (std::size_t k = 1; k < grid_.size(); ++k) {
            const double lo = std::max(grid_[k - 1], bid);
            const double hi = grid_[k];
            if (hi > lo) total += (hi - lo) * static_cast<double>(curve_[k]);
        }
        return total;
    }

    // Payment to a worker who bid `bid` and received `allocated` tasks.
    double payment(double bid, std::size_t allocated) const {
        return bid * static_cast<double>(allocated) + integral_above(bid);
    }

    // Sum over allocation drops of (drop size) x (bid at which it occurs),
    // plus the floor allocation paid at the top of the grid.
    double payment_from_drops(double bid) const {
        std::size_t start = 0;
        while (start + 1 < grid_.size() && grid_[start + 1] <= bid) ++start;
        double total = 0.0;
        for (std::size_t k = start + 1; k < grid_.size(); ++k)
            total += static_cast<double>(curve_[k - 1] - curve_[k]) * grid_[k - 1];
        return total + static_cast<double>(curve_.back()) * grid_.back();
    }

private:
    std::vector<double> grid_;
    std::vector<std::size_t> curve_;
};

// Allocation curve of `w` swept over [0, cost_max] at the given resolution.
inline CriticalPayment critical_payment(const MechanismSetup& setup, const WorkerPool& pool,
                                        const SuccessRealization& rho, WorkerId w, double cost_max,
                                        double resolution) {
    if (!(resolution > 0.0) || !(cost_max > 0.0))
        throw Error(ErrorCode::NonPositiveArgument, "grid resolution and cost_max must be positive");
    const auto points = static_cast<std::size_t>(std::llround(cost_max / resolution)) + 1;
    auto grid = bid_grid(cost_max, std::max<std::size_t>(points, 2));
    auto curve = allocation_curve(setup, pool, rho, w, grid);
    return CriticalPayment(std::move(grid), std::move(curve));
}

struct IcIrRow {
    WorkerId worker;
    double bid = 0.0;
    std::size_t allocation_count = 0;
    double payment = 0.0;
    double utility = 0.0;  // evaluated at the worker's true cost
    bool violation = false;
    bool truthful = false;
};

struct IcIrReport {
    std::vector<IcIrRow> rows;
    double ic_tolerance = 0.0;
    double max_ic_gain = -std::numeric_limits<double>::infinity();
    double min_truthful_utility = std::numeric_limits<double>::infinity();
    bool ic_ok = true;
    bool ir_ok = true;

    bool ok() const { return ic_ok && ir_ok; }
};

using PaymentFunction = std::function<double(WorkerId, double bid, std::size_t allocated)>;

// For every worker: utility at the truthful bid must be >= 0 and no grid bid
// may beat it by more than the tolerance. `payment_override` replaces the
// critical payment (used for negative controls).
inline IcIrReport verify_ic_ir(const MechanismSetup& setup, const WorkerPool& pool, const SuccessRealization& rho,
                               double cost_max, double resolution,
                               const PaymentFunction& payment_override = {}) {
    IcIrReport report;
    report.ic_tolerance = resolution * static_cast<double>(rho.horizon());
    constexpr double slack = 1e-9;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const WorkerId w{i};
        const double c = pool.true_costs[i];
        const auto rule = critical_payment(setup, pool, rho, w, cost_max, resolution);
        auto pay = [&](double bid, std::size_t allocated) {
            return payment_override ? payment_override(w, bid, allocated) : rule.payment(bid, allocated);
        };
        const std::size_t truthful_count = allocation_count(setup, truthful_except(pool, w, c), rho).counts[i];
        const double truthful_payment = pay(c, truthful_count);
        const double truthful_utility = truthful_payment - c * static_cast<double>(truthful_count);
        const bool ir_violation = truthful_utility < -slack;
        report.ir_ok = report.ir_ok && !ir_violation;
        report.min_truthful_utility = std::min(report.min_truthful_utility, truthful_utility);
        report.rows.push_back({w, c, truthful_count, truthful_payment, truthful_utility, ir_violation, true});

        for (std::size_t k = 0; k < rule.grid().size(); ++k) {
            const double bid = rule.grid()[k];
            const std::size_t count = rule.curve()[k];
            const double p = pay(bid, count);
            const double u = p - c * static_cast<double>(count);
            const double gain = u - truthful_utility;
            const bool ic_violation = gain > report.ic_tolerance + slack;
            report.max_ic_gain = std::max(report.max_ic_gain, gain);
            report.ic_ok = report.ic_ok && !ic_violation;
            report.rows.push_back({w, bid, count, p, u, ic_violation, false});
        }
    }
    return report;
}

inline void write_ic_ir_csv(std::ostream& os, const IcIrReport& report) {
    os << "worker_id,bid,allocation_count,payment,utility,violation_flag\n";
    for (const auto& r : report.rows)
        os << r.worker.value << ',' << r.bid << ',' << r.allocation_count << ',' << r.payment << ',' << r.utility
           << ',' << (r.violation ? 1 : 0) << '\n';
}

// ---- welfare -----------------------------------------------------------------

struct WelfareRecord {
    double requester_value = 0.0;  // R if the constraint held on true q, else -L
    double welfare = 0.0;          // requester_value - sum of true costs
};

inline std::vector<WelfareRecord> welfare(const RunTrace& trace, const WorkerPool& pool, const RunConfig& config) {
    std::vector<WelfareRecord> out;
    out.reserve(trace.rounds.size());
    for (const auto& r : trace.rounds) {
        const double v0 = r.constraint_ok_true_q ? config.reward_R : -config.penalty_L;
        out.push_back({v0, v0 - subset_cost(r.selected, pool.true_costs)});
    }
    return out;
}

} // namespace aab
