#pragma once

// Aggregation by majority vote and the error-probability functions f_S(q)
// used as the accuracy constraint, each with a bounded-smoothness function h.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aab/core.hpp"

namespace aab {

inline Label aggregate_majority(std::span<const Label> labels) {
    if (labels.empty()) throw Error(ErrorCode::EmptySet, "majority vote over no labels");
    int sum = 0;
    for (Label l : labels) sum += static_cast<int>(l);
    // Ties resolve to Negative.
    return sum > 0 ? Label::Positive : Label::Negative;
}

// Probability of the most likely erroneous voting outcome, restricted to the
// monotone part: product of (1 - q) over the floor((s+1)/2) weakest members.
struct WorstCaseError {
    double evaluate(std::span<const double> member_qualities) const {
        const std::size_t s = member_qualities.size();
        if (s == 0) throw Error(ErrorCode::EmptySet, "worst-case error of empty set");
        const std::size_t weakest = (s + 1) / 2;
        double buf[64];
        std::vector<double> heap_buf;
        double* q = buf;
        if (s > 64) {
            heap_buf.resize(s);
            q = heap_buf.data();
        }
        std::copy(member_qualities.begin(), member_qualities.end(), q);
        std::partial_sort(q, q + weakest, q + s);
        double p = 1.0;
        for (std::size_t i = 0; i < weakest; ++i) p *= (1.0 - q[i]);
        return p;
    }

    // Each of at most n factors lies in [0,1] and moves by at most delta.
    double smoothness(double delta, std::size_t n) const { return static_cast<double>(n) * delta; }
    double smoothness_inverse(double bound, std::size_t n) const { return bound / static_cast<double>(n); }
};

// Hoeffding bound on the majority-vote error when every q_i >= 1/2 + epsilon:
// exp(-epsilon * sum(2 q_i - 1)).
struct HoeffdingError {
    double epsilon = 1.0 / 6.0;

    double evaluate(std::span<const double> member_qualities) const {
        if (member_qualities.empty()) throw Error(ErrorCode::EmptySet, "hoeffding error of empty set");
        double margin = 0.0;
        for (double q : member_qualities) margin += 2.0 * q - 1.0;
        return std::exp(-margin * epsilon);
    }

    // exp is 1-Lipschitz on non-positive arguments; the exponent moves by at
    // most 2*epsilon*delta per member.
    double smoothness(double delta, std::size_t n) const { return 2.0 * epsilon * static_cast<double>(n) * delta; }
    double smoothness_inverse(double bound, std::size_t n) const {
        return bound / (2.0 * epsilon * static_cast<double>(n));
    }

    // f_S(q) < alpha  <=>  sum(2 q_i - 1) > ln(1/alpha) / epsilon.
    double demand(double alpha) const { return std::log(1.0 / alpha) / epsilon; }
};

class ErrorModel {
public:
    ErrorModel() = default;
    ErrorModel(WorstCaseError m) : impl_(m) {}
    ErrorModel(HoeffdingError m) : impl_(m) {}

    static ErrorModel from_name(std::string_view name, double epsilon = 1.0 / 6.0) {
        if (name == "worst_case") return WorstCaseError{};
        if (name == "hoeffding") {
            if (!(epsilon > 0.0)) throw Error(ErrorCode::NonPositiveArgument, "hoeffding epsilon must be positive");
            return HoeffdingError{epsilon};
        }
        throw Error(ErrorCode::UnknownName, "unknown error model '" + std::string(name) + "'");
    }

    std::string name() const {
        return std::holds_alternative<WorstCaseError>(impl_) ? "worst_case" : "hoeffding";
    }

    double evaluate_members(std::span<const double> member_qualities) const {
        return std::visit([&](const auto& m) { return m.evaluate(member_qualities); }, impl_);
    }

    // f_S(q) for a subset of a full quality profile.
    double evaluate(const Subset& s, std::span<const double> q) const {
        double buf[64];
        std::vector<double> heap_buf;
        double* members = buf;
        if (s.size() > 64) {
            heap_buf.resize(s.size());
            members = heap_buf.data();
        }
        for (std::size_t k = 0; k < s.size(); ++k) members[k] = q[s[k].value];
        return evaluate_members({members, s.size()});
    }

    double smoothness(double delta, std::size_t n) const {
        if (!(delta > 0.0)) throw Error(ErrorCode::NonPositiveArgument, "smoothness needs delta > 0");
        return std::visit([&](const auto& m) { return m.smoothness(delta, n); }, impl_);
    }

    double smoothness_inverse(double bound, std::size_t n) const {
        if (!(bound > 0.0)) throw Error(ErrorCode::NonPositiveArgument, "smoothness inverse needs a positive bound");
        return std::visit([&](const auto& m) { return m.smoothness_inverse(bound, n); }, impl_);
    }

    // Present only for the model that reduces to a minimum-knapsack constraint.
    std::optional<HoeffdingError> knapsack_form() const {
        if (auto* h = std::get_if<HoeffdingError>(&impl_)) return *h;
        return std::nullopt;
    }

private:
    std::variant<WorstCaseError, HoeffdingError> impl_{HoeffdingError{}};
};

inline double worst_case_error(const Subset& s, std::span<const double> q) {
    return ErrorModel(WorstCaseError{}).evaluate(s, q);
}

inline double hoeffding_error(const Subset& s, std::span<const double> q, double epsilon = 1.0 / 6.0) {
    return ErrorModel(HoeffdingError{epsilon}).evaluate(s, q);
}

inline double smoothness_h(const ErrorModel& model, double delta, std::size_t n) {
    return model.smoothness(delta, n);
}

inline double smoothness_h_inv(const ErrorModel& model, double bound, std::size_t n) {
    return model.smoothness_inverse(bound, n);
}

inline constexpr std::size_t kBruteForceCap = 20;

struct DeltaSeparation {
    double delta = 0.0;
    Subset closest;  // the subset whose error is nearest the threshold
};

// min over non-empty S of |f_S(q) - alpha|.
inline constexpr double kDeltaZeroTolerance = 1e-12;

inline DeltaSeparation compute_delta_separation(const ErrorModel& model, std::span<const double> q, double alpha) {
    const std::size_t n = q.size();
    if (n > kBruteForceCap) throw Error(ErrorCode::PoolTooLarge, "delta separation is brute force");
    if (n == 0) throw Error(ErrorCode::EmptySet, "delta separation of empty pool");
    DeltaSeparation best{std::numeric_limits<double>::infinity(), {}};
    std::vector<double> members;
    members.reserve(n);
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        members.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) members.push_back(q[i]);
        double gap = std::abs(model.evaluate_members(members) - alpha);
        if (gap < kDeltaZeroTolerance) gap = 0.0;  // rounding noise on an exact tie
        if (gap < best.delta) {
            best.delta = gap;
            best.closest.clear();
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i)) best.closest.push_back(WorkerId{i});
        }
    }
    return best;
}

} // namespace aab
