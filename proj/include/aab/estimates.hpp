#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "aab/core.hpp"

namespace aab {

struct ConfidenceBounds {
    std::optional<double> mean;  // empty before the first pull
    double upper = 1.0;
    double lower = 0.5;
};

// Pull/success counters per worker and the Hoeffding bounds derived from them.
// Bounds are clamped to [0.5, 1], the admissible quality range.
class QualityEstimate {
public:
    QualityEstimate() = default;
    QualityEstimate(std::size_t pool_size, double confidence_mu)
        : pulls_(pool_size, 0), successes_(pool_size, 0), mu_(confidence_mu) {
        if (!(confidence_mu > 0.0 && confidence_mu < 1.0))
            throw Error(ErrorCode::InvalidArgument, "confidence mu must lie in (0,1)");
        log_term_ = std::log(2.0 * static_cast<double>(pool_size) / confidence_mu);
    }

    std::size_t pool_size() const { return pulls_.size(); }
    double confidence_mu() const { return mu_; }
    std::size_t pulls(WorkerId w) const { return pulls_[w.value]; }
    std::size_t successes(WorkerId w) const { return successes_[w.value]; }

    void record(WorkerId w, bool correct) {
        ++pulls_[w.value];
        if (correct) ++successes_[w.value];
    }

    // sqrt(ln(2n/mu) / (2 n_i))
    double radius(WorkerId w) const {
        return std::sqrt(log_term_ / (2.0 * static_cast<double>(pulls_[w.value])));
    }

    ConfidenceBounds bounds(WorkerId w) const {
        const auto n_i = pulls_[w.value];
        if (n_i == 0) return {};
        const double mean = static_cast<double>(successes_[w.value]) / static_cast<double>(n_i);
        const double r = radius(w);
        return {mean, std::clamp(mean + r, 0.5, 1.0), std::clamp(mean - r, 0.5, 1.0)};
    }

    // Full profiles, indexed by worker.
    std::vector<double> upper_profile() const { return profile([](const ConfidenceBounds& b) { return b.upper; }); }
    std::vector<double> lower_profile() const { return profile([](const ConfidenceBounds& b) { return b.lower; }); }

    // Empirical means clamped to [0.5, 1]; unpulled workers read as 0.5.
    std::vector<double> mean_profile() const {
        return profile([](const ConfidenceBounds& b) { return std::clamp(b.mean.value_or(0.5), 0.5, 1.0); });
    }

private:
    template <class F>
    std::vector<double> profile(F pick) const {
        std::vector<double> out(pulls_.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = pick(bounds(WorkerId{i}));
        return out;
    }

    std::vector<std::size_t> pulls_;
    std::vector<std::size_t> successes_;
    double mu_ = 0.05;
    double log_term_ = 0.0;
};

inline ConfidenceBounds confidence_bounds(const QualityEstimate& est, WorkerId w) { return est.bounds(w); }

} // namespace aab
