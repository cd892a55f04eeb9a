#pragma once

// Frozen randomness for a run: the would-be outcome of every (worker, task)
// pair plus the ground-truth label of every task.

#include <cstdint>
#include <vector>

#include "aab/core.hpp"

namespace aab {

enum class Outcome : std::uint8_t { Wrong = 0, Correct = 1, Unselected = 2 };

class SuccessRealization {
public:
    SuccessRealization() = default;
    SuccessRealization(std::size_t workers, std::size_t horizon)
        : workers_(workers), horizon_(horizon), correct_(workers * horizon, 0),
          truth_(horizon, Label::Positive) {}

    std::size_t workers() const { return workers_; }
    std::size_t horizon() const { return horizon_; }

    // Rounds are 1-based to match RoundRecord::round.
    bool correct(WorkerId w, std::size_t round) const {
        return correct_[w.value * horizon_ + (round - 1)] != 0;
    }
    void set_correct(WorkerId w, std::size_t round, bool value) {
        correct_[w.value * horizon_ + (round - 1)] = value ? 1 : 0;
    }

    Label truth(std::size_t round) const { return truth_[round - 1]; }
    void set_truth(std::size_t round, Label l) { truth_[round - 1] = l; }

    // The label a selected worker reports for a task.
    Label reported_label(WorkerId w, std::size_t round) const {
        return correct(w, round) ? truth(round) : flip(truth(round));
    }

    friend bool operator==(const SuccessRealization&, const SuccessRealization&) = default;

private:
    std::size_t workers_ = 0;
    std::size_t horizon_ = 0;
    std::vector<std::uint8_t> correct_;
    std::vector<Label> truth_;
};

// Entry (i,t) is correct with probability q_i, independently over i and t.
// Outcomes are pre-drawn but only revealed for selected workers.
inline SuccessRealization draw_realization(const WorkerPool& pool, std::size_t horizon, std::uint64_t seed,
                                           double prior_positive = 0.5) {
    require_valid(pool);
    SuccessRealization rho(pool.size(), horizon);
    Rng truth_rng(derive_seed(seed, "truth", 0));
    for (std::size_t t = 1; t <= horizon; ++t)
        rho.set_truth(t, truth_rng.bernoulli(prior_positive) ? Label::Positive : Label::Negative);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        Rng row(derive_seed(seed, "outcome", i));
        const double q = pool.qualities[i];
        for (std::size_t t = 1; t <= horizon; ++t) rho.set_correct(WorkerId{i}, t, row.bernoulli(q));
    }
    return rho;
}

} // namespace aab
