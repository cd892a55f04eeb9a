#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aab/core.hpp"
#include "aab/engines.hpp"
#include "aab/realization.hpp"

namespace aab {

struct RunTrace {
    std::string engine;
    RunConfig config;
    std::vector<RoundRecord> rounds;  // t = 1..T
    std::optional<std::size_t> commit_round;
    Subset eliminated;
};

inline RunTrace run_trace(const WorkerPool& pool, const ErrorModel& model, const EngineOptions& options,
                          const SuccessRealization& rho, const RunConfig& config) {
    Engine engine(pool, model, options);
    RunTrace trace;
    trace.engine = std::string(to_string(options.kind));
    trace.config = config;
    trace.rounds.reserve(rho.horizon());
    for (std::size_t t = 1; t <= rho.horizon(); ++t) trace.rounds.push_back(engine.step(rho));
    trace.commit_round = engine.state().commit_round;
    trace.eliminated = engine.state().eliminated;
    return trace;
}

// Tasks allocated to each worker over the horizon. Confidence engines stop
// replaying at commitment: the remaining rounds all take the committed set.
struct AllocationReplay {
    std::vector<std::size_t> counts;
    std::optional<std::size_t> commit_round;
    std::optional<Subset> committed_set;
};

inline AllocationReplay replay_allocation(const WorkerPool& pool, const ErrorModel& model,
                                          const EngineOptions& options, const SuccessRealization& rho) {
    Engine engine(pool, model, options);
    AllocationReplay out;
    out.counts.assign(pool.size(), 0);
    const std::size_t horizon = rho.horizon();
    for (std::size_t t = 1; t <= horizon; ++t) {
        const RoundRecord rec = engine.step(rho);
        for (auto w : rec.selected) ++out.counts[w.value];
        if (options.kind != EngineKind::EpsGreedy && engine.state().phase == Phase::Exploiting) {
            out.commit_round = engine.state().commit_round;
            out.committed_set = engine.state().committed_set;
            for (auto w : *out.committed_set) out.counts[w.value] += horizon - t;
            break;
        }
    }
    return out;
}

} // namespace aab
