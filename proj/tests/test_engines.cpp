#include <gtest/gtest.h>

#include <cmath>

#include "aab/aab.hpp"

using namespace aab;

namespace {

WorkerPool pool_of(std::vector<double> q, std::vector<double> c) { return WorkerPool{q, c, c}; }

EngineOptions opts(EngineKind kind, SolverKind solver, double alpha, double xi = 0.0, double mu = 0.05,
                   std::uint64_t seed = 0) {
    return EngineOptions{kind, solver, alpha, xi, mu, seed};
}

RunTrace trace_of(const WorkerPool& pool, const ErrorModel& model, const EngineOptions& o,
                  const SuccessRealization& rho) {
    RunConfig c;
    c.alpha = o.alpha;
    c.horizon = rho.horizon();
    return run_trace(pool, model, o, rho, c);
}

// Random pool whose full set meets alpha.
WorkerPool random_pool(Rng& rng, std::size_t n, const ErrorModel& model, double alpha) {
    for (;;) {
        WorkerPool p;
        for (std::size_t i = 0; i < n; ++i) {
            p.qualities.push_back(rng.uniform(0.6, 1.0));
            p.true_costs.push_back(rng.uniform(1.0, 10.0));
        }
        p.reported_costs = p.true_costs;
        if (model.evaluate(full_subset(n), p.qualities) < alpha) return p;
    }
}

const WorkerPool kSplitPool = generate_feasible_split_pool(22, 7, HoeffdingError{}, 0.5);

} // namespace

TEST(EngineNames, RoundTrip) {
    for (auto k : {EngineKind::CcbNs, EngineKind::CcbS, EngineKind::CcbSe, EngineKind::EpsGreedy})
        EXPECT_EQ(engine_from_name(to_string(k)), k);
    try {
        engine_from_name("ccb-x");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownName);
    }
}

TEST(EngineOptions, Validation) {
    const auto pool = pool_of({0.9, 0.8}, {1, 1});
    EXPECT_THROW(Engine(pool, WorstCaseError{}, opts(EngineKind::CcbS, SolverKind::Exact, 0.1, 0.1)), Error);
    EXPECT_THROW(Engine(pool, WorstCaseError{}, opts(EngineKind::CcbSe, SolverKind::Exact, 0.1)), Error);
    EXPECT_THROW(Engine(pool, WorstCaseError{}, opts(EngineKind::CcbS, SolverKind::Greedy, 0.1)), Error);
    EXPECT_NO_THROW(Engine(pool, HoeffdingError{}, opts(EngineKind::CcbSe, SolverKind::Greedy, 0.9)));
    EXPECT_DOUBLE_EQ(opts(EngineKind::CcbS, SolverKind::Exact, 0.1, 0.05).ucb_alpha(), 0.05);
}

TEST(CcbS, FirstRoundAndEveryExplorationRoundTakeEveryone) {
    const auto pool = kSplitPool;
    const auto rho = draw_realization(pool, 3000, 5);
    const auto tr = trace_of(pool, HoeffdingError{}, opts(EngineKind::CcbS, SolverKind::Greedy, 0.5, 0.05), rho);
    EXPECT_EQ(tr.rounds.front().selected, full_subset(pool.size()));
    for (const auto& r : tr.rounds) {
        if (r.exploring) {
            ASSERT_EQ(r.selected, full_subset(pool.size()));
            ASSERT_TRUE(r.constraint_ok_true_q);  // full pool is feasible
        }
    }
}

TEST(CcbS, CommitsOnceAndStaysPut) {
    const auto pool = kSplitPool;
    const auto rho = draw_realization(pool, 3000, 6);
    Engine e(pool, HoeffdingError{}, opts(EngineKind::CcbS, SolverKind::Greedy, 0.5, 0.05));
    std::optional<Subset> committed;
    std::vector<std::size_t> pulls_at_commit;
    for (std::size_t t = 1; t <= rho.horizon(); ++t) {
        const auto rec = e.step(rho);
        if (e.state().phase == Phase::Exploiting) {
            if (!committed) {
                committed = rec.selected;
                EXPECT_EQ(*e.state().commit_round, t);
                EXPECT_EQ(*e.state().committed_set, rec.selected);
                for (std::size_t i = 0; i < pool.size(); ++i) pulls_at_commit.push_back(e.state().estimates.pulls(WorkerId{i}));
            }
            ASSERT_EQ(rec.selected, *committed);
            ASSERT_FALSE(rec.exploring);
        }
    }
    ASSERT_TRUE(committed.has_value());
    // Exploitation reads labels only.
    for (std::size_t i = 0; i < pool.size(); ++i)
        EXPECT_EQ(e.state().estimates.pulls(WorkerId{i}), pulls_at_commit[i]);
}

TEST(CcbNs, CommittedRunRepeatsCommittedSet) {
    const auto pool = kSplitPool;
    const auto rho = draw_realization(pool, 3000, 7);
    const auto tr = trace_of(pool, HoeffdingError{}, opts(EngineKind::CcbNs, SolverKind::Greedy, 0.5, 0.05), rho);
    ASSERT_TRUE(tr.commit_round.has_value());
    const auto& set = tr.rounds[*tr.commit_round - 1].selected;
    for (std::size_t t = *tr.commit_round; t <= tr.rounds.size(); ++t) ASSERT_EQ(tr.rounds[t - 1].selected, set);
}

TEST(CcbNs, ExplorationRoundsMeetTheLowerBoundConstraint) {
    // Augmentation makes each exploration set certifiable on the LCB profile
    // whenever the whole pool is.
    const auto pool = kSplitPool;
    const ErrorModel model = HoeffdingError{};
    const auto rho = draw_realization(pool, 1500, 8);
    Engine e(pool, model, opts(EngineKind::CcbNs, SolverKind::Greedy, 0.5, 0.05));
    std::size_t checked = 0;
    for (std::size_t t = 1; t <= rho.horizon() && e.state().phase == Phase::Exploring; ++t) {
        const auto lower = e.state().estimates.lower_profile();
        const auto rec = e.step(rho);
        if (t > 1 && rec.exploring && model.evaluate(full_subset(pool.size()), lower) < 0.5) {
            ASSERT_LT(model.evaluate(rec.selected, lower), 0.5);
            ++checked;
        }
    }
    EXPECT_GT(checked, 0u);
}

TEST(CcbNs, TwoWorkerCommitWithinBound) {
    // w0 perfect, w1 at 0.6; worst-case model with alpha 0.3 gives Delta 0.1.
    const auto pool = pool_of({1.0, 0.6}, {1, 1});
    const ErrorModel model = WorstCaseError{};
    const double alpha = 0.3, mu = 0.05;
    auto rho = draw_realization(pool, 5000, 1);
    for (std::size_t t = 1; t <= rho.horizon(); ++t) rho.set_correct(WorkerId{0}, t, true);
    const double delta = compute_delta_separation(model, pool.qualities, alpha).delta;
    EXPECT_NEAR(delta, 0.1, 1e-12);
    const auto bounds = exploration_bound(2, mu, model, delta);
    Engine e(pool, model, opts(EngineKind::CcbNs, SolverKind::Exact, alpha, 0.0, mu));
    for (std::size_t t = 1; t <= rho.horizon(); ++t) e.step(rho);
    ASSERT_TRUE(e.state().commit_round.has_value());
    EXPECT_LE(static_cast<double>(*e.state().commit_round), bounds.ccb_ns);
    EXPECT_LE(static_cast<double>(e.state().estimates.pulls(WorkerId{0})), std::ceil(bounds.ccb_s));
    EXPECT_EQ(*e.state().committed_set, Subset{WorkerId{0}});
}

TEST(CcbSe, RequiresKnapsackModel) {
    EXPECT_THROW(Engine(kSplitPool, WorstCaseError{}, opts(EngineKind::CcbSe, SolverKind::Greedy, 0.5)), Error);
}

TEST(CcbSe, EliminatesDominatedWorkersAndNeverReselects) {
    const auto pool = kSplitPool;
    const auto rho = draw_realization(pool, 3000, 9);
    const auto tr = trace_of(pool, HoeffdingError{}, opts(EngineKind::CcbSe, SolverKind::Greedy, 0.5, 0.05), rho);
    ASSERT_FALSE(tr.eliminated.empty());
    // The first half of the pool is the dominated block (cost 20, quality 2/3).
    std::size_t dominated = 0;
    for (auto w : tr.eliminated) dominated += w.value < 12 ? 1 : 0;
    EXPECT_GT(dominated, 0u);
    std::vector<std::optional<std::size_t>> gone(pool.size());
    Engine e(pool, HoeffdingError{}, opts(EngineKind::CcbSe, SolverKind::Greedy, 0.5, 0.05));
    for (std::size_t t = 1; t <= rho.horizon(); ++t) {
        const auto rec = e.step(rho);
        for (auto w : rec.selected) ASSERT_FALSE(gone[w.value].has_value()) << "worker " << w.value << " round " << t;
        for (auto w : e.state().eliminated)
            if (!gone[w.value]) gone[w.value] = t;
    }
    if (e.state().committed_set)
        for (auto w : *e.state().committed_set) EXPECT_FALSE(contains(e.state().eliminated, w));
}

TEST(CcbSe, CheaperThanCcbSDuringExploration) {
    const auto pool = kSplitPool;
    const auto rho = draw_realization(pool, 3000, 10);
    const auto s = trace_of(pool, HoeffdingError{}, opts(EngineKind::CcbS, SolverKind::Greedy, 0.5, 0.05), rho);
    const auto se = trace_of(pool, HoeffdingError{}, opts(EngineKind::CcbSe, SolverKind::Greedy, 0.5, 0.05), rho);
    double cs = 0, cse = 0;
    for (std::size_t t = 0; t < 300; ++t) {
        cs += s.rounds[t].round_cost;
        cse += se.rounds[t].round_cost;
    }
    EXPECT_LT(cse, cs);
}

TEST(CcbSe, NoEliminationMeansSameAsCcbS) {
    // Identical workers: nothing can be dominated.
    const auto pool = pool_of(std::vector<double>(6, 0.9), std::vector<double>(6, 2.0));
    const auto rho = draw_realization(pool, 800, 11);
    const auto s = trace_of(pool, HoeffdingError{}, opts(EngineKind::CcbS, SolverKind::Greedy, 0.5), rho);
    const auto se = trace_of(pool, HoeffdingError{}, opts(EngineKind::CcbSe, SolverKind::Greedy, 0.5), rho);
    EXPECT_TRUE(se.eliminated.empty());
    for (std::size_t t = 0; t < s.rounds.size(); ++t) ASSERT_EQ(s.rounds[t].selected, se.rounds[t].selected);
}

TEST(EpsGreedy, Schedule) {
    EXPECT_EQ(epsilon_schedule(1), 1.0);
    EXPECT_EQ(epsilon_schedule(100), 1.0);
    EXPECT_DOUBLE_EQ(epsilon_schedule(200), 0.5);
    EXPECT_DOUBLE_EQ(epsilon_schedule(10000), 0.01);
}

TEST(EpsGreedy, AlwaysExploresEarly) {
    const auto pool = kSplitPool;
    const auto rho = draw_realization(pool, 400, 12);
    const auto tr = trace_of(pool, HoeffdingError{}, opts(EngineKind::EpsGreedy, SolverKind::Greedy, 0.5, 0.0, 0.05, 3), rho);
    for (std::size_t t = 0; t < 100; ++t) ASSERT_EQ(tr.rounds[t].selected, full_subset(pool.size()));
    std::size_t explored = 0;
    for (std::size_t t = 100; t < 400; ++t) explored += tr.rounds[t].exploring;
    EXPECT_GT(explored, 50u);
    EXPECT_LT(explored, 250u);
}

TEST(EpsGreedy, ExploitsTheTrueOptimumWhenEstimatesAreExact) {
    // Perfect workers: every empirical mean is exactly 1.
    const std::vector<double> c{5, 1, 3, 2, 4, 6};
    const auto pool = pool_of(std::vector<double>(6, 1.0), c);
    const auto rho = draw_realization(pool, 2000, 13);
    const double alpha = std::exp(-3.5 / 6.0);  // demand 3.5: four workers
    const auto tr = trace_of(pool, HoeffdingError{}, opts(EngineKind::EpsGreedy, SolverKind::Greedy, alpha, 0, 0.05, 1), rho);
    const auto best = solve_exact(HoeffdingError{}, pool.qualities, c, alpha);
    std::size_t exploited = 0;
    for (const auto& r : tr.rounds)
        if (!r.exploring) {
            ++exploited;
            ASSERT_EQ(r.selected, *best);
        }
    EXPECT_GT(exploited, 1000u);
}

TEST(EpsGreedy, LearnsEveryRound) {
    const auto pool = kSplitPool;
    const auto rho = draw_realization(pool, 600, 14);
    Engine e(pool, HoeffdingError{}, opts(EngineKind::EpsGreedy, SolverKind::Greedy, 0.5, 0, 0.05, 2));
    std::vector<std::size_t> pulls(pool.size(), 0);
    for (std::size_t t = 1; t <= rho.horizon(); ++t) {
        const auto rec = e.step(rho);
        for (auto w : rec.selected) ++pulls[w.value];
    }
    for (std::size_t i = 0; i < pool.size(); ++i) EXPECT_EQ(e.state().estimates.pulls(WorkerId{i}), pulls[i]);
}

TEST(Engines, RoundRecordBookkeeping) {
    const auto pool = kSplitPool;
    const auto rho = draw_realization(pool, 500, 15);
    for (auto kind : {EngineKind::CcbNs, EngineKind::CcbS, EngineKind::CcbSe, EngineKind::EpsGreedy}) {
        const auto tr = trace_of(pool, HoeffdingError{}, opts(kind, SolverKind::Greedy, 0.5, 0.05, 0.05, 4), rho);
        ASSERT_EQ(tr.rounds.size(), 500u);
        for (const auto& r : tr.rounds) {
            ASSERT_FALSE(r.selected.empty());
            ASSERT_DOUBLE_EQ(r.round_cost, subset_cost(r.selected, pool.reported_costs));
            ASSERT_EQ(r.truth, rho.truth(r.round));
            std::vector<Label> labels;
            for (auto w : r.selected) labels.push_back(rho.reported_label(w, r.round));
            ASSERT_EQ(r.predicted, aggregate_majority(labels));
            ASSERT_EQ(r.constraint_ok_true_q,
                      ErrorModel(HoeffdingError{}).evaluate(r.selected, pool.qualities) < 0.5);
        }
    }
}

TEST(Engines, Deterministic) {
    const auto pool = kSplitPool;
    const auto rho = draw_realization(pool, 800, 16);
    for (auto kind : {EngineKind::CcbNs, EngineKind::CcbS, EngineKind::CcbSe, EngineKind::EpsGreedy}) {
        const auto o = opts(kind, SolverKind::Greedy, 0.5, 0.05, 0.05, 5);
        const auto a = trace_of(pool, HoeffdingError{}, o, rho);
        const auto b = trace_of(pool, HoeffdingError{}, o, rho);
        for (std::size_t t = 0; t < a.rounds.size(); ++t) ASSERT_EQ(a.rounds[t].selected, b.rounds[t].selected);
        EXPECT_EQ(a.commit_round, b.commit_round);
    }
}

TEST(Engines, UnselectedEntriesAreNeverRead) {
    const auto pool = kSplitPool;
    const auto rho = draw_realization(pool, 1500, 17);
    for (auto kind : {EngineKind::CcbNs, EngineKind::CcbS, EngineKind::CcbSe, EngineKind::EpsGreedy}) {
        const auto o = opts(kind, SolverKind::Greedy, 0.5, 0.05, 0.05, 6);
        const auto base = trace_of(pool, HoeffdingError{}, o, rho);
        auto tampered = rho;
        std::size_t flipped = 0;
        for (const auto& r : base.rounds)
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (!contains(r.selected, WorkerId{i})) {
                    tampered.set_correct(WorkerId{i}, r.round, !rho.correct(WorkerId{i}, r.round));
                    ++flipped;
                }
        const auto again = trace_of(pool, HoeffdingError{}, o, tampered);
        for (std::size_t t = 0; t < base.rounds.size(); ++t) {
            ASSERT_EQ(base.rounds[t].selected, again.rounds[t].selected);
            ASSERT_EQ(base.rounds[t].predicted, again.rounds[t].predicted);
        }
        EXPECT_EQ(base.commit_round, again.commit_round);
        if (kind != EngineKind::CcbS) EXPECT_GT(flipped, 0u) << to_string(kind);
    }
}

TEST(Engines, ConstraintSafetyWithExactSolver) {
    // Violating rounds stay within mu over many seeded runs.
    Rng rng(18);
    const ErrorModel model = WorstCaseError{};
    const double mu = 0.05;
    std::size_t rounds = 0, violations = 0;
    for (int run = 0; run < 200; ++run) {
        const double alpha = 0.15;
        const auto pool = random_pool(rng, 4, model, alpha);
        const auto rho = draw_realization(pool, 400, 1000 + run);
        for (auto kind : {EngineKind::CcbNs, EngineKind::CcbS}) {
            const auto tr = trace_of(pool, model, opts(kind, SolverKind::Exact, alpha, 0.0, mu), rho);
            for (const auto& r : tr.rounds) {
                ++rounds;
                violations += !r.constraint_ok_true_q;
            }
        }
    }
    EXPECT_LE(static_cast<double>(violations), mu * static_cast<double>(rounds));
}

TEST(Engines, CommittedSetIsOptimalWithExactSolver) {
    Rng rng(19);
    const ErrorModel model = WorstCaseError{};
    const double mu = 0.05;
    std::size_t committed = 0, wrong = 0;
    for (int run = 0; run < 300; ++run) {
        const double alpha = 0.15;
        const auto pool = random_pool(rng, 4, model, alpha);
        if (compute_delta_separation(model, pool.qualities, alpha).delta < 0.03) continue;
        const auto rho = draw_realization(pool, 3000, 2000 + run);
        Engine e(pool, model, opts(EngineKind::CcbS, SolverKind::Exact, alpha, 0.0, mu));
        while (e.state().phase == Phase::Exploring && e.state().round < rho.horizon()) e.step(rho);
        if (!e.state().committed_set) continue;
        ++committed;
        const auto best = solve_exact(model, pool.qualities, pool.reported_costs, alpha);
        if (std::abs(subset_cost(*e.state().committed_set, pool.reported_costs) -
                     subset_cost(*best, pool.reported_costs)) > 1e-9)
            ++wrong;
    }
    ASSERT_GT(committed, 50u);
    EXPECT_LE(static_cast<double>(wrong), mu * static_cast<double>(committed));
}

TEST(Bounds, WorkedExample) {
    // n = 4, mu = 0.1, h^-1(Delta) = 0.1 under the worst-case model (Delta = 0.4).
    const ErrorModel model = WorstCaseError{};
    const auto b = exploration_bound(4, 0.1, model, 0.4);
    EXPECT_NEAR(b.ccb_ns, 8.0 / 0.01 * std::log(80.0), 1e-6);
    EXPECT_NEAR(b.ccb_ns, 3505.6, 0.05);
    EXPECT_NEAR(b.ccb_s, 876.4, 0.05);
    EXPECT_DOUBLE_EQ(b.range, b.ccb_s);
}

TEST(Bounds, RangeVariantAndErrors) {
    const ErrorModel model = HoeffdingError{};
    const auto b = exploration_bound(3, 0.05, model, 0.0, 0.1);  // h^-1(0.1) = 0.1
    EXPECT_TRUE(std::isinf(b.ccb_s));
    EXPECT_NEAR(b.range, std::log(120.0) / (16 * 0.01), 1e-9);
    try {
        exploration_bound(3, 0.05, model, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonPositiveDelta);
    }
    EXPECT_THROW(regret_lower_bound(100, 3, model, 0.0), Error);
    EXPECT_NEAR(regret_lower_bound(100, 3, model, 0.1), std::log(100.0) / 0.01, 1e-9);
}
