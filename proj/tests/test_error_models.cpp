#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "aab/aab.hpp"
#include "oracles.hpp"

using namespace aab;

namespace {

constexpr Label P = Label::Positive;
constexpr Label N = Label::Negative;

Label vote(std::vector<Label> v) { return aggregate_majority(v); }

Subset first_k(std::size_t k) { return full_subset(k); }

} // namespace

TEST(Majority, Examples) {
    EXPECT_EQ(vote({P, P, N}), P);
    EXPECT_EQ(vote({N, N, N}), N);
    EXPECT_EQ(vote({P, N}), N);  // tie
    EXPECT_THROW(vote({}), Error);
}

TEST(Majority, PermutationInvariant) {
    Rng rng(17);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<Label> v(1 + rng.index(9));
        for (auto& l : v) l = rng.bernoulli(0.5) ? P : N;
        const Label base = vote(v);
        std::sort(v.begin(), v.end());
        do {
            ASSERT_EQ(vote(v), base);
        } while (v.size() <= 5 && std::next_permutation(v.begin(), v.end()));
    }
}

TEST(WorstCase, Examples) {
    EXPECT_NEAR(worst_case_error({WorkerId{0}}, std::vector<double>{0.8}), 0.2, 1e-12);
    EXPECT_NEAR(worst_case_error(first_k(3), std::vector<double>{0.6, 0.7, 0.9}), 0.12, 1e-12);
    EXPECT_EQ(worst_case_error(first_k(3), std::vector<double>{1.0, 1.0, 1.0}), 0.0);
    EXPECT_THROW(worst_case_error({}, std::vector<double>{0.8}), Error);
}

TEST(WorstCase, OrderOfMembersIrrelevant) {
    EXPECT_NEAR(worst_case_error(first_k(3), std::vector<double>{0.9, 0.6, 0.7}), 0.12, 1e-12);
}

TEST(Hoeffding, Examples) {
    EXPECT_DOUBLE_EQ(hoeffding_error({WorkerId{0}}, std::vector<double>{0.5}, 0.3), 1.0);
    EXPECT_NEAR(hoeffding_error({WorkerId{0}}, std::vector<double>{2.0 / 3.0}), std::exp(-1.0 / 18.0), 1e-12);
    EXPECT_NEAR(hoeffding_error({WorkerId{0}}, std::vector<double>{2.0 / 3.0}), 0.9460, 5e-5);
    EXPECT_NEAR(hoeffding_error(first_k(3), std::vector<double>(3, 2.0 / 3.0)), 0.8465, 5e-5);
    EXPECT_THROW(hoeffding_error({}, std::vector<double>{0.8}), Error);
}

TEST(Hoeffding, DemandMatchesThreshold) {
    const HoeffdingError h;
    EXPECT_NEAR(h.demand(0.1), 6.0 * std::log(10.0), 1e-12);
    // Weight exactly at the demand sits on the boundary f = alpha.
    const double M = h.demand(0.25);
    EXPECT_NEAR(std::exp(-M / 6.0), 0.25, 1e-12);
}

TEST(Smoothness, Examples) {
    const auto wc = ErrorModel::from_name("worst_case");
    const auto hf = ErrorModel::from_name("hoeffding");
    EXPECT_NEAR(smoothness_h(wc, 0.05, 4), 0.20, 1e-12);
    EXPECT_NEAR(smoothness_h_inv(hf, 0.1, 3), 0.1, 1e-12);
    EXPECT_NEAR(smoothness_h(hf, 0.1, 3), 0.1, 1e-12);
    EXPECT_THROW(smoothness_h(wc, 0.0, 4), Error);
    EXPECT_THROW(smoothness_h_inv(hf, -1.0, 4), Error);
}

TEST(Smoothness, WorstCaseBoundHoldsEmpirically) {
    // n = 4, delta = 0.05: no perturbed pair may move f by more than 0.2.
    Rng rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 100000; ++trial) {
        std::vector<double> q(4), r(4);
        for (int i = 0; i < 4; ++i) {
            q[i] = rng.uniform(0.5, 1.0);
            r[i] = std::clamp(q[i] + rng.uniform(-0.05, 0.05), 0.5, 1.0);
        }
        worst = std::max(worst, std::abs(oracle::worst_case(q) - oracle::worst_case(r)));
    }
    EXPECT_LE(worst, 0.2);
}

TEST(ModelByName, UnknownName) {
    try {
        ErrorModel::from_name("median");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownName);
    }
    EXPECT_THROW(ErrorModel::from_name("hoeffding", 0.0), Error);
    EXPECT_EQ(ErrorModel::from_name("hoeffding").name(), "hoeffding");
    EXPECT_TRUE(ErrorModel::from_name("hoeffding").knapsack_form().has_value());
    EXPECT_FALSE(ErrorModel::from_name("worst_case").knapsack_form().has_value());
}

TEST(DeltaSeparation, TwoWorkerExample) {
    // f values {0.2, 0.1, 0.2} around alpha = 0.15.
    const auto d = compute_delta_separation(WorstCaseError{}, std::vector<double>{0.8, 0.9}, 0.15);
    EXPECT_NEAR(d.delta, 0.05, 1e-12);
}

TEST(DeltaSeparation, OneSidedAndBoundary) {
    const std::vector<double> q{0.8, 0.9};
    const auto below = compute_delta_separation(WorstCaseError{}, q, 0.01);
    EXPECT_NEAR(below.delta, 0.1 - 0.01, 1e-12);
    EXPECT_EQ((below.closest), (Subset{WorkerId{1}}));
    // {w0} alone has error exactly 0.5.
    EXPECT_EQ(compute_delta_separation(WorstCaseError{}, std::vector<double>{0.5, 0.9, 0.9}, 0.5).delta, 0.0);
}

TEST(DeltaSeparation, MatchesIndependentEnumeration) {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(8);
        std::vector<double> q(n);
        for (auto& x : q) x = rng.uniform(0.5, 1.0);
        const double alpha = rng.uniform(0.01, 0.9);
        double best = 1e9;
        for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
            std::vector<double> m;
            for (std::size_t i = 0; i < n; ++i)
                if (mask >> i & 1u) m.push_back(q[i]);
            best = std::min(best, std::abs(oracle::hoeffding(m) - alpha));
        }
        ASSERT_NEAR(compute_delta_separation(HoeffdingError{}, q, alpha).delta, best, 1e-12);
    }
}

TEST(DeltaSeparation, PoolTooLarge) {
    try {
        compute_delta_separation(WorstCaseError{}, std::vector<double>(21, 0.8), 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PoolTooLarge);
    }
}

// ---- property suites (10^4 trials each) ----------------------------------------

class ModelProperties : public ::testing::TestWithParam<std::string> {
protected:
    ErrorModel model = ErrorModel::from_name(GetParam());
};

TEST_P(ModelProperties, RaisingAQualityNeverRaisesError) {
    Rng rng(1001);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 1 + rng.index(12);
        std::vector<double> q(n);
        for (auto& x : q) x = rng.uniform(0.5, 1.0);
        Subset s;
        for (std::size_t i = 0; i < n; ++i)
            if (rng.bernoulli(0.6)) s.push_back(WorkerId{i});
        if (s.empty()) s.push_back(WorkerId{rng.index(n)});
        const double before = model.evaluate(s, q);
        const std::size_t i = rng.index(n);
        q[i] = rng.uniform(q[i], 1.0);
        ASSERT_LE(model.evaluate(s, q), before + 1e-15);
    }
}

TEST_P(ModelProperties, BoundedSmoothness) {
    Rng rng(1002);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 1 + rng.index(12);
        const double delta = rng.uniform(1e-4, 0.5);
        std::vector<double> q(n), r(n);
        double gap = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = rng.uniform(0.5, 1.0);
            r[i] = std::clamp(q[i] + rng.uniform(-delta, delta), 0.5, 1.0);
            gap = std::max(gap, std::abs(q[i] - r[i]));
        }
        Subset s;
        for (std::size_t i = 0; i < n; ++i)
            if (rng.bernoulli(0.6)) s.push_back(WorkerId{i});
        if (s.empty()) s.push_back(WorkerId{0});
        if (gap == 0.0) continue;
        ASSERT_LE(std::abs(model.evaluate(s, q) - model.evaluate(s, r)), model.smoothness(gap, n) + 1e-12);
    }
}

TEST_P(ModelProperties, InverseIdentityAndStrictIncrease) {
    Rng rng(1003);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 1 + rng.index(1000);
        const double d = rng.uniform(1e-6, 1.0);
        ASSERT_NEAR(model.smoothness_inverse(model.smoothness(d, n), n), d, 1e-9);
        ASSERT_LT(model.smoothness(d, n), model.smoothness(d * 1.001, n));
    }
}

TEST_P(ModelProperties, RangeAndOracleAgreement) {
    Rng rng(1004);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 1 + rng.index(10);
        std::vector<double> q(n);
        for (auto& x : q) x = rng.uniform(0.5, 1.0);
        const double f = model.evaluate(full_subset(n), q);
        const double ref = GetParam() == "worst_case" ? oracle::worst_case(q) : oracle::hoeffding(q);
        ASSERT_NEAR(f, ref, 1e-12);
        ASSERT_GE(f, 0.0);
        ASSERT_LE(f, 1.0);
        if (GetParam() == "hoeffding") ASSERT_GT(f, 0.0);
    }
}

INSTANTIATE_TEST_SUITE_P(Models, ModelProperties, ::testing::Values("worst_case", "hoeffding"));
