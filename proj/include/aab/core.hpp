#pragma once

// Shared domain types: workers, labels, pools, run configuration, seeding.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace aab {

enum class ErrorCode {
    QualityOutOfRange,
    NegativeCost,
    LengthMismatch,
    EmptySet,
    NonPositiveArgument,
    PoolTooLarge,
    InfeasibleInstance,
    NonPositiveDelta,
    NonMonotoneAllocation,
    OracleUnavailable,
    ConfigParse,
    UnknownName,
    InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::QualityOutOfRange: return "QUALITY_OUT_OF_RANGE";
    case ErrorCode::NegativeCost: return "NEGATIVE_COST";
    case ErrorCode::LengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::EmptySet: return "EMPTY_SET";
    case ErrorCode::NonPositiveArgument: return "NON_POSITIVE_ARGUMENT";
    case ErrorCode::PoolTooLarge: return "POOL_TOO_LARGE";
    case ErrorCode::InfeasibleInstance: return "INFEASIBLE_INSTANCE";
    case ErrorCode::NonPositiveDelta: return "NON_POSITIVE_DELTA";
    case ErrorCode::NonMonotoneAllocation: return "NON_MONOTONE_ALLOCATION";
    case ErrorCode::OracleUnavailable: return "ORACLE_UNAVAILABLE";
    case ErrorCode::ConfigParse: return "CONFIG_PARSE";
    case ErrorCode::UnknownName: return "UNKNOWN_NAME";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct WorkerId {
    std::size_t value = 0;

    friend auto operator<=>(const WorkerId&, const WorkerId&) = default;
};

// Sorted ascending, no duplicates.
using Subset = std::vector<WorkerId>;

inline Subset full_subset(std::size_t n) {
    Subset s(n);
    for (std::size_t i = 0; i < n; ++i) s[i].value = i;
    return s;
}

inline double subset_cost(const Subset& s, std::span<const double> costs) {
    double total = 0.0;
    for (auto w : s) total += costs[w.value];
    return total;
}

inline bool contains(const Subset& s, WorkerId w) {
    auto it = std::lower_bound(s.begin(), s.end(), w);
    return it != s.end() && *it == w;
}

// Vote encoding is +1 / -1 so vote sums can be formed directly.
enum class Label : std::int8_t { Negative = -1, Positive = 1 };

inline Label flip(Label l) { return l == Label::Positive ? Label::Negative : Label::Positive; }

struct WorkerPool {
    std::vector<double> qualities;
    std::vector<double> true_costs;
    std::vector<double> reported_costs;

    std::size_t size() const { return qualities.size(); }

    // Same pool with one worker's report replaced.
    WorkerPool with_bid(WorkerId w, double bid) const {
        WorkerPool p = *this;
        p.reported_costs.at(w.value) = bid;
        return p;
    }
};

[[nodiscard]] inline std::optional<ErrorCode> validate_pool(const WorkerPool& pool) {
    const auto n = pool.qualities.size();
    if (n == 0 || pool.true_costs.size() != n || pool.reported_costs.size() != n)
        return ErrorCode::LengthMismatch;
    for (double q : pool.qualities)
        if (!(q >= 0.5 && q <= 1.0)) return ErrorCode::QualityOutOfRange;
    for (std::size_t i = 0; i < n; ++i)
        if (!(pool.true_costs[i] >= 0.0) || !(pool.reported_costs[i] >= 0.0))
            return ErrorCode::NegativeCost;
    return std::nullopt;
}

inline void require_valid(const WorkerPool& pool) {
    if (auto err = validate_pool(pool)) throw Error(*err, "invalid worker pool");
}

struct RunConfig {
    std::size_t n = 110;
    std::size_t horizon = 10000;
    double alpha = 0.1;
    double mu = 0.05;
    double xi = 0.0;
    std::uint64_t seed = 1;
    double prior_positive = 0.5;
    double penalty_L = 1000.0;
    double reward_R = 0.0;
    double cost_max = 20.0;

    // Instance and experiment settings.
    std::string model = "hoeffding";  // or worst_case
    std::string solver = "greedy";    // or exact
    std::uint64_t pool_seed = 7;
    std::vector<double> qualities;  // explicit pool when non-empty
    std::vector<double> costs;
    std::size_t replications = 100;
    double grid_resolution = 0.0;  // 0: one percent of cost_max

    double resolution() const { return grid_resolution > 0.0 ? grid_resolution : 0.01 * cost_max; }

    // Error threshold the optimistic (UCB) optimisation is solved against.
    // A target accuracy range (1-alpha, 1-alpha+xi) maps to alpha - xi.
    double ucb_alpha() const { return alpha - xi; }
};

inline void validate_config(const RunConfig& c) {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigParse, m); };
    if (c.n == 0) fail("n must be positive");
    if (c.horizon == 0) fail("horizon must be positive");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail("alpha must lie in (0,1)");
    if (!(c.mu > 0.0 && c.mu < 1.0)) fail("mu must lie in (0,1)");
    if (!(c.xi >= 0.0) || !(c.alpha - c.xi > 0.0)) fail("xi must satisfy 0 <= xi < alpha");
    if (!(c.prior_positive >= 0.0 && c.prior_positive <= 1.0)) fail("prior_positive must lie in [0,1]");
    if (!(c.penalty_L >= 0.0) || !(c.reward_R >= 0.0)) fail("penalty_L and reward_R must be non-negative");
    if (!(c.cost_max > 0.0)) fail("cost_max must be positive");
    if (c.model != "hoeffding" && c.model != "worst_case") fail("model must be hoeffding or worst_case");
    if (c.solver != "greedy" && c.solver != "exact") fail("solver must be greedy or exact");
    if (c.qualities.size() != c.costs.size()) fail("qualities and costs must have the same length");
    if (!c.qualities.empty() && c.qualities.size() != c.n) fail("n does not match the explicit pool");
    if (c.replications == 0) fail("replications must be positive");
    if (!(c.grid_resolution >= 0.0)) fail("grid_resolution must be non-negative");
}

// Flat key=value text; '#' starts a comment. Unknown keys are rejected.
inline RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::string line;
    std::size_t lineno = 0;
    bool seen_n = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const char* ws = " \t\r\n";
            auto b = s.find_first_not_of(ws);
            if (b == std::string::npos) return std::string{};
            auto e = s.find_last_not_of(ws);
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigParse, "line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::istringstream vs(value);
        auto bad = [&] {
            return Error(ErrorCode::ConfigParse, "line " + std::to_string(lineno) + ": bad value for '" + key + "'");
        };
        auto read = [&](auto& target) {
            if constexpr (std::is_unsigned_v<std::remove_reference_t<decltype(target)>>)
                if (value.starts_with('-')) throw bad();
            vs >> target;
            if (vs.fail() || !vs.eof()) throw bad();
        };
        auto read_list = [&](std::vector<double>& target) {
            target.clear();
            std::string item;
            while (std::getline(vs, item, ',')) {
                std::istringstream is(trim(item));
                double x = 0.0;
                is >> x;
                if (is.fail() || !is.eof()) throw bad();
                target.push_back(x);
            }
            if (target.empty()) throw bad();
        };
        if (key == "n") read(c.n), seen_n = true;
        else if (key == "horizon") read(c.horizon);
        else if (key == "alpha") read(c.alpha);
        else if (key == "mu") read(c.mu);
        else if (key == "xi") read(c.xi);
        else if (key == "seed") read(c.seed);
        else if (key == "prior_positive") read(c.prior_positive);
        else if (key == "penalty_L") read(c.penalty_L);
        else if (key == "reward_R") read(c.reward_R);
        else if (key == "cost_max") read(c.cost_max);
        else if (key == "model") read(c.model);
        else if (key == "solver") read(c.solver);
        else if (key == "pool_seed") read(c.pool_seed);
        else if (key == "qualities") read_list(c.qualities);
        else if (key == "costs") read_list(c.costs);
        else if (key == "replications") read(c.replications);
        else if (key == "grid_resolution") read(c.grid_resolution);
        else throw Error(ErrorCode::ConfigParse, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    // An explicit pool fixes n unless it is given.
    if (!seen_n && !c.qualities.empty()) c.n = c.qualities.size();
    validate_config(c);
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigParse, "cannot open config file '" + path + "'");
    return parse_config(in);
}

// ---- seeding ---------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent sub-stream seed per (purpose, index) so new consumers never
// shift existing draws.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : purpose) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(master ^ h) + index);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // 53-bit uniform in [0,1); portable across standard libraries.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    bool bernoulli(double p) { return uniform() < p; }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

private:
    std::mt19937_64 gen_;
};

} // namespace aab
