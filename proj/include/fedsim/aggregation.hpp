#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/params.hpp"

namespace fedsim {

enum class Strategy { fed_avg, fed_cost_w_avg, fed_pid_avg, fed_pid };

inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::fed_avg: return "fed_avg";
        case Strategy::fed_cost_w_avg: return "fed_cost_w_avg";
        case Strategy::fed_pid_avg: return "fed_pid_avg";
        case Strategy::fed_pid: return "fed_pid";
    }
    return "?";
}

inline Strategy strategy_from_string(const std::string& s) {
    if (s == "fed_avg") return Strategy::fed_avg;
    if (s == "fed_cost_w_avg") return Strategy::fed_cost_w_avg;
    if (s == "fed_pid_avg") return Strategy::fed_pid_avg;
    if (s == "fed_pid") return Strategy::fed_pid;
    throw ConfigError("unknown strategy: " + s);
}

// Scope of the FedPID I-term ratio: per-client cost progress, or the mean
// cost across participants (which gives every client the same i-term).
enum class FedPidIScope { per_client, global_mean };

struct StrategyParams {
    Strategy strategy = Strategy::fed_avg;
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 0.0;
    int integral_window = 6;  // fed_pid_avg
    FedPidIScope i_scope = FedPidIScope::per_client;

    static StrategyParams fed_avg() { return {}; }
    static StrategyParams fed_cost_w_avg(double alpha = 0.5) {
        return {Strategy::fed_cost_w_avg, alpha, 1.0 - alpha, 0.0};
    }
    static StrategyParams fed_pid_avg(double a = 0.45, double b = 0.45, double g = 0.10) {
        return {Strategy::fed_pid_avg, a, b, g};
    }
    static StrategyParams fed_pid(double a = 0.45, double b = 0.45, double g = 0.10) {
        return {Strategy::fed_pid, a, b, g};
    }

    void validate() const {
        auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (!in01(alpha) || !in01(beta) || !in01(gamma))
            throw ConfigError("strategy: alpha, beta, gamma must be in [0,1]");
        switch (strategy) {
            case Strategy::fed_avg:
                break;
            case Strategy::fed_cost_w_avg:
                if (std::fabs(beta - (1.0 - alpha)) > 1e-9 || gamma != 0.0)
                    throw ConfigError("fed_cost_w_avg requires beta == 1-alpha and gamma == 0");
                break;
            case Strategy::fed_pid_avg:
            case Strategy::fed_pid:
                if (std::fabs(alpha + beta + gamma - 1.0) > 1e-9)
                    throw ConfigError("fed_pid_avg/fed_pid require alpha+beta+gamma == 1");
                if (integral_window < 1)
                    throw ConfigError("integral_window must be positive");
                break;
        }
    }
};

// One participating client's contribution to the aggregation step. The cost
// history's last entry is the current round's cost c(M_i^j); the entry before
// it is the most recent previous cost (possibly stale under selection).
struct ClientAggInput {
    int id = 0;
    std::size_t size = 0;  // s_j
    ParameterVector model;
    std::vector<CostEntry> cost_history;
    std::optional<double> baseline_cost;  // c(M_1^j), fed_pid only
};

struct AggregationInput {
    std::vector<ClientAggInput> clients;
    int round = 0;
};

struct WeightEntry {
    int id = 0;
    double weight = 0.0;
    double p_term = 0.0;
    double d_term = 0.0;
    double i_term = 0.0;
};

struct AggregationWeights {
    std::vector<WeightEntry> entries;
};

namespace detail {

// All costs pass through this floor before any ratio so that a perfectly fit
// client gets a large-but-finite weight.
constexpr double kCostFloor = 1e-12;

inline double clamp_cost(double c) { return std::max(c, kCostFloor); }

inline void validate_agg_input(const AggregationInput& input) {
    if (input.clients.empty()) throw DimensionError("aggregation: no clients");
    const std::size_t len = input.clients[0].model.size();
    for (const auto& c : input.clients) {
        if (c.model.size() != len) throw DimensionError("aggregation: model length mismatch");
        if (c.size == 0) throw ConfigError("aggregation: client size must be positive");
    }
}

inline std::vector<double> size_shares(const AggregationInput& input) {
    double total = 0.0;
    for (const auto& c : input.clients) total += static_cast<double>(c.size);
    std::vector<double> p;
    p.reserve(input.clients.size());
    for (const auto& c : input.clients) p.push_back(static_cast<double>(c.size) / total);
    return p;
}

// True when no participant has a previous cost to difference against; the
// D term then degrades to a uniform share. A client missing history while
// others have it is a protocol violation, not a bootstrap.
inline bool d_bootstrap(const AggregationInput& input) {
    bool any_full = false, any_short = false;
    for (const auto& c : input.clients) {
        (c.cost_history.size() >= 2 ? any_full : any_short) = true;
    }
    if (any_full && any_short)
        throw ProtocolError("aggregation: client missing cost history in non-bootstrap round");
    return any_short;
}

inline double current_cost(const ClientAggInput& c) {
    if (c.cost_history.empty())
        throw ProtocolError("aggregation: client has no recorded cost");
    return c.cost_history.back().cost;
}

inline double previous_cost(const ClientAggInput& c) {
    return c.cost_history[c.cost_history.size() - 2].cost;
}

}  // namespace detail

// w_j = s_j / S.
inline AggregationWeights fed_avg_weights(const AggregationInput& input) {
    detail::validate_agg_input(input);
    const std::vector<double> p = detail::size_shares(input);
    AggregationWeights w;
    for (std::size_t j = 0; j < input.clients.size(); ++j)
        w.entries.push_back({input.clients[j].id, p[j], p[j], 0.0, 0.0});
    return w;
}

// w_j = alpha * s_j/S + (1-alpha) * k_j/K with k_j the cost ratio
// c(M_{i-1}^j) / c(M_i^j).
inline AggregationWeights fed_cost_w_avg_weights(const AggregationInput& input,
                                                 const StrategyParams& params) {
    detail::validate_agg_input(input);
    params.validate();
    const std::size_t n = input.clients.size();
    const std::vector<double> p = detail::size_shares(input);

    std::vector<double> d(n, 1.0 / static_cast<double>(n));
    if (!detail::d_bootstrap(input)) {
        std::vector<double> k(n);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const auto& c = input.clients[j];
            k[j] = detail::clamp_cost(detail::previous_cost(c)) /
                   detail::clamp_cost(detail::current_cost(c));
            total += k[j];
        }
        for (std::size_t j = 0; j < n; ++j) d[j] = k[j] / total;
    }

    AggregationWeights w;
    for (std::size_t j = 0; j < n; ++j) {
        const double wj = params.alpha * p[j] + (1.0 - params.alpha) * d[j];
        w.entries.push_back({input.clients[j].id, wj, p[j], d[j], 0.0});
    }
    return w;
}

namespace detail {

// Shared D term of fed_pid_avg / fed_pid: difference form k_j =
// c(M_{i-1}^j) - c(M_i^j), clamped at 0; if nothing decreased the beta mass
// is spread uniformly.
inline std::vector<double> pid_d_shares(const AggregationInput& input) {
    const std::size_t n = input.clients.size();
    std::vector<double> d(n, 1.0 / static_cast<double>(n));
    if (d_bootstrap(input)) return d;
    std::vector<double> k(n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& c = input.clients[j];
        k[j] = std::max(previous_cost(c) - current_cost(c), 0.0);
        total += k[j];
    }
    if (total < kCostFloor) return d;
    for (std::size_t j = 0; j < n; ++j) d[j] = k[j] / total;
    return d;
}

}  // namespace detail

// w_j = alpha * s_j/S + beta * k_j/K + gamma * m_j/I with m_j the sum of the
// client's most recent recorded costs over the integral window.
inline AggregationWeights fed_pid_avg_weights(const AggregationInput& input,
                                              const StrategyParams& params) {
    detail::validate_agg_input(input);
    params.validate();
    const std::size_t n = input.clients.size();
    const std::vector<double> p = detail::size_shares(input);
    const std::vector<double> d = detail::pid_d_shares(input);

    std::vector<double> m(n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& hist = input.clients[j].cost_history;
        if (hist.empty()) throw ProtocolError("aggregation: client has no recorded cost");
        const std::size_t take = std::min<std::size_t>(hist.size(), params.integral_window);
        double sum = 0.0;
        for (std::size_t l = 0; l < take; ++l)
            sum += detail::clamp_cost(hist[hist.size() - 1 - l].cost);
        m[j] = sum;
        total += sum;
    }

    AggregationWeights w;
    for (std::size_t j = 0; j < n; ++j) {
        const double i_share = m[j] / total;
        const double wj = params.alpha * p[j] + params.beta * d[j] + params.gamma * i_share;
        w.entries.push_back({input.clients[j].id, wj, p[j], d[j], i_share});
    }
    return w;
}

// Like fed_pid_avg but m_j = c(M_1^j) / c(M_i^j): cost progress since the
// baseline round. Before the baseline exists (rounds 0-1) the gamma mass is
// uniform.
inline AggregationWeights fed_pid_weights(const AggregationInput& input,
                                          const StrategyParams& params) {
    detail::validate_agg_input(input);
    params.validate();
    const std::size_t n = input.clients.size();
    const std::vector<double> p = detail::size_shares(input);
    const std::vector<double> d = detail::pid_d_shares(input);

    std::vector<double> i_share(n, 1.0 / static_cast<double>(n));
    if (input.round >= 2) {
        if (params.i_scope == FedPidIScope::per_client) {
            std::vector<double> m(n);
            double total = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const auto& c = input.clients[j];
                if (!c.baseline_cost)
                    throw ProtocolError("fed_pid: missing baseline cost at round >= 2");
                m[j] = detail::clamp_cost(*c.baseline_cost) /
                       detail::clamp_cost(detail::current_cost(c));
                total += m[j];
            }
            for (std::size_t j = 0; j < n; ++j) i_share[j] = m[j] / total;
        }
        // global_mean: every m_j is the same ratio of mean costs, so each
        // i-share is exactly 1/n and the uniform initialization stands.
    }

    AggregationWeights w;
    for (std::size_t j = 0; j < n; ++j) {
        const double wj = params.alpha * p[j] + params.beta * d[j] + params.gamma * i_share[j];
        w.entries.push_back({input.clients[j].id, wj, p[j], d[j], i_share[j]});
    }
    return w;
}

inline AggregationWeights compute_weights(const AggregationInput& input,
                                          const StrategyParams& params) {
    switch (params.strategy) {
        case Strategy::fed_avg: return fed_avg_weights(input);
        case Strategy::fed_cost_w_avg: return fed_cost_w_avg_weights(input, params);
        case Strategy::fed_pid_avg: return fed_pid_avg_weights(input, params);
        case Strategy::fed_pid: return fed_pid_weights(input, params);
    }
    throw ConfigError("unknown strategy");
}

// M_{i+1} = sum_j w_j M_i^j under the selected strategy.
inline ParameterVector aggregate(const AggregationInput& input, const StrategyParams& params) {
    const AggregationWeights w = compute_weights(input, params);
    std::vector<ParameterVector> models;
    std::vector<double> weights;
    models.reserve(input.clients.size());
    weights.reserve(input.clients.size());
    for (std::size_t j = 0; j < input.clients.size(); ++j) {
        models.push_back(input.clients[j].model);
        weights.push_back(w.entries[j].weight);
    }
    return weighted_sum(models, weights);
}

}  // namespace fedsim
