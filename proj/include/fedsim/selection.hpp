#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class SelectionRule { all, poisson_2lambda, poisson_lambda_floor50 };

inline std::string to_string(SelectionRule r) {
    switch (r) {
        case SelectionRule::all: return "all";
        case SelectionRule::poisson_2lambda: return "poisson_2lambda";
        case SelectionRule::poisson_lambda_floor50: return "poisson_lambda_floor50";
    }
    return "?";
}

inline SelectionRule selection_rule_from_string(const std::string& s) {
    if (s == "all") return SelectionRule::all;
    if (s == "poisson_2lambda") return SelectionRule::poisson_2lambda;
    if (s == "poisson_lambda_floor50") return SelectionRule::poisson_lambda_floor50;
    throw ConfigError("unknown selection rule: " + s);
}

struct SelectionPolicy {
    SelectionRule rule = SelectionRule::all;
    double lambda_estimate = 1.0;  // fitted from dataset sizes
    // Every this many rounds all clients participate regardless of size;
    // 0 means never.
    int include_outliers_every = 0;

    void validate() const {
        if (!(lambda_estimate > 0.0))
            throw ConfigError("selection: lambda_estimate must be positive");
        if (include_outliers_every < 0)
            throw ConfigError("selection: include_outliers_every must be >= 0");
    }
};

// Maximum-likelihood Poisson fit: the sample mean.
inline double fit_lambda(const std::vector<std::size_t>& sizes) {
    if (sizes.empty()) throw ConfigError("fit_lambda: empty size list");
    double sum = 0.0;
    for (std::size_t s : sizes) sum += static_cast<double>(s);
    return sum / static_cast<double>(sizes.size());
}

struct ClientSize {
    int id;
    std::size_t size;
};

// Deterministic participant choice for one round. The rng stream is reserved
// for future stochastic policies; the shipped rules ignore it.
inline std::vector<int> select(const SelectionPolicy& policy,
                               const std::vector<ClientSize>& clients, int round,
                               RngStream& /*rng*/) {
    policy.validate();
    if (clients.empty()) throw ConfigError("select: empty client list");

    auto all_ids = [&] {
        std::vector<int> ids;
        ids.reserve(clients.size());
        for (const auto& c : clients) ids.push_back(c.id);
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    if (policy.rule == SelectionRule::all) return all_ids();
    if (policy.include_outliers_every > 0 && round % policy.include_outliers_every == 0)
        return all_ids();

    const double threshold = policy.rule == SelectionRule::poisson_2lambda
                                 ? 2.0 * policy.lambda_estimate
                                 : policy.lambda_estimate;
    std::vector<int> ids;
    std::vector<ClientSize> excluded;
    for (const auto& c : clients) {
        if (static_cast<double>(c.size) <= threshold)
            ids.push_back(c.id);
        else
            excluded.push_back(c);
    }

    if (policy.rule == SelectionRule::poisson_lambda_floor50) {
        const std::size_t floor = (clients.size() + 1) / 2;  // ceil(n/2)
        std::sort(excluded.begin(), excluded.end(), [](const ClientSize& a, const ClientSize& b) {
            return a.size != b.size ? a.size < b.size : a.id < b.id;
        });
        for (std::size_t i = 0; ids.size() < floor && i < excluded.size(); ++i)
            ids.push_back(excluded[i].id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace fedsim
