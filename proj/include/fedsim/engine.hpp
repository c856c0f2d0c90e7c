#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/params.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/selection.hpp"
#include "fedsim/tasks.hpp"

namespace fedsim {

// Whether the weighted sum covers only the round's participants or every
// client (non-participants contributing their stale local model).
enum class AggregateScope { participants, all_clients };

inline std::string to_string(AggregateScope s) {
    return s == AggregateScope::participants ? "participants" : "all_clients";
}

inline AggregateScope aggregate_scope_from_string(const std::string& s) {
    if (s == "participants") return AggregateScope::participants;
    if (s == "all_clients") return AggregateScope::all_clients;
    throw ConfigError("unknown aggregate_scope: " + s);
}

struct ClientRoundInfo {
    int id = 0;
    double cost = 0.0;
    double weight = 0.0;
    double p_term = 0.0;
    double d_term = 0.0;
    double i_term = 0.0;
};

// Everything observed in one federated round.
struct RoundRecord {
    int round = 0;
    std::vector<int> selected_ids;
    std::vector<ClientRoundInfo> clients;  // aggregation participants, id-ascending
    double global_loss = 0.0;
    long wall_time_ms = 0;
};

struct SimulationConfig {
    Task task;
    int n_clients = 10;
    double lambda = 50.0;
    double heterogeneity = 0.0;
    int rounds = 50;
    std::size_t test_size = 256;
    double noise_std = 0.1;
    StrategyParams strategy;
    SelectionRule selection_rule = SelectionRule::all;
    int include_outliers_every = 0;
    AggregateScope aggregate_scope = AggregateScope::participants;
    LocalTrainingConfig training;
    std::uint64_t master_seed = 0;

    void validate() const {
        task.validate();
        if (n_clients < 1) throw ConfigError("config: n_clients must be positive");
        if (!(lambda > 0.0)) throw ConfigError("config: lambda must be positive");
        if (rounds < 1) throw ConfigError("config: rounds must be positive");
        if (include_outliers_every < 0)
            throw ConfigError("config: include_outliers_every must be >= 0");
        strategy.validate();
        training.validate();
    }
};

struct SimulationResult {
    ParameterVector final_model;
    std::vector<RoundRecord> records;
};

// Initial global model: entries i.i.d. uniform in [-0.1, 0.1].
inline ParameterVector init_global_model(const Task& task, std::uint64_t seed) {
    task.validate();
    RngStream rng(derive_seed(seed, "init"));
    ParameterVector v(task.param_count());
    for (double& x : v) x = rng.uniform(-0.1, 0.1);
    return v;
}

namespace detail {

// Trains every listed client from the current global model on `workers`
// threads. Each client draws from its own (seed, round)-derived stream, so
// results do not depend on how clients are assigned to threads.
inline void train_selected(std::vector<ClientState>& clients, const std::vector<int>& selected,
                           const ParameterVector& global_model, const Task& task,
                           const LocalTrainingConfig& training, std::uint64_t master_seed,
                           int round, int workers,
                           std::vector<ParameterVector>& trained,
                           std::vector<double>& costs) {
    trained.assign(selected.size(), {});
    costs.assign(selected.size(), 0.0);
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto work = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= selected.size()) return;
            try {
                ClientState& client = clients[static_cast<std::size_t>(selected[i])];
                RngStream stream(derive_seed(master_seed, "train",
                                             static_cast<std::uint64_t>(client.id),
                                             static_cast<std::uint64_t>(round)));
                trained[i] = local_train(client, global_model, task, training, stream);
                costs[i] = evaluate_cost(client, trained[i], task);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        const int n = std::min<int>(workers, static_cast<int>(selected.size()));
        pool.reserve(n);
        for (int t = 0; t < n; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

// Runs the full round loop against a pre-built federation. Exposed so tests
// and tools can inject hand-crafted client data.
inline SimulationResult run_with_data(const SimulationConfig& config, FederationData fed,
                                      int workers = 1) {
    config.validate();
    if (fed.clients.size() != static_cast<std::size_t>(config.n_clients))
        throw ConfigError("run: federation size != n_clients");

    std::vector<ClientState> clients(fed.clients.size());
    std::vector<ClientSize> sizes;
    std::vector<std::size_t> raw_sizes;
    for (std::size_t j = 0; j < fed.clients.size(); ++j) {
        clients[j].id = static_cast<int>(j);
        clients[j].data = std::move(fed.clients[j]);
        clients[j].size = clients[j].data.size();
        sizes.push_back({clients[j].id, clients[j].size});
        raw_sizes.push_back(clients[j].size);
    }

    SelectionPolicy policy{config.selection_rule, fit_lambda(raw_sizes),
                           config.include_outliers_every};

    ParameterVector global_model = init_global_model(config.task, config.master_seed);
    for (auto& c : clients) c.local_model = global_model;

    SimulationResult result;
    std::vector<ParameterVector> trained;
    std::vector<double> costs;
    for (int round = 0; round < config.rounds; ++round) {
        const auto t0 = std::chrono::steady_clock::now();
        RngStream select_rng(derive_seed(config.master_seed, "select",
                                         static_cast<std::uint64_t>(round)));
        const std::vector<int> selected = select(policy, sizes, round, select_rng);

        try {
            detail::train_selected(clients, selected, global_model, config.task, config.training,
                                   config.master_seed, round, workers, trained, costs);
        } catch (const NumericError& e) {
            throw NumericError("round " + std::to_string(round) + ": " + e.what());
        }

        // barrier: record costs, install trained models
        for (std::size_t i = 0; i < selected.size(); ++i) {
            ClientState& c = clients[static_cast<std::size_t>(selected[i])];
            c.local_model = std::move(trained[i]);
            c.record_cost(round, costs[i]);
        }
        // under all_clients scope non-participants also record the cost of
        // their stale model so every history stays complete
        if (config.aggregate_scope == AggregateScope::all_clients) {
            std::size_t si = 0;
            for (auto& c : clients) {
                if (si < selected.size() && selected[si] == c.id) {
                    ++si;
                    continue;
                }
                c.record_cost(round, evaluate_cost(c, c.local_model, config.task));
            }
        }

        AggregationInput input;
        input.round = round;
        if (config.aggregate_scope == AggregateScope::participants) {
            for (int id : selected) {
                const ClientState& c = clients[static_cast<std::size_t>(id)];
                input.clients.push_back({c.id, c.size, c.local_model, c.cost_history,
                                         c.baseline_cost});
            }
        } else {
            for (const ClientState& c : clients) {
                input.clients.push_back({c.id, c.size, c.local_model, c.cost_history,
                                         c.baseline_cost});
            }
        }

        const AggregationWeights weights = compute_weights(input, config.strategy);
        global_model = aggregate(input, config.strategy);

        RoundRecord rec;
        rec.round = round;
        rec.selected_ids = selected;
        for (std::size_t j = 0; j < input.clients.size(); ++j) {
            const auto& e = weights.entries[j];
            rec.clients.push_back({e.id, input.clients[j].cost_history.back().cost, e.weight,
                                   e.p_term, e.d_term, e.i_term});
        }
        rec.global_loss = loss(config.task, global_model, fed.test);
        rec.wall_time_ms = static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                 std::chrono::steady_clock::now() - t0)
                                                 .count());
        result.records.push_back(std::move(rec));
    }
    result.final_model = std::move(global_model);
    return result;
}

inline SimulationResult run(const SimulationConfig& config, int workers = 1) {
    config.validate();
    FederationData fed = generate_federation_data(
        config.task, config.n_clients, config.lambda, config.heterogeneity,
        derive_seed(config.master_seed, "data"), config.test_size, config.noise_std);
    return run_with_data(config, std::move(fed), workers);
}

}  // namespace fedsim
