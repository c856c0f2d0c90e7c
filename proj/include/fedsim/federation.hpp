#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/params.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/tasks.hpp"

namespace fedsim {

struct CostEntry {
    int round;
    double cost;
};

// One collaborator: its local data, the locally trained model of the current
// round, and the recorded cost sequence feeding the D and I terms.
struct ClientState {
    int id = 0;
    Dataset data;
    std::size_t size = 0;  // == data.size()
    std::vector<CostEntry> cost_history;
    ParameterVector local_model;
    // First cost recorded at a round index >= 1; fixed once set.
    std::optional<double> baseline_cost;

    void record_cost(int round, double cost) {
        if (!cost_history.empty() && cost_history.back().round >= round)
            throw ProtocolError("cost_history round indices must be strictly increasing");
        cost_history.push_back({round, cost});
        if (!baseline_cost && round >= 1) baseline_cost = cost;
    }
};

struct LocalTrainingConfig {
    int epochs = 1;
    int batch_size = 8;
    double learning_rate = 0.05;

    void validate() const {
        if (epochs < 1) throw ConfigError("training: epochs must be positive");
        if (batch_size < 1) throw ConfigError("training: batch_size must be positive");
        if (learning_rate < 0.0) throw ConfigError("training: learning_rate must be >= 0");
    }
};

// Mini-batch SGD from the broadcast global model on the client's local data.
// The global model is taken by const reference and never mutated.
inline ParameterVector local_train(const ClientState& client, const ParameterVector& global_model,
                                   const Task& task, const LocalTrainingConfig& cfg,
                                   RngStream& rng) {
    cfg.validate();
    if (global_model.size() != task.param_count())
        throw DimensionError("local_train: global model length mismatch");

    ParameterVector params = global_model;
    const std::size_t n = client.data.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    Dataset batch;
    batch.dim = client.data.dim;
    for (int e = 0; e < cfg.epochs; ++e) {
        // Fisher-Yates on the client's own stream
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = rng.uniform_index(i);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            batch.features.clear();
            batch.targets.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch.append({client.data.row(order[i]), batch.dim}, client.data.targets[order[i]]);
            }
            const ParameterVector grad = gradient(task, params, batch);
            for (std::size_t k = 0; k < params.size(); ++k)
                params[k] -= cfg.learning_rate * grad[k];
        }
        if (!all_finite(params))
            throw NumericError("local_train: parameters diverged (learning_rate too high?)");
    }
    return params;
}

// c(M_i^j): loss of `model` on the client's full local dataset.
inline double evaluate_cost(const ClientState& client, const ParameterVector& model,
                            const Task& task) {
    return loss(task, model, client.data);
}

}  // namespace fedsim
