#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/params.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class TaskKind { linear_regression, logistic_regression, mlp };

inline std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::linear_regression: return "linear_regression";
        case TaskKind::logistic_regression: return "logistic_regression";
        case TaskKind::mlp: return "mlp";
    }
    return "?";
}

inline TaskKind task_kind_from_string(const std::string& s) {
    if (s == "linear_regression") return TaskKind::linear_regression;
    if (s == "logistic_regression") return TaskKind::logistic_regression;
    if (s == "mlp") return TaskKind::mlp;
    throw ConfigError("unknown task kind: " + s);
}

// Synthetic learning task. MSE for the regressors, cross-entropy for
// logistic; the mlp has one tanh hidden layer and a linear output.
struct Task {
    TaskKind kind = TaskKind::linear_regression;
    int input_dim = 1;
    int hidden_dim = 0;  // mlp only

    std::size_t param_count() const {
        switch (kind) {
            case TaskKind::linear_regression:
            case TaskKind::logistic_regression:
                return static_cast<std::size_t>(input_dim) + 1;
            case TaskKind::mlp:
                return static_cast<std::size_t>(input_dim + 1) * hidden_dim + hidden_dim + 1;
        }
        return 0;
    }

    void validate() const {
        if (input_dim < 1) throw ConfigError("task: input_dim must be positive");
        if (kind == TaskKind::mlp && hidden_dim < 1)
            throw ConfigError("task: mlp requires hidden_dim >= 1");
    }
};

// Row-major sample matrix plus targets.
struct Dataset {
    std::size_t dim = 0;
    std::vector<double> features;  // size() * dim, row-major
    std::vector<double> targets;

    std::size_t size() const { return targets.size(); }
    const double* row(std::size_t i) const { return features.data() + i * dim; }

    void append(std::span<const double> x, double y) {
        features.insert(features.end(), x.begin(), x.end());
        targets.push_back(y);
    }
};

namespace detail {

inline double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Stable -[y log p + (1-y) log(1-p)] with p = sigmoid(z).
inline double logistic_loss(double z, double y) {
    return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::fabs(z)));
}

inline double dot_plus_bias(const double* x, const double* w, int dim) {
    double z = w[dim];  // bias last
    for (int k = 0; k < dim; ++k) z += w[k] * x[k];
    return z;
}

// MLP parameter layout: W1 (hidden x input, row-major), b1, w2, b2.
struct MlpView {
    const double* w1;
    const double* b1;
    const double* w2;
    const double* b2;
    explicit MlpView(const Task& t, const double* p)
        : w1(p),
          b1(p + static_cast<std::size_t>(t.hidden_dim) * t.input_dim),
          w2(b1 + t.hidden_dim),
          b2(w2 + t.hidden_dim) {}
};

inline double mlp_forward(const Task& t, const MlpView& m, const double* x,
                          std::vector<double>& hidden) {
    hidden.resize(t.hidden_dim);
    for (int h = 0; h < t.hidden_dim; ++h) {
        double z = m.b1[h];
        const double* wrow = m.w1 + static_cast<std::size_t>(h) * t.input_dim;
        for (int k = 0; k < t.input_dim; ++k) z += wrow[k] * x[k];
        hidden[h] = std::tanh(z);
    }
    double y = *m.b2;
    for (int h = 0; h < t.hidden_dim; ++h) y += m.w2[h] * hidden[h];
    return y;
}

}  // namespace detail

inline void check_task_dims(const Task& task, const ParameterVector& params,
                            const Dataset& data) {
    if (params.size() != task.param_count())
        throw DimensionError("task: params length " + std::to_string(params.size()) +
                             " != param_count " + std::to_string(task.param_count()));
    if (data.dim != static_cast<std::size_t>(task.input_dim))
        throw DimensionError("task: dataset dim mismatch");
    if (data.size() == 0) throw DimensionError("task: empty dataset");
}

// Mean per-sample loss.
inline double loss(const Task& task, const ParameterVector& params, const Dataset& data) {
    check_task_dims(task, params, data);
    double acc = 0.0;
    const std::size_t n = data.size();
    std::vector<double> hidden;
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = data.row(i);
        const double y = data.targets[i];
        switch (task.kind) {
            case TaskKind::linear_regression: {
                const double e = y - detail::dot_plus_bias(x, params.data(), task.input_dim);
                acc += e * e;
                break;
            }
            case TaskKind::logistic_regression: {
                const double z = detail::dot_plus_bias(x, params.data(), task.input_dim);
                acc += detail::logistic_loss(z, y);
                break;
            }
            case TaskKind::mlp: {
                detail::MlpView m(task, params.data());
                const double e = y - detail::mlp_forward(task, m, x, hidden);
                acc += e * e;
                break;
            }
        }
    }
    const double out = acc / static_cast<double>(n);
    if (!std::isfinite(out)) throw NumericError("loss: non-finite");
    return out;
}

// Gradient of the mean batch loss, hand-derived; kept honest by the
// finite-difference property tests.
inline ParameterVector gradient(const Task& task, const ParameterVector& params,
                                const Dataset& batch) {
    check_task_dims(task, params, batch);
    ParameterVector grad(params.size(), 0.0);
    const std::size_t n = batch.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> hidden;
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = batch.row(i);
        const double y = batch.targets[i];
        switch (task.kind) {
            case TaskKind::linear_regression: {
                const double yhat = detail::dot_plus_bias(x, params.data(), task.input_dim);
                const double g = 2.0 * (yhat - y) * inv_n;
                for (int k = 0; k < task.input_dim; ++k) grad[k] += g * x[k];
                grad[task.input_dim] += g;
                break;
            }
            case TaskKind::logistic_regression: {
                const double z = detail::dot_plus_bias(x, params.data(), task.input_dim);
                const double g = (detail::sigmoid(z) - y) * inv_n;
                for (int k = 0; k < task.input_dim; ++k) grad[k] += g * x[k];
                grad[task.input_dim] += g;
                break;
            }
            case TaskKind::mlp: {
                detail::MlpView m(task, params.data());
                const double yhat = detail::mlp_forward(task, m, x, hidden);
                const double e = 2.0 * (yhat - y) * inv_n;
                const std::size_t w1_count = static_cast<std::size_t>(task.hidden_dim) * task.input_dim;
                double* gw1 = grad.data();
                double* gb1 = grad.data() + w1_count;
                double* gw2 = gb1 + task.hidden_dim;
                double* gb2 = gw2 + task.hidden_dim;
                *gb2 += e;
                for (int h = 0; h < task.hidden_dim; ++h) {
                    gw2[h] += e * hidden[h];
                    const double dz = e * m.w2[h] * (1.0 - hidden[h] * hidden[h]);
                    gb1[h] += dz;
                    double* grow = gw1 + static_cast<std::size_t>(h) * task.input_dim;
                    for (int k = 0; k < task.input_dim; ++k) grow[k] += dz * x[k];
                }
                break;
            }
        }
    }
    require_finite(grad, "gradient");
    return grad;
}

// One federation's worth of synthetic data.
struct FederationData {
    std::vector<Dataset> clients;
    Dataset test;
};

namespace detail {

inline ParameterVector random_truth(const Task& task, RngStream& rng) {
    ParameterVector truth(task.param_count());
    for (double& v : truth) v = rng.normal();
    return truth;
}

inline Dataset sample_dataset(const Task& task, const ParameterVector& truth,
                              std::size_t n, double noise_std, RngStream& rng) {
    Dataset ds;
    ds.dim = static_cast<std::size_t>(task.input_dim);
    ds.features.reserve(n * ds.dim);
    ds.targets.reserve(n);
    std::vector<double> x(ds.dim), hidden;
    for (std::size_t i = 0; i < n; ++i) {
        for (double& v : x) v = rng.normal();
        double y = 0.0;
        switch (task.kind) {
            case TaskKind::linear_regression:
                y = dot_plus_bias(x.data(), truth.data(), task.input_dim) +
                    noise_std * rng.normal();
                break;
            case TaskKind::logistic_regression: {
                const double p = sigmoid(dot_plus_bias(x.data(), truth.data(), task.input_dim));
                y = rng.uniform() < p ? 1.0 : 0.0;
                break;
            }
            case TaskKind::mlp: {
                MlpView m(task, truth.data());
                y = mlp_forward(task, m, x.data(), hidden) + noise_std * rng.normal();
                break;
            }
        }
        ds.append(x, y);
    }
    return ds;
}

}  // namespace detail

// Per-client dataset sizes ~ Poisson(lambda) clamped to >= 1. heterogeneity=0
// gives i.i.d. clients from one ground truth; heterogeneity>0 shifts each
// client's ground-truth parameters by zero-mean noise of that scale.
inline FederationData generate_federation_data(const Task& task, int n_clients, double lambda,
                                               double heterogeneity, std::uint64_t seed,
                                               std::size_t test_size = 256,
                                               double noise_std = 0.1) {
    task.validate();
    if (n_clients < 1) throw ConfigError("generate_federation_data: n_clients >= 1 required");
    if (!(lambda > 0.0)) throw ConfigError("generate_federation_data: lambda > 0 required");
    if (heterogeneity < 0.0 || heterogeneity > 1.0)
        throw ConfigError("generate_federation_data: heterogeneity in [0,1] required");

    RngStream truth_rng(derive_seed(seed, "truth"));
    const ParameterVector global_truth = detail::random_truth(task, truth_rng);

    FederationData fed;
    fed.clients.reserve(n_clients);
    for (int j = 0; j < n_clients; ++j) {
        RngStream crng(derive_seed(seed, "client-data", static_cast<std::uint64_t>(j)));
        const std::size_t n = std::max<std::uint64_t>(1, crng.poisson(lambda));
        ParameterVector truth = global_truth;
        if (heterogeneity > 0.0) {
            for (double& v : truth) v += heterogeneity * crng.normal();
        }
        fed.clients.push_back(detail::sample_dataset(task, truth, n, noise_std, crng));
    }
    RngStream trng(derive_seed(seed, "test-data"));
    fed.test = detail::sample_dataset(task, global_truth, test_size, noise_std, trng);
    return fed;
}

// Columnar text export: header "x0,...,x<d-1>,y" then one row per sample.
inline void export_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    for (std::size_t k = 0; k < ds.dim; ++k) out << "x" << k << ",";
    out << "y\n";
    out.precision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double* x = ds.row(i);
        for (std::size_t k = 0; k < ds.dim; ++k) out << x[k] << ",";
        out << ds.targets[i] << "\n";
    }
}

inline Dataset import_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty dataset file: " + path);
    const std::size_t dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    Dataset ds;
    ds.dim = dim;
    std::vector<double> x(dim);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        for (std::size_t k = 0; k < dim; ++k) {
            if (!std::getline(ss, cell, ',')) throw ConfigError("short row in " + path);
            x[k] = std::stod(cell);
        }
        if (!std::getline(ss, cell)) throw ConfigError("missing target in " + path);
        ds.append(x, std::stod(cell));
    }
    if (ds.size() == 0) throw ConfigError("dataset has no rows: " + path);
    return ds;
}

}  // namespace fedsim
