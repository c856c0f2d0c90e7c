#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "fedsim/tasks.hpp"

using namespace fedsim;

namespace {

Dataset make_dataset(std::size_t dim, std::initializer_list<std::pair<std::vector<double>, double>> rows) {
    Dataset ds;
    ds.dim = dim;
    for (const auto& [x, y] : rows) ds.append(x, y);
    return ds;
}

ParameterVector random_params(const Task& task, RngStream& rng) {
    ParameterVector p(task.param_count());
    for (double& v : p) v = rng.normal();
    return p;
}

Dataset random_batch(const Task& task, std::size_t n, RngStream& rng) {
    Dataset ds;
    ds.dim = static_cast<std::size_t>(task.input_dim);
    std::vector<double> x(ds.dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (double& v : x) v = rng.normal();
        double y = task.kind == TaskKind::logistic_regression ? (rng.uniform() < 0.5 ? 0.0 : 1.0)
                                                              : rng.normal();
        ds.append(x, y);
    }
    return ds;
}

// Central finite differences, independent of the analytic path.
ParameterVector fd_gradient(const Task& task, const ParameterVector& params, const Dataset& batch,
                            double h = 1e-5) {
    ParameterVector g(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
        ParameterVector hi = params, lo = params;
        hi[k] += h;
        lo[k] -= h;
        g[k] = (loss(task, hi, batch) - loss(task, lo, batch)) / (2.0 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("param_count per task kind") {
    CHECK(Task{TaskKind::linear_regression, 4}.param_count() == 5);
    CHECK(Task{TaskKind::logistic_regression, 7}.param_count() == 8);
    CHECK(Task{TaskKind::mlp, 3, 5}.param_count() == (3 + 1) * 5 + 5 + 1);
}

TEST_CASE("linear regression loss examples") {
    Task task{TaskKind::linear_regression, 1};
    Dataset zeros = make_dataset(1, {{{1.0}, 0.0}, {{-2.0}, 0.0}});
    CHECK(loss(task, {0.0, 0.0}, zeros) == 0.0);

    Dataset one = make_dataset(1, {{{2.0}, 0.0}});
    CHECK(loss(task, {1.0, 0.0}, one) == 4.0);
}

TEST_CASE("logistic loss matches per-sample loop oracle") {
    Task task{TaskKind::logistic_regression, 3};
    RngStream rng(21);
    ParameterVector params = random_params(task, rng);
    Dataset data = random_batch(task, 10, rng);

    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double z = params[3];
        for (int k = 0; k < 3; ++k) z += params[k] * data.row(i)[k];
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double y = data.targets[i];
        acc += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    CHECK(loss(task, params, data) == Catch::Approx(acc / 10.0).margin(1e-12));
}

TEST_CASE("gradient at a stationary point is zero") {
    Task task{TaskKind::linear_regression, 1};
    // y = 2x + 1 fits exactly
    Dataset data = make_dataset(1, {{{0.0}, 1.0}, {{1.0}, 3.0}, {{2.0}, 5.0}});
    ParameterVector g = gradient(task, {2.0, 1.0}, data);
    for (double v : g) CHECK(std::fabs(v) <= 1e-9);
}

TEST_CASE("gradient hand example") {
    Task task{TaskKind::linear_regression, 1};
    Dataset data = make_dataset(1, {{{1.0}, 2.0}});
    ParameterVector g = gradient(task, {0.0, 0.0}, data);
    CHECK(g[0] == Catch::Approx(-4.0).margin(1e-12));
    CHECK(g[1] == Catch::Approx(-4.0).margin(1e-12));
}

TEST_CASE("gradient agrees with central finite differences") {
    const Task tasks[] = {{TaskKind::linear_regression, 4},
                          {TaskKind::logistic_regression, 4},
                          {TaskKind::mlp, 3, 4}};
    RngStream rng(1234);
    for (const Task& task : tasks) {
        for (int trial = 0; trial < 25; ++trial) {
            ParameterVector params = random_params(task, rng);
            Dataset batch = random_batch(task, 1 + rng.uniform_index(8), rng);
            ParameterVector g = gradient(task, params, batch);
            ParameterVector fd = fd_gradient(task, params, batch);
            double scale = 1e-8, dev = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) {
                scale = std::max({scale, std::fabs(g[k]), std::fabs(fd[k])});
                dev = std::max(dev, std::fabs(g[k] - fd[k]));
            }
            CHECK(dev / scale <= 1e-4);
        }
    }
}

TEST_CASE("loss is non-negative") {
    RngStream rng(5);
    const Task tasks[] = {{TaskKind::linear_regression, 2},
                          {TaskKind::logistic_regression, 2},
                          {TaskKind::mlp, 2, 3}};
    for (const Task& task : tasks) {
        for (int trial = 0; trial < 20; ++trial) {
            CHECK(loss(task, random_params(task, rng), random_batch(task, 5, rng)) >= 0.0);
        }
    }
}

TEST_CASE("loss dimension errors") {
    Task task{TaskKind::linear_regression, 2};
    Dataset data = make_dataset(2, {{{1.0, 2.0}, 0.0}});
    CHECK_THROWS_AS(loss(task, {1.0, 2.0}, data), DimensionError);  // missing bias slot
    Dataset wrong = make_dataset(3, {{{1.0, 2.0, 3.0}, 0.0}});
    CHECK_THROWS_AS(loss(task, {1.0, 2.0, 0.0}, wrong), DimensionError);
}

TEST_CASE("generate_federation_data determinism") {
    Task task{TaskKind::linear_regression, 3};
    FederationData a = generate_federation_data(task, 4, 10.0, 0.0, 99);
    FederationData b = generate_federation_data(task, 4, 10.0, 0.0, 99);
    REQUIRE(a.clients.size() == 4);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(a.clients[j].features == b.clients[j].features);
        CHECK(a.clients[j].targets == b.clients[j].targets);
    }
    CHECK(a.test.features == b.test.features);

    FederationData c = generate_federation_data(task, 4, 10.0, 0.0, 100);
    CHECK(a.clients[0].targets != c.clients[0].targets);
}

TEST_CASE("dataset sizes follow the Poisson mean") {
    Task task{TaskKind::linear_regression, 1};
    FederationData fed = generate_federation_data(task, 1000, 50.0, 0.0, 7, 4);
    double mean = 0.0;
    for (const auto& ds : fed.clients) mean += static_cast<double>(ds.size());
    mean /= 1000.0;
    CHECK(mean >= 47.0);
    CHECK(mean <= 53.0);
}

TEST_CASE("zero-size draws are clamped to one sample") {
    Task task{TaskKind::linear_regression, 1};
    FederationData fed = generate_federation_data(task, 200, 0.5, 0.0, 3, 4);
    for (const auto& ds : fed.clients) CHECK(ds.size() >= 1);
}

TEST_CASE("invalid federation configs are rejected") {
    Task task{TaskKind::linear_regression, 1};
    CHECK_THROWS_AS(generate_federation_data(task, 0, 10.0, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(generate_federation_data(task, 2, 0.0, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(generate_federation_data(task, 2, 10.0, 1.5, 1), ConfigError);
}

TEST_CASE("csv export import round trip") {
    Task task{TaskKind::linear_regression, 2};
    FederationData fed = generate_federation_data(task, 1, 5.0, 0.0, 11, 4);
    const auto path = std::filesystem::temp_directory_path() / "fedsim_test_tasks.csv";
    export_dataset_csv(path.string(), fed.clients[0]);
    Dataset back = import_dataset_csv(path.string());
    REQUIRE(back.size() == fed.clients[0].size());
    REQUIRE(back.dim == fed.clients[0].dim);
    for (std::size_t i = 0; i < back.features.size(); ++i)
        CHECK(back.features[i] == fed.clients[0].features[i]);
    for (std::size_t i = 0; i < back.targets.size(); ++i)
        CHECK(back.targets[i] == fed.clients[0].targets[i]);
    std::filesystem::remove(path);
}
