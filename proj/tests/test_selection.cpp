#include <catch_amalgamated.hpp>

#include <algorithm>

#include "fedsim/selection.hpp"

using namespace fedsim;

TEST_CASE("fit_lambda is the sample mean") {
    CHECK(fit_lambda({10, 10, 10}) == 10.0);
    CHECK(fit_lambda({1, 2, 3, 4}) == 2.5);
    CHECK_THROWS_AS(fit_lambda({}), ConfigError);
}

TEST_CASE("fit_lambda recovers the Poisson rate from samples") {
    RngStream rng(31);
    std::vector<std::size_t> sizes;
    for (int i = 0; i < 10000; ++i) sizes.push_back(rng.poisson(20.0));
    const double lambda_hat = fit_lambda(sizes);
    CHECK(lambda_hat >= 19.5);
    CHECK(lambda_hat <= 20.5);
}

TEST_CASE("rule all returns every id") {
    RngStream rng(1);
    SelectionPolicy policy{SelectionRule::all, 10.0, 0};
    CHECK(select(policy, {{2, 100}, {0, 5}, {1, 9}}, 3, rng) == std::vector<int>{0, 1, 2});
}

TEST_CASE("poisson_2lambda drops x > 2*lambda") {
    RngStream rng(1);
    SelectionPolicy policy{SelectionRule::poisson_2lambda, 10.0, 0};
    CHECK(select(policy, {{0, 5}, {1, 9}, {2, 25}}, 0, rng) == std::vector<int>{0, 1});
}

TEST_CASE("poisson_lambda_floor50 tops up from the smallest outliers") {
    RngStream rng(1);
    SelectionPolicy policy{SelectionRule::poisson_lambda_floor50, 10.0, 0};
    CHECK(select(policy, {{0, 11}, {1, 12}, {2, 13}, {3, 5}}, 0, rng) ==
          std::vector<int>{0, 3});
}

TEST_CASE("no outliers means everyone is selected under both rules") {
    RngStream rng(1);
    std::vector<ClientSize> clients = {{0, 8}, {1, 9}, {2, 10}};
    for (SelectionRule rule : {SelectionRule::poisson_2lambda, SelectionRule::poisson_lambda_floor50}) {
        SelectionPolicy policy{rule, 10.0, 0};
        CHECK(select(policy, clients, 0, rng) == std::vector<int>{0, 1, 2});
    }
}

TEST_CASE("periodic full inclusion escape hatch") {
    RngStream rng(1);
    SelectionPolicy policy{SelectionRule::poisson_2lambda, 10.0, 5};
    std::vector<ClientSize> clients = {{0, 5}, {1, 50}};
    CHECK(select(policy, clients, 0, rng) == std::vector<int>{0, 1});
    CHECK(select(policy, clients, 3, rng) == std::vector<int>{0});
    CHECK(select(policy, clients, 5, rng) == std::vector<int>{0, 1});
}

TEST_CASE("floor rule properties over random federations") {
    RngStream rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(30);
        std::vector<ClientSize> clients;
        std::vector<std::size_t> sizes;
        for (std::size_t j = 0; j < n; ++j) {
            clients.push_back({static_cast<int>(j), 1 + rng.poisson(20.0)});
            sizes.push_back(clients.back().size);
        }
        const double lambda_hat = fit_lambda(sizes);

        SelectionPolicy floor50{SelectionRule::poisson_lambda_floor50, lambda_hat, 0};
        const std::vector<int> picked = select(floor50, clients, trial, rng);
        CHECK(picked.size() >= (n + 1) / 2);
        for (const auto& c : clients) {
            if (static_cast<double>(c.size) <= lambda_hat)
                CHECK(std::find(picked.begin(), picked.end(), c.id) != picked.end());
        }

        SelectionPolicy twol{SelectionRule::poisson_2lambda, lambda_hat, 0};
        const std::vector<int> picked2 = select(twol, clients, trial, rng);
        for (const auto& c : clients) {
            const bool in = std::find(picked2.begin(), picked2.end(), c.id) != picked2.end();
            CHECK(in == (static_cast<double>(c.size) <= 2.0 * lambda_hat));
        }
    }
}

TEST_CASE("tie-break when topping up: ascending size then ascending id") {
    RngStream rng(1);
    SelectionPolicy policy{SelectionRule::poisson_lambda_floor50, 10.0, 0};
    // all outliers; floor ceil(4/2)=2 -> the two smallest, id breaks the tie
    CHECK(select(policy, {{3, 20}, {1, 20}, {0, 30}, {2, 40}}, 0, rng) ==
          std::vector<int>{1, 3});
}

TEST_CASE("policy validation") {
    RngStream rng(1);
    SelectionPolicy bad{SelectionRule::all, 0.0, 0};
    CHECK_THROWS_AS(select(bad, {{0, 1}}, 0, rng), ConfigError);
    SelectionPolicy ok{SelectionRule::all, 1.0, 0};
    CHECK_THROWS_AS(select(ok, {}, 0, rng), ConfigError);
}
