// fedsim command line: run experiments from a config file, compare result
// streams, export generated federations, and inspect per-round weights.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsim/fedsim.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct SummaryRow {
    std::string name;
    double final_loss;
    int best_round;
    int rounds_to_half;  // first round with loss < 0.5 * round-0 loss, -1 if never
    long wall_time_ms;
};

SummaryRow summarize(const std::string& name, const std::vector<fedsim::RoundRecord>& records,
                     long wall_ms) {
    SummaryRow row{name, records.back().global_loss, 0, -1, wall_ms};
    double best = records[0].global_loss;
    const double half = 0.5 * records[0].global_loss;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].global_loss < best) {
            best = records[i].global_loss;
            row.best_round = static_cast<int>(i);
        }
        if (row.rounds_to_half < 0 && records[i].global_loss < half)
            row.rounds_to_half = static_cast<int>(i);
    }
    return row;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, long seed_override,
            bool has_seed_override, int workers) {
    fedsim::ExperimentSpec spec;
    try {
        spec = fedsim::load_experiment_spec(config_path);
    } catch (const fedsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    fs::create_directories(out_dir);

    std::vector<SummaryRow> rows;
    for (auto& member : spec.members) {
        if (has_seed_override)
            member.config.master_seed = static_cast<std::uint64_t>(seed_override);
        const auto t0 = std::chrono::steady_clock::now();
        fedsim::SimulationResult result;
        try {
            result = fedsim::run(member.config, workers);
        } catch (const fedsim::NumericError& e) {
            std::cerr << "numeric divergence in '" << member.name << "': " << e.what() << "\n";
            return kExitNumeric;
        } catch (const fedsim::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kExitConfig;
        }
        const long wall_ms = static_cast<long>(
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                  t0)
                .count());
        const fs::path base = fs::path(out_dir) / member.name;
        fedsim::write_records(base.string() + ".jsonl", result.records);
        fedsim::save_checkpoint(base.string() + ".ckpt", result.final_model);
        rows.push_back(summarize(member.name, result.records, wall_ms));
    }

    std::ofstream summary(fs::path(out_dir) / "summary.csv");
    summary << "name,final_loss,best_round,rounds_to_half,wall_time_ms\n";
    summary.precision(17);
    for (const auto& r : rows) {
        summary << r.name << "," << r.final_loss << "," << r.best_round << ","
                << r.rounds_to_half << "," << r.wall_time_ms << "\n";
        std::printf("%-20s final_loss=%.6g best_round=%d rounds_to_half=%d (%ld ms)\n",
                    r.name.c_str(), r.final_loss, r.best_round, r.rounds_to_half, r.wall_time_ms);
    }
    return 0;
}

double trapezoid_auc(const std::vector<fedsim::RoundRecord>& records) {
    double auc = 0.0;
    for (std::size_t i = 1; i < records.size(); ++i)
        auc += 0.5 * (records[i - 1].global_loss + records[i].global_loss);
    return auc;
}

int cmd_compare(const std::string& out_dir) {
    std::vector<std::pair<std::string, std::vector<fedsim::RoundRecord>>> streams;
    if (fs::is_directory(out_dir)) {
        for (const auto& entry : fs::directory_iterator(out_dir)) {
            if (entry.path().extension() == ".jsonl")
                streams.emplace_back(entry.path().stem().string(),
                                     fedsim::read_records(entry.path().string()));
        }
    }
    std::sort(streams.begin(), streams.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (streams.size() < 2) {
        std::cerr << "compare: need at least two result streams in " << out_dir << "\n";
        return kExitConfig;
    }

    std::printf("%-20s %12s %10s %14s\n", "strategy", "final_loss", "best_round", "auc");
    std::ofstream merged(fs::path(out_dir) / "compare.csv");
    merged << "round,strategy,loss\n";
    merged.precision(17);
    for (const auto& [name, records] : streams) {
        int best_round = 0;
        double best = records[0].global_loss;
        for (std::size_t i = 1; i < records.size(); ++i) {
            if (records[i].global_loss < best) {
                best = records[i].global_loss;
                best_round = static_cast<int>(i);
            }
        }
        std::printf("%-20s %12.6g %10d %14.6g\n", name.c_str(), records.back().global_loss,
                    best_round, trapezoid_auc(records));
        for (const auto& rec : records)
            merged << rec.round << "," << name << "," << rec.global_loss << "\n";
    }
    return 0;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
    fedsim::ExperimentSpec spec;
    try {
        spec = fedsim::load_experiment_spec(config_path);
    } catch (const fedsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    const fedsim::SimulationConfig& cfg = spec.members.front().config;
    const fedsim::FederationData fed = fedsim::generate_federation_data(
        cfg.task, cfg.n_clients, cfg.lambda, cfg.heterogeneity,
        fedsim::derive_seed(cfg.master_seed, "data"), cfg.test_size, cfg.noise_std);
    fs::create_directories(out_dir);
    for (std::size_t j = 0; j < fed.clients.size(); ++j) {
        fedsim::export_dataset_csv(
            (fs::path(out_dir) / ("client_" + std::to_string(j) + ".csv")).string(),
            fed.clients[j]);
    }
    fedsim::export_dataset_csv((fs::path(out_dir) / "test.csv").string(), fed.test);
    std::printf("wrote %zu client datasets + test set to %s\n", fed.clients.size(),
                out_dir.c_str());
    return 0;
}

int cmd_inspect(const std::string& results_path, int round) {
    std::vector<fedsim::RoundRecord> records;
    try {
        records = fedsim::read_records(results_path);
    } catch (const std::exception& e) {
        std::cerr << "inspect: " << e.what() << "\n";
        return kExitConfig;
    }
    for (const auto& rec : records) {
        if (rec.round != round) continue;
        std::printf("round %d  global_loss=%.6g  selected=%zu clients\n", rec.round,
                    rec.global_loss, rec.selected_ids.size());
        std::printf("%6s %14s %12s %12s %12s %12s\n", "client", "cost", "weight", "p", "d", "i");
        for (const auto& c : rec.clients)
            std::printf("%6d %14.6g %12.6g %12.6g %12.6g %12.6g\n", c.id, c.cost, c.weight,
                        c.p_term, c.d_term, c.i_term);
        return 0;
    }
    std::cerr << "inspect: round " << round << " not found in " << results_path << "\n";
    return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated aggregation strategy simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", results_path;
    long seed_override = 0;
    int workers = 1, round = 0;

    auto* run = app.add_subcommand("run", "run every strategy in a config file");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory");
    auto* seed_opt = run->add_option("--seed", seed_override, "override master_seed");
    run->add_option("--workers", workers, "training worker threads");

    auto* compare = app.add_subcommand("compare", "summarize result streams in a directory");
    compare->add_option("--out", out_dir, "directory holding .jsonl result streams")->required();

    auto* gen = app.add_subcommand("gen-data", "export the generated federation as CSV");
    gen->add_option("--config", config_path, "experiment config file")->required();
    gen->add_option("--out", out_dir, "output directory");

    auto* inspect = app.add_subcommand("inspect", "dump weight breakdowns for one round");
    inspect->add_option("--results", results_path, "a .jsonl result stream")->required();
    inspect->add_option("--round", round, "round index")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, out_dir, seed_override, seed_opt->count() > 0, workers);
        if (compare->parsed()) return cmd_compare(out_dir);
        if (gen->parsed()) return cmd_gen_data(config_path, out_dir);
        if (inspect->parsed()) return cmd_inspect(results_path, round);
    } catch (const fedsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fedsim::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
