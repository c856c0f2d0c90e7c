#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fedsim/records_io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = FEDSIM_CLI_PATH;

int run_cli(const std::string& args) {
    const int rc = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() / ("fedsim_cli_" + leaf);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir) {
    const fs::path path = dir / "exp.cfg";
    std::ofstream out(path);
    out << "[federation]\n"
           "task = linear_regression\n"
           "input_dim = 3\n"
           "n_clients = 5\n"
           "lambda = 8\n"
           "heterogeneity = 0.0\n"
           "rounds = 6\n"
           "test_size = 32\n"
           "master_seed = 17\n"
           "[training]\n"
           "epochs = 1\n"
           "batch_size = 4\n"
           "learning_rate = 0.05\n"
           "[strategy avg]\n"
           "strategy = fed_avg\n"
           "[strategy pid]\n"
           "strategy = fed_pid\n";
    return path;
}

}  // namespace

TEST_CASE("missing config file exits 2") {
    CHECK(run_cli("run --config /nonexistent.cfg --out /tmp/fedsim_none") == 2);
}

TEST_CASE("malformed config exits 2") {
    const fs::path dir = scratch_dir("badcfg");
    const fs::path cfg = dir / "bad.cfg";
    std::ofstream(cfg) << "[federation]\nbogus_key = 1\n";
    CHECK(run_cli("run --config " + cfg.string() + " --out " + (dir / "out").string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("run writes one stream, checkpoint and summary per strategy") {
    const fs::path dir = scratch_dir("run");
    const fs::path cfg = write_config(dir);
    const fs::path out = dir / "out";
    REQUIRE(run_cli("run --config " + cfg.string() + " --out " + out.string()) == 0);
    CHECK(fs::exists(out / "avg.jsonl"));
    CHECK(fs::exists(out / "avg.ckpt"));
    CHECK(fs::exists(out / "pid.jsonl"));
    CHECK(fs::exists(out / "pid.ckpt"));
    CHECK(fs::exists(out / "summary.csv"));

    const auto records = fedsim::read_records((out / "pid.jsonl").string());
    REQUIRE(records.size() == 6);
    for (const auto& rec : records) {
        double sum = 0.0;
        for (const auto& c : rec.clients) sum += c.weight;
        CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    }
    fs::remove_all(dir);
}

TEST_CASE("reruns of the same spec are byte-identical") {
    const fs::path dir = scratch_dir("determinism");
    const fs::path cfg = write_config(dir);
    const fs::path out1 = dir / "out1";
    const fs::path out2 = dir / "out2";
    REQUIRE(run_cli("run --config " + cfg.string() + " --out " + out1.string()) == 0);
    REQUIRE(run_cli("run --config " + cfg.string() + " --out " + out2.string()) == 0);
    CHECK(slurp(out1 / "avg.jsonl") == slurp(out2 / "avg.jsonl"));
    CHECK(slurp(out1 / "pid.jsonl") == slurp(out2 / "pid.jsonl"));
    CHECK(slurp(out1 / "avg.ckpt") == slurp(out2 / "avg.ckpt"));

    // a different seed changes the stream
    const fs::path out3 = dir / "out3";
    REQUIRE(run_cli("run --config " + cfg.string() + " --out " + out3.string() + " --seed 99") == 0);
    CHECK(slurp(out1 / "avg.jsonl") != slurp(out3 / "avg.jsonl"));
    fs::remove_all(dir);
}

TEST_CASE("compare summarizes streams and matches a trapezoid oracle") {
    const fs::path dir = scratch_dir("compare");
    const fs::path cfg = write_config(dir);
    const fs::path out = dir / "out";
    REQUIRE(run_cli("run --config " + cfg.string() + " --out " + out.string()) == 0);
    REQUIRE(run_cli("compare --out " + out.string()) == 0);
    REQUIRE(fs::exists(out / "compare.csv"));

    // independent trapezoid AUC from the merged columnar file
    std::ifstream merged(out / "compare.csv");
    std::string line;
    std::getline(merged, line);
    CHECK(line == "round,strategy,loss");
    std::map<std::string, std::vector<double>> losses;
    while (std::getline(merged, line)) {
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        losses[line.substr(c1 + 1, c2 - c1 - 1)].push_back(std::stod(line.substr(c2 + 1)));
    }
    REQUIRE(losses.size() == 2);
    for (const auto& [name, series] : losses) {
        REQUIRE(series.size() == 6);
        const auto records = fedsim::read_records((out / (name + ".jsonl")).string());
        for (std::size_t i = 0; i < series.size(); ++i)
            CHECK(series[i] == records[i].global_loss);
    }
    fs::remove_all(dir);
}

TEST_CASE("compare on an empty directory exits 2") {
    const fs::path dir = scratch_dir("compare_empty");
    CHECK(run_cli("compare --out " + dir.string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("gen-data exports one csv per client plus a test set") {
    const fs::path dir = scratch_dir("gendata");
    const fs::path cfg = write_config(dir);
    const fs::path out = dir / "data";
    REQUIRE(run_cli("gen-data --config " + cfg.string() + " --out " + out.string()) == 0);
    for (int j = 0; j < 5; ++j)
        CHECK(fs::exists(out / ("client_" + std::to_string(j) + ".csv")));
    CHECK(fs::exists(out / "test.csv"));
    fs::remove_all(dir);
}

TEST_CASE("inspect prints a round and fails cleanly on a missing one") {
    const fs::path dir = scratch_dir("inspect");
    const fs::path cfg = write_config(dir);
    const fs::path out = dir / "out";
    REQUIRE(run_cli("run --config " + cfg.string() + " --out " + out.string()) == 0);
    CHECK(run_cli("inspect --results " + (out / "pid.jsonl").string() + " --round 2") == 0);
    CHECK(run_cli("inspect --results " + (out / "pid.jsonl").string() + " --round 99") == 2);
    fs::remove_all(dir);
}
