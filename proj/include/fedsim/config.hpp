#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fedsim/engine.hpp"
#include "fedsim/errors.hpp"

namespace fedsim {

// One named simulation sharing the federation (task, data, seed) with its
// siblings but free to vary strategy and selection.
struct NamedConfig {
    std::string name;
    SimulationConfig config;
};

struct ExperimentSpec {
    std::vector<NamedConfig> members;
};

namespace detail {

struct ConfigLine {
    int number;
    std::string key;
    std::string value;
};

struct ConfigSection {
    std::string header;
    int line_number;
    std::vector<ConfigLine> entries;
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// INI-ish: [section] headers, key = value lines, # comments.
inline std::vector<ConfigSection> parse_sections(std::istream& in, const std::string& origin) {
    std::vector<ConfigSection> sections;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
            sections.push_back({trim(line.substr(1, line.size() - 2)), line_no, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        if (sections.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": key outside any section");
        sections.back().entries.push_back(
            {line_no, trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
    }
    return sections;
}

// Typed accessor over one section; unknown keys are hard errors so a typo in
// a hyperparameter cannot silently corrupt an experiment.
class SectionReader {
public:
    SectionReader(const ConfigSection& section, const std::string& origin)
        : section_(section), origin_(origin) {}

    bool has(const std::string& key) {
        for (const auto& e : section_.entries) {
            if (e.key == key) return true;
        }
        return false;
    }

    std::string get_string(const std::string& key) {
        for (const auto& e : section_.entries) {
            if (e.key == key) {
                consumed_.push_back(key);
                return e.value;
            }
        }
        throw ConfigError(origin_ + ":" + std::to_string(section_.line_number) +
                          ": section [" + section_.header + "] missing key '" + key + "'");
    }

    std::string get_string(const std::string& key, const std::string& fallback) {
        return has(key) ? get_string(key) : (consumed_.push_back(key), fallback);
    }

    double get_double(const std::string& key) { return parse_double(key, get_string(key)); }
    double get_double(const std::string& key, double fallback) {
        return has(key) ? get_double(key) : (consumed_.push_back(key), fallback);
    }

    long get_int(const std::string& key) { return parse_int(key, get_string(key)); }
    long get_int(const std::string& key, long fallback) {
        return has(key) ? get_int(key) : (consumed_.push_back(key), fallback);
    }

    // Call after reading everything the section supports.
    void reject_unknown_keys() const {
        for (const auto& e : section_.entries) {
            bool known = false;
            for (const auto& k : consumed_) {
                if (k == e.key) known = true;
            }
            if (!known)
                throw ConfigError(origin_ + ":" + std::to_string(e.number) + ": unknown key '" +
                                  e.key + "' in section [" + section_.header + "]");
        }
    }

private:
    double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key '" + key + "': not a number: '" + v + "'");
        }
    }
    long parse_int(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            long n = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return n;
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key '" + key + "': not an integer: '" + v + "'");
        }
    }

    const ConfigSection& section_;
    std::string origin_;
    std::vector<std::string> consumed_;
};

inline void read_strategy_keys(SectionReader& r, SimulationConfig& cfg) {
    const Strategy strategy = strategy_from_string(r.get_string("strategy"));
    switch (strategy) {
        case Strategy::fed_avg:
            cfg.strategy = StrategyParams::fed_avg();
            break;
        case Strategy::fed_cost_w_avg:
            cfg.strategy = StrategyParams::fed_cost_w_avg(r.get_double("alpha", 0.5));
            break;
        case Strategy::fed_pid_avg:
        case Strategy::fed_pid: {
            const double a = r.get_double("alpha", 0.45);
            const double b = r.get_double("beta", 0.45);
            const double g = r.get_double("gamma", 0.10);
            cfg.strategy = strategy == Strategy::fed_pid_avg ? StrategyParams::fed_pid_avg(a, b, g)
                                                            : StrategyParams::fed_pid(a, b, g);
            cfg.strategy.integral_window = static_cast<int>(r.get_int("integral_window", 6));
            if (strategy == Strategy::fed_pid) {
                const std::string scope = r.get_string("fedpid_i_scope", "per_client");
                if (scope == "per_client")
                    cfg.strategy.i_scope = FedPidIScope::per_client;
                else if (scope == "global_mean")
                    cfg.strategy.i_scope = FedPidIScope::global_mean;
                else
                    throw ConfigError("fedpid_i_scope must be per_client or global_mean, got: " + scope);
            }
            break;
        }
    }
    // per-strategy overrides of the shared selection / scope settings
    if (r.has("rule")) cfg.selection_rule = selection_rule_from_string(r.get_string("rule"));
    if (r.has("include_outliers_every"))
        cfg.include_outliers_every = static_cast<int>(r.get_int("include_outliers_every"));
    if (r.has("aggregate_scope"))
        cfg.aggregate_scope = aggregate_scope_from_string(r.get_string("aggregate_scope"));
}

}  // namespace detail

inline ExperimentSpec parse_experiment_spec(std::istream& in, const std::string& origin) {
    const auto sections = detail::parse_sections(in, origin);

    SimulationConfig base;
    bool saw_federation = false;
    ExperimentSpec spec;

    for (const auto& section : sections) {
        detail::SectionReader r(section, origin);
        if (section.header == "federation") {
            saw_federation = true;
            base.task.kind = task_kind_from_string(r.get_string("task"));
            base.task.input_dim = static_cast<int>(r.get_int("input_dim"));
            base.task.hidden_dim = static_cast<int>(r.get_int("hidden_dim", 0));
            base.n_clients = static_cast<int>(r.get_int("n_clients"));
            base.lambda = r.get_double("lambda");
            base.heterogeneity = r.get_double("heterogeneity", 0.0);
            base.rounds = static_cast<int>(r.get_int("rounds"));
            base.test_size = static_cast<std::size_t>(r.get_int("test_size", 256));
            base.noise_std = r.get_double("noise_std", 0.1);
            base.master_seed = static_cast<std::uint64_t>(r.get_int("master_seed", 0));
            r.reject_unknown_keys();
        } else if (section.header == "training") {
            base.training.epochs = static_cast<int>(r.get_int("epochs", 1));
            base.training.batch_size = static_cast<int>(r.get_int("batch_size", 8));
            base.training.learning_rate = r.get_double("learning_rate", 0.05);
            r.reject_unknown_keys();
        } else if (section.header == "selection") {
            base.selection_rule = selection_rule_from_string(r.get_string("rule", "all"));
            base.include_outliers_every =
                static_cast<int>(r.get_int("include_outliers_every", 0));
            r.reject_unknown_keys();
        } else if (section.header.rfind("strategy ", 0) == 0) {
            // handled on a second pass so shared sections may appear in any order
        } else {
            throw ConfigError(origin + ":" + std::to_string(section.line_number) +
                              ": unknown section [" + section.header + "]");
        }
    }
    if (!saw_federation) throw ConfigError(origin + ": missing [federation] section");

    for (const auto& section : sections) {
        if (section.header.rfind("strategy ", 0) != 0) continue;
        const std::string name = detail::trim(section.header.substr(9));
        if (name.empty())
            throw ConfigError(origin + ":" + std::to_string(section.line_number) +
                              ": strategy section needs a name");
        for (const auto& m : spec.members) {
            if (m.name == name)
                throw ConfigError(origin + ": duplicate strategy name '" + name + "'");
        }
        detail::SectionReader r(section, origin);
        NamedConfig member{name, base};
        detail::read_strategy_keys(r, member.config);
        r.reject_unknown_keys();
        member.config.validate();
        spec.members.push_back(std::move(member));
    }
    if (spec.members.empty())
        throw ConfigError(origin + ": no [strategy <name>] sections found");
    return spec;
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_experiment_spec(in, path);
}

}  // namespace fedsim
