#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsim/engine.hpp"
#include "fedsim/errors.hpp"

namespace fedsim {

// Line-delimited records, one JSON object per round. Key order is fixed so
// identical runs produce byte-identical streams. Wall time deliberately goes
// to the run summary instead of this stream, which must be reproducible.
inline nlohmann::ordered_json to_json(const RoundRecord& rec) {
    nlohmann::ordered_json obj;
    obj["round"] = rec.round;
    obj["selected"] = rec.selected_ids;
    nlohmann::ordered_json clients = nlohmann::ordered_json::array();
    for (const auto& c : rec.clients) {
        clients.push_back({{"id", c.id},
                           {"cost", c.cost},
                           {"weight", c.weight},
                           {"p", c.p_term},
                           {"d", c.d_term},
                           {"i", c.i_term}});
    }
    obj["clients"] = std::move(clients);
    obj["global_loss"] = rec.global_loss;
    return obj;
}

inline RoundRecord round_record_from_json(const nlohmann::ordered_json& obj) {
    RoundRecord rec;
    rec.round = obj.at("round").get<int>();
    rec.selected_ids = obj.at("selected").get<std::vector<int>>();
    for (const auto& c : obj.at("clients")) {
        rec.clients.push_back({c.at("id").get<int>(), c.at("cost").get<double>(),
                               c.at("weight").get<double>(), c.at("p").get<double>(),
                               c.at("d").get<double>(), c.at("i").get<double>()});
    }
    rec.global_loss = obj.at("global_loss").get<double>();
    return rec;
}

inline void write_records(const std::string& path, const std::vector<RoundRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open results file for writing: " + path);
    for (const auto& rec : records) out << to_json(rec).dump() << "\n";
}

inline std::vector<RoundRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open results file: " + path);
    std::vector<RoundRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(round_record_from_json(nlohmann::ordered_json::parse(line)));
    }
    return records;
}

}  // namespace fedsim
