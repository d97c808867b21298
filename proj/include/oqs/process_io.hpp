// process_io.hpp — JSON process files: an ordered list of step descriptors
// (unitary, kraus, break) plus the inter-step evolution time.

#pragma once

#include "oqs/model_io.hpp"
#include "oqs/stochastic.hpp"

namespace oqs {

inline Json device_to_json(const Device& dev) {
    Json j;
    if (const auto* u = std::get_if<UnitaryDevice>(&dev)) {
        j["type"] = "unitary";
        j["u"] = matrix_to_json(u->u);
        return j;
    }
    if (const auto* k = std::get_if<KrausDevice>(&dev)) {
        j["type"] = "kraus";
        Json ops = Json::array();
        for (const Matrix& op : k->kraus) ops.push_back(matrix_to_json(op));
        j["kraus"] = std::move(ops);
        j["trace_preserving"] = k->trace_preserving;
        return j;
    }
    const auto& br = std::get<CausalBreak>(dev);
    j["type"] = "break";
    Json projectors = Json::array();
    for (const Matrix& pi : br.projectors) projectors.push_back(matrix_to_json(pi));
    Json repreps = Json::array();
    for (const Matrix& p : br.repreparations) repreps.push_back(matrix_to_json(p));
    j["projectors"] = std::move(projectors);
    j["repreparations"] = std::move(repreps);
    j["outcome"] = br.outcome;
    j["reprep"] = br.reprep;
    j["seed"] = br.seed;
    return j;
}

inline Device device_from_json(const Json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "unitary") return UnitaryDevice{matrix_from_json(j.at("u"), "u")};
    if (type == "kraus") {
        KrausDevice dev;
        for (const Json& op : j.at("kraus")) dev.kraus.push_back(matrix_from_json(op, "kraus"));
        dev.trace_preserving = j.value("trace_preserving", true);
        return dev;
    }
    if (type == "break") {
        CausalBreak br;
        for (const Json& pi : j.at("projectors"))
            br.projectors.push_back(matrix_from_json(pi, "projectors"));
        for (const Json& p : j.at("repreparations"))
            br.repreparations.push_back(matrix_from_json(p, "repreparations"));
        br.outcome = j.value("outcome", -1);
        br.reprep = j.value("reprep", 0);
        br.seed = j.value("seed", std::uint64_t{0});
        return br;
    }
    throw ConfigError("process_io: step type must be unitary, kraus, or break");
}

inline Json process_record_to_json(const ProcessRecord& record) {
    Json j;
    j["dt"] = record.dt;
    Json steps = Json::array();
    for (const Device& dev : record.steps) steps.push_back(device_to_json(dev));
    j["steps"] = std::move(steps);
    return j;
}

inline ProcessRecord process_record_from_json(const Json& j) {
    ProcessRecord record;
    record.dt = j.value("dt", 1.0);
    if (!j.contains("steps") || !j.at("steps").is_array())
        throw ConfigError("process_io: 'steps' must be a list of step descriptors");
    for (const Json& step : j.at("steps")) record.steps.push_back(device_from_json(step));
    return record;
}

inline void save_process(const std::string& path, const ProcessRecord& record) {
    std::ofstream out(path);
    if (!out) throw ConfigError("process_io/save_process: cannot open " + path);
    out << process_record_to_json(record).dump(2) << "\n";
}

inline ProcessRecord load_process(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("process_io/load_process: cannot open " + path);
    Json j;
    in >> j;
    return process_record_from_json(j);
}

}  // namespace oqs
