// model_io.hpp — JSON model files. Matrices are nested arrays of [re, im]
// pairs; numbers survive a write/read round trip bit-exactly.

#pragma once

#include <fstream>

#include <json.hpp>

#include "oqs/model.hpp"

namespace oqs {

using Json = nlohmann::json;

inline Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const Json& j, const char* field) {
    if (!j.is_array() || j.empty())
        throw ConfigError(std::string("model_io: field '") + field + "' is not a matrix");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Json& row = j.at(r);
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError(std::string("model_io: ragged matrix in field '") + field + "'");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const Json& cell = row.at(c);
            if (!cell.is_array() || cell.size() != 2)
                throw ConfigError(std::string("model_io: entry of '") + field +
                                  "' is not an [re, im] pair");
            m(r, c) = Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
        }
    }
    return m;
}

inline Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(Json::array({v(i).real(), v(i).imag()}));
    return out;
}

inline Vector vector_from_json(const Json& j, const char* field) {
    if (!j.is_array()) throw ConfigError(std::string("model_io: field '") + field + "' is not a vector");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const Json& cell = j.at(i);
        if (!cell.is_array() || cell.size() != 2)
            throw ConfigError(std::string("model_io: entry of '") + field + "' is not an [re, im] pair");
        v(i) = Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
    }
    return v;
}

inline Json initial_state_to_json(const InitialState& s) {
    Json j;
    if (s.kind == StateKind::product) {
        j["kind"] = "product";
        j["c"] = vector_to_json(s.c);
        j["d"] = matrix_to_json(s.d);
    } else {
        j["kind"] = "entangled";
        j["a"] = matrix_to_json(s.a);
    }
    return j;
}

inline InitialState initial_state_from_json(const Json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "product")
        return InitialState::product_state(vector_from_json(j.at("c"), "c"),
                                           matrix_from_json(j.at("d"), "d"));
    if (kind == "entangled") return InitialState::entangled_state(matrix_from_json(j.at("a"), "a"));
    throw ConfigError("model_io: initial_state.kind must be 'product' or 'entangled'");
}

inline Json spec_to_json(const SystemSpec& spec, const InitialState* initial = nullptr) {
    Json j;
    j["d_S"] = spec.d_S;
    j["d_E"] = spec.d_E;
    j["H_S"] = matrix_to_json(spec.H_S.mat());
    j["H_E"] = matrix_to_json(spec.H_E.mat());
    j["H_SE"] = matrix_to_json(spec.H_SE.mat());
    if (initial) j["initial_state"] = initial_state_to_json(*initial);
    return j;
}

inline SystemSpec spec_from_json(const Json& j, const ToleranceConfig& tol = default_tol()) {
    SystemSpec spec;
    spec.d_S = j.at("d_S").get<int>();
    spec.d_E = j.at("d_E").get<int>();
    spec.H_S = HermitianMatrix(matrix_from_json(j.at("H_S"), "H_S"), tol);
    spec.H_E = HermitianMatrix(matrix_from_json(j.at("H_E"), "H_E"), tol);
    spec.H_SE = HermitianMatrix(matrix_from_json(j.at("H_SE"), "H_SE"), tol);
    spec.validate(tol);
    return spec;
}

inline void save_model(const std::string& path, const SystemSpec& spec,
                       const InitialState* initial = nullptr) {
    std::ofstream out(path);
    if (!out) throw ConfigError("model_io/save_model: cannot open " + path);
    out << spec_to_json(spec, initial).dump(2) << "\n";
}

inline std::pair<SystemSpec, std::optional<InitialState>> load_model(
    const std::string& path, const ToleranceConfig& tol = default_tol()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("model_io/load_model: cannot open " + path);
    Json j;
    in >> j;
    std::optional<InitialState> initial;
    if (j.contains("initial_state")) initial = initial_state_from_json(j.at("initial_state"));
    return {spec_from_json(j, tol), initial};
}

}  // namespace oqs
