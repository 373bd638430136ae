#ifndef MIXFREQ_JSON_IO_HPP
#define MIXFREQ_JSON_IO_HPP

#include <Eigen/Core>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>

namespace mixfreq::jsonio {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Eigen::MatrixXd(0, 0);
    const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j.at(i).size()) != cols)
            throw std::runtime_error("matrix_from_json: ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
    }
    return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
    return v;
}

inline void write_json_file(const nlohmann::json& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << doc.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return nlohmann::json::parse(in);
}

/// Check the format/version header of a serialized model document.
inline void expect_format(const nlohmann::json& doc, const std::string& type, int version) {
    if (doc.value("format", "") != "mixfreq-model")
        throw std::runtime_error("not a mixfreq model file");
    if (doc.value("type", "") != type)
        throw std::runtime_error("expected model type '" + type + "', found '" +
                                 doc.value("type", "") + "'");
    if (doc.value("version", 0) != version)
        throw std::runtime_error("unsupported model version for type '" + type + "'");
}

}  // namespace mixfreq::jsonio

#endif  // MIXFREQ_JSON_IO_HPP
