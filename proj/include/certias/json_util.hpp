#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <string>
#include <vector>

#include "certias/errors.hpp"

namespace certias::json_util {

using json = nlohmann::json;

inline Eigen::VectorXd to_vector(const json& j, const std::string& what)
{
    if (!j.is_array()) throw InputError(what + ": expected an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InputError(what + ": entry " + std::to_string(i) + " is not a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

/// Row-major nested arrays. An empty outer array yields a 0 x `cols_if_empty` matrix.
inline Eigen::MatrixXd to_matrix(const json& j, const std::string& what, Eigen::Index cols_if_empty = 0)
{
    if (!j.is_array()) throw InputError(what + ": expected a nested array");
    if (j.empty()) return Eigen::MatrixXd(0, cols_if_empty);
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Eigen::MatrixXd M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw InputError(what + ": ragged or non-array row " + std::to_string(r));
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) throw InputError(what + ": non-numeric entry");
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
    }
    return M;
}

inline json from_vector(const Eigen::VectorXd& v)
{
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

inline json from_matrix(const Eigen::MatrixXd& M)
{
    json j = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        j.push_back(std::move(row));
    }
    return j;
}

inline const json& require(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field \"") + key + "\"");
    return j.at(key);
}

}  // namespace certias::json_util
