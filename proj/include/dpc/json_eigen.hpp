#pragma once

// Conversions between Eigen dense types and JSON arrays.
// Matrices are row-major nested arrays unless stated otherwise.

#include "dpc/types.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>

namespace dpc {

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      j.push_back(v(i));
    } else {
      j.push_back(v(i) > 0 ? "inf" : "-inf");
    }
  }
  return j;
}

inline double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::parse, "expected number, got string '" + s + "'");
  }
  if (!j.is_number()) throw Error(ErrorKind::parse, "expected number");
  return j.get<double>();
}

inline Vector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorKind::parse, "expected array for vector");
  Vector v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number_from_json(j[i]);
  return v;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) j.push_back(vector_to_json(m.row(r).transpose()));
  return j;
}

/// Row-major nested array; `cols` is needed when there are no rows.
inline Matrix matrix_from_json(const nlohmann::json& j, Index cols = -1) {
  if (!j.is_array()) throw Error(ErrorKind::parse, "expected array of rows for matrix");
  if (j.empty()) return Matrix::Zero(0, std::max<Index>(cols, 0));
  const Index c = static_cast<Index>(j[0].size());
  Matrix m(static_cast<Index>(j.size()), c);
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || static_cast<Index>(j[r].size()) != c)
      throw Error(ErrorKind::parse, "ragged matrix rows");
    m.row(static_cast<Index>(r)) = vector_from_json(j[r]).transpose();
  }
  return m;
}

/// Throws Error{parse} naming the first key of `j` not in `allowed`.
inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                                const std::string& context) {
  if (!j.is_object()) throw Error(ErrorKind::parse, context + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* a : allowed) known = known || it.key() == a;
    if (!known) throw Error(ErrorKind::parse, context + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace dpc
