#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "idecomp/linalg.hpp"
#include "idecomp/poset.hpp"

namespace idecomp::io {

using json = nlohmann::json;

/// Malformed input; `pointer` is a JSON pointer into the offending document.
class InputError : public std::runtime_error {
 public:
  InputError(std::string pointer, const std::string& what)
      : std::runtime_error(what + " at " + (pointer.empty() ? std::string("/") : pointer)), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

inline std::string child(const std::string& path, const std::string& key) {
  std::string escaped;
  for (char ch : key) {
    if (ch == '~') escaped += "~0";
    else if (ch == '/') escaped += "~1";
    else escaped.push_back(ch);
  }
  return path + "/" + escaped;
}

inline std::string child(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

inline json load_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw InputError("", "cannot open '" + file + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("", "'" + file + "' is not valid JSON: " + e.what());
  }
}

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw InputError(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw InputError(child(path, key), "missing required field '" + key + "'");
  return *it;
}

inline const json* optional_field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw InputError(path, "expected an object");
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double read_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw InputError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(path, "expected a finite number");
  return v;
}

inline std::size_t read_size(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw InputError(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

inline std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw InputError(path, "expected a string");
  return j.get<std::string>();
}

inline std::vector<std::string> read_strings(const json& j, const std::string& path) {
  if (!j.is_array()) throw InputError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_string(j[i], child(path, i)));
  return out;
}

/// `{"dim": [r, c], "data": [row-major]}` or a nested array of rows.
inline Matrix read_matrix(const json& j, const std::string& path) {
  if (j.is_object()) {
    const json& dim = require(j, "dim", path);
    const std::string dpath = child(path, "dim");
    if (!dim.is_array() || dim.size() != 2) throw InputError(dpath, "expected [rows, cols]");
    const auto r = read_size(dim[0], child(dpath, 0));
    const auto c = read_size(dim[1], child(dpath, 1));
    const json& data = require(j, "data", path);
    const std::string xpath = child(path, "data");
    if (!data.is_array() || data.size() != r * c)
      throw InputError(xpath, "expected " + std::to_string(r * c) + " entries for a " + std::to_string(r) + "x" +
                                  std::to_string(c) + " matrix");
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t k = 0; k < c; ++k)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = read_number(data[i * c + k], child(xpath, i * c + k));
    return m;
  }
  if (!j.is_array()) throw InputError(path, "expected a matrix");
  if (j.empty()) throw InputError(path, "nested-array matrices must have a row; use the dim form for empty shapes");
  std::size_t cols = 0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array()) throw InputError(child(path, i), "expected a row array");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols) throw InputError(child(path, i), "ragged matrix rows");
  }
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i)
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = read_number(j[i][k], child(child(path, i), k));
  return m;
}

inline Vector read_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw InputError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_number(j[i], child(path, i));
  return v;
}

/// `{"elements": [...], "covers": [[lower, upper], ...]}`, `{"power_set_of": [...]}`
/// or `{"chain": n}`.
inline Poset read_poset(const json& j, const std::string& path) {
  if (!j.is_object()) throw InputError(path, "expected a poset object");
  if (const json* ps = optional_field(j, "power_set_of", path)) {
    const auto items = read_strings(*ps, child(path, "power_set_of"));
    if (items.size() > 12) throw InputError(child(path, "power_set_of"), "power set of more than 12 items");
    return Poset::power_set(items);
  }
  if (const json* ch = optional_field(j, "chain", path)) {
    const auto n = read_size(*ch, child(path, "chain"));
    if (n == 0) throw InputError(child(path, "chain"), "chain needs at least one element");
    return Poset::chain(n);
  }
  const auto ids = read_strings(require(j, "elements", path), child(path, "elements"));
  std::vector<std::pair<std::string, std::string>> rel;
  if (const json* cov = optional_field(j, "covers", path)) {
    const std::string cpath = child(path, "covers");
    if (!cov->is_array()) throw InputError(cpath, "expected an array of [lower, upper] pairs");
    for (std::size_t i = 0; i < cov->size(); ++i) {
      const json& pr = (*cov)[i];
      if (!pr.is_array() || pr.size() != 2) throw InputError(child(cpath, i), "expected a [lower, upper] pair");
      rel.emplace_back(read_string(pr[0], child(child(cpath, i), 0)), read_string(pr[1], child(child(cpath, i), 1)));
      for (const auto& id : {rel.back().first, rel.back().second})
        if (std::find(ids.begin(), ids.end(), id) == ids.end())
          throw InputError(child(cpath, i), "unknown element '" + id + "'");
    }
  }
  try {
    return Poset::from_relation(ids, rel);
  } catch (const PosetError& e) {
    throw InputError(path, e.what());
  }
}

/// Overrides fields present in `{"rank": .., "orth": .., "proj": .., "eq": .., "pd": ..}`.
inline void read_tolerance(const json& j, const std::string& path, Tolerance& tol) {
  if (!j.is_object()) throw InputError(path, "expected a tolerance object");
  for (const auto& [key, val] : j.items()) {
    const double v = read_number(val, child(path, key));
    if (!(v > 0)) throw InputError(child(path, key), "tolerance must be positive");
    if (key == "rank") tol.rank = v;
    else if (key == "orth") tol.orth = v;
    else if (key == "proj") tol.proj = v;
    else if (key == "eq") tol.eq = v;
    else if (key == "pd") tol.pd = v;
    else throw InputError(child(path, key), "unknown tolerance field '" + key + "'");
  }
}

/// Rounded to 12 significant digits; -0 becomes 0.
inline double round12(double v) {
  if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;
}

/// Applies round12 to every float in the document.
inline json canonical(const json& j) {
  if (j.is_number_float()) return round12(j.get<double>());
  if (j.is_array()) {
    json out = json::array();
    for (const auto& e : j) out.push_back(canonical(e));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = canonical(v);
    return out;
  }
  return j;
}

inline json write_matrix(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  return json{{"dim", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// FNV-1a-64 of the compact, key-sorted serialization.
inline std::string spec_hash(const json& spec) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(spec.dump())));
  return buf;
}

}  // namespace idecomp::io
