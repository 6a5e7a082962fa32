#pragma once

#include <algorithm>
#include <concepts>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <boost/container_hash/hash.hpp>

#include "sscmi/util.hpp"

namespace sscmi {

/// Exact finite probability table over named coordinates.
///
/// Atoms are stored row-major in one flat buffer; every coordinate value is a
/// number (categorical coordinates hold integer codes). The probability type
/// is a parameter so identity checks can run in exact rational arithmetic.
template <class P>
class BasicDiscreteJoint {
 public:
  using value_type = P;

  BasicDiscreteJoint() = default;

  explicit BasicDiscreteJoint(std::vector<std::string> schema) : schema_(std::move(schema)) {
    for (std::size_t i = 0; i < schema_.size(); ++i) {
      if (schema_[i].empty()) throw SchemaError("empty coordinate name");
      if (!index_.emplace(schema_[i], i).second) throw SchemaError("duplicate coordinate name: " + schema_[i]);
    }
  }

  [[nodiscard]] const std::vector<std::string>& schema() const noexcept { return schema_; }
  [[nodiscard]] std::size_t width() const noexcept { return schema_.size(); }
  [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
  [[nodiscard]] bool empty() const noexcept { return probs_.empty(); }

  [[nodiscard]] bool has(std::string_view name) const { return index_.find(std::string(name)) != index_.end(); }

  [[nodiscard]] std::size_t column(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw SchemaError("unknown coordinate: " + std::string(name));
    return it->second;
  }

  [[nodiscard]] std::vector<std::size_t> columns(std::span<const std::string> names) const {
    std::vector<std::size_t> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(column(n));
    return out;
  }

  void reserve(std::size_t atoms) {
    probs_.reserve(atoms);
    values_.reserve(atoms * width());
  }

  void add_atom(std::span<const P> values, P prob) {
    if (values.size() != width()) throw SchemaError("atom width does not match schema");
    if (prob < P(0)) throw std::invalid_argument("negative probability");
    values_.insert(values_.end(), values.begin(), values.end());
    probs_.push_back(std::move(prob));
  }

  [[nodiscard]] const P& prob(std::size_t i) const { return probs_[i]; }
  [[nodiscard]] std::span<const P> row(std::size_t i) const { return {values_.data() + i * width(), width()}; }
  [[nodiscard]] const P& at(std::size_t i, std::size_t c) const { return values_[i * width() + c]; }

  [[nodiscard]] P total_mass() const {
    P s(0);
    for (const auto& p : probs_) s += p;
    return s;
  }

  /// Throws unless probabilities sum to one within `tol`.
  void check_closure(double tol = 1e-12) const {
    const double err = std::abs(static_cast<double>(total_mass() - P(1)));
    if (!(err <= tol)) {
      std::ostringstream os;
      os << "probabilities sum to 1 + " << static_cast<double>(total_mass() - P(1)) << " (tolerance " << tol << ")";
      throw std::domain_error(os.str());
    }
  }

  /// Sum of p(atom) * f(row) over all atoms.
  template <class F>
    requires std::invocable<F, std::span<const P>>
  [[nodiscard]] P expect(F&& f) const {
    P s(0);
    for (std::size_t i = 0; i < size(); ++i) s += probs_[i] * static_cast<P>(f(row(i)));
    return s;
  }

  [[nodiscard]] P expect(std::string_view name) const {
    const auto c = column(name);
    return expect([c](std::span<const P> r) { return r[c]; });
  }

  /// Copy with one derived coordinate appended.
  template <class F>
  [[nodiscard]] BasicDiscreteJoint with_column(std::string name, F&& f) const {
    auto names = schema_;
    names.push_back(std::move(name));
    BasicDiscreteJoint out(std::move(names));
    out.reserve(size());
    std::vector<P> buf(width() + 1);
    for (std::size_t i = 0; i < size(); ++i) {
      auto r = row(i);
      std::copy(r.begin(), r.end(), buf.begin());
      buf.back() = static_cast<P>(f(r));
      out.add_atom(buf, probs_[i]);
    }
    return out;
  }

  /// Sub-probability table restricted to atoms satisfying `pred` (not renormalized).
  template <class Pred>
  [[nodiscard]] BasicDiscreteJoint filter(Pred&& pred) const {
    BasicDiscreteJoint out(schema_);
    for (std::size_t i = 0; i < size(); ++i)
      if (pred(row(i))) out.add_atom(row(i), probs_[i]);
    return out;
  }

  /// Law of the named sub-tuple; equal value tuples are merged.
  [[nodiscard]] BasicDiscreteJoint marginal(std::span<const std::string> names) const {
    const auto cols = columns(names);
    std::map<std::vector<P>, P> acc;
    std::vector<P> key(cols.size());
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t k = 0; k < cols.size(); ++k) key[k] = at(i, cols[k]);
      acc[key] += probs_[i];
    }
    BasicDiscreteJoint out(std::vector<std::string>(names.begin(), names.end()));
    out.reserve(acc.size());
    for (const auto& [k, p] : acc) out.add_atom(k, p);
    return out;
  }

  [[nodiscard]] BasicDiscreteJoint marginal(std::initializer_list<std::string> names) const {
    std::vector<std::string> v(names);
    return marginal(std::span<const std::string>(v));
  }

 private:
  std::vector<std::string> schema_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<P> values_;
  std::vector<P> probs_;
};

using DiscreteJoint = BasicDiscreteJoint<double>;

/// Canonical integer key of a coordinate value. Values closer than 2^-32
/// share a key, so losses computed along different arithmetic paths still
/// group together.
inline std::int64_t value_key(double v) { return std::llround(v * 4294967296.0); }

/// Dense ids for value tuples over a fixed set of columns.
class TupleIndexer {
 public:
  explicit TupleIndexer(std::vector<std::size_t> cols) : cols_(std::move(cols)) {}

  std::size_t id(std::span<const double> row) {
    key_.resize(cols_.size());
    for (std::size_t k = 0; k < cols_.size(); ++k) key_[k] = value_key(row[cols_[k]]);
    auto [it, inserted] = ids_.try_emplace(key_, ids_.size());
    return it->second;
  }

  [[nodiscard]] std::size_t count() const noexcept { return ids_.size(); }

 private:
  struct Hash {
    std::size_t operator()(const std::vector<std::int64_t>& v) const noexcept { return boost::hash_range(v.begin(), v.end()); }
  };
  std::vector<std::size_t> cols_;
  std::vector<std::int64_t> key_;
  std::unordered_map<std::vector<std::int64_t>, std::size_t, Hash> ids_;
};

/// Interns arbitrary integer tuples (histories, rows, contexts) as dense codes.
class Interner {
 public:
  std::size_t code(const std::vector<std::int64_t>& key) {
    auto [it, inserted] = ids_.try_emplace(key, keys_.size());
    if (inserted) keys_.push_back(key);
    return it->second;
  }
  [[nodiscard]] const std::vector<std::int64_t>& key(std::size_t code) const { return keys_.at(code); }
  [[nodiscard]] std::size_t size() const noexcept { return keys_.size(); }

 private:
  struct Hash {
    std::size_t operator()(const std::vector<std::int64_t>& v) const noexcept { return boost::hash_range(v.begin(), v.end()); }
  };
  std::unordered_map<std::vector<std::int64_t>, std::size_t, Hash> ids_;
  std::vector<std::vector<std::int64_t>> keys_;
};

/// CSV with a header naming each coordinate, plus a trailing "probability" column.
inline void write_csv(std::ostream& os, const DiscreteJoint& joint) {
  for (const auto& name : joint.schema()) os << name << ',';
  os << "probability\n";
  for (std::size_t i = 0; i < joint.size(); ++i) {
    for (double v : joint.row(i)) os << format_number(v) << ',';
    os << format_number(joint.prob(i)) << '\n';
  }
}

inline DiscreteJoint read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("joint CSV: missing header");
  auto header = split_view(line, ',');
  if (header.empty() || header.back() != "probability") throw SchemaError("joint CSV: last column must be 'probability'");
  std::vector<std::string> names;
  for (std::size_t i = 0; i + 1 < header.size(); ++i) names.emplace_back(header[i]);
  DiscreteJoint joint(names);
  std::vector<double> vals(names.size());
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_view(line, ',');
    if (cells.size() != names.size() + 1)
      throw SchemaError("joint CSV line " + std::to_string(line_no) + ": wrong number of cells");
    for (std::size_t k = 0; k < names.size(); ++k) vals[k] = parse_number(cells[k]);
    joint.add_atom(vals, parse_number(cells.back()));
  }
  return joint;
}

}  // namespace sscmi
