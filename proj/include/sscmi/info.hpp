#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sscmi/discrete_joint.hpp"
#include "sscmi/util.hpp"

namespace sscmi {

using Names = std::vector<std::string>;

/// Information quantity in nats.
struct InfoValue {
  enum class Mode { exact, plug_in };

  double nats = 0.0;       // clamped at 0
  double raw = 0.0;        // before clamping
  Mode mode = Mode::exact;
  std::optional<double> std_error;
  bool infinite = false;

  static constexpr double clamp_tol = 1e-12;
  // Below this the sum is rounding residue of cancelling log terms; reported as 0
  // so square-root chains do not amplify it.
  static constexpr double noise_floor = 1e-14;

  static InfoValue from_raw(double raw, Mode mode = Mode::exact) {
    InfoValue v;
    v.raw = raw;
    v.mode = mode;
    v.nats = raw < noise_floor ? 0.0 : raw;
    return v;
  }
  static InfoValue infinity() {
    InfoValue v;
    v.raw = v.nats = INFINITY;
    v.infinite = true;
    return v;
  }
};

/// Neumaier summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// -sum p log p over the named sub-tuple (sub-measures allowed).
inline double entropy(const DiscreteJoint& joint, const Names& names) {
  TupleIndexer idx(joint.columns(names));
  std::vector<double> mass;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const auto id = idx.id(joint.row(i));
    if (id == mass.size()) mass.push_back(0.0);
    mass[id] += joint.prob(i);
  }
  double h = 0.0;
  for (double p : mass)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

/// KL(p || q) for two probability vectors over the same ordered support.
inline InfoValue kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw SchemaError("kl_divergence: supports differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("kl_divergence: negative probability");
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return InfoValue::infinity();
    s += p[i] * std::log(p[i] / q[i]);
  }
  return InfoValue::from_raw(s);
}

/// KL between two tables over the same schema; atoms are matched by value.
inline InfoValue kl_divergence(const DiscreteJoint& p, const DiscreteJoint& q) {
  if (p.schema() != q.schema()) throw SchemaError("kl_divergence: schemas differ");
  std::vector<std::size_t> all(p.width());
  for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
  TupleIndexer idx(all);
  std::vector<double> pm, qm;
  auto add = [&](const DiscreteJoint& j, std::vector<double>& mine, std::vector<double>& other) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto id = idx.id(j.row(i));
      if (id == mine.size()) {
        mine.push_back(0.0);
        other.push_back(0.0);
      }
      mine[id] += j.prob(i);
    }
  };
  add(p, pm, qm);
  add(q, qm, pm);
  return kl_divergence(pm, qm);
}

/// I(X;Y|G) = sum p(x,y,g) log[p(x,y,g) p(g) / (p(x,g) p(y,g))].
///
/// Works on sub-probability tables too: the result is then
/// sum over retained g of P(g) I(X;Y|G=g), which is what restricted
/// (e.g. query-indicator) decompositions need. An empty G gives plain MI.
inline InfoValue conditional_mutual_information(const DiscreteJoint& joint, const Names& x, const Names& y,
                                                const Names& g) {
  const auto cx = joint.columns(x), cy = joint.columns(y), cg = joint.columns(g);
  auto cat = [](std::initializer_list<const std::vector<std::size_t>*> parts) {
    std::vector<std::size_t> out;
    for (auto* p : parts) out.insert(out.end(), p->begin(), p->end());
    return out;
  };
  TupleIndexer ig(cg), ixg(cat({&cx, &cg})), iyg(cat({&cy, &cg})), ixyg(cat({&cx, &cy, &cg}));
  // Compensated sums keep cancelling log-ratios at rounding level even over many atoms.
  std::vector<CompensatedSum> pg, pxg, pyg;
  struct Cell {
    CompensatedSum p;
    std::size_t xg, yg, g;
  };
  std::vector<Cell> cells;
  auto bump = [](std::vector<CompensatedSum>& v, std::size_t id, double p) {
    if (id == v.size()) v.emplace_back();
    v[id].add(p);
  };
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const auto r = joint.row(i);
    const double p = joint.prob(i);
    const auto a = ig.id(r), b = ixg.id(r), c = iyg.id(r), d = ixyg.id(r);
    bump(pg, a, p);
    bump(pxg, b, p);
    bump(pyg, c, p);
    if (d == cells.size()) cells.push_back({{}, b, c, a});
    cells[d].p.add(p);
  }
  CompensatedSum s;
  for (const auto& cell : cells) {
    const double p = cell.p.value();
    if (p <= 0.0) continue;
    s.add(p * std::log(p * pg[cell.g].value() / (pxg[cell.xg].value() * pyg[cell.yg].value())));
  }
  return InfoValue::from_raw(s.value());
}

inline InfoValue conditional_mutual_information(const DiscreteJoint& joint, const std::string& x,
                                                const std::string& y, const Names& g) {
  return conditional_mutual_information(joint, Names{x}, Names{y}, g);
}

inline InfoValue mutual_information(const DiscreteJoint& joint, const Names& x, const Names& y) {
  return conditional_mutual_information(joint, x, y, {});
}

inline InfoValue mutual_information(const DiscreteJoint& joint, const std::string& x, const std::string& y) {
  return conditional_mutual_information(joint, Names{x}, Names{y}, {});
}

/// Per-round selector information and its sum.
struct ScmiBudget {
  std::vector<InfoValue> terms;
  double total = 0.0;
};

inline ScmiBudget scmi_budget(const DiscreteJoint& joint, const Names& loss_names, const Names& selector_names,
                              const std::vector<Names>& context_names) {
  if (loss_names.size() != selector_names.size() || loss_names.size() != context_names.size())
    throw SchemaError("scmi_budget: per-round name lists differ in length");
  ScmiBudget out;
  for (std::size_t t = 0; t < loss_names.size(); ++t) {
    out.terms.push_back(conditional_mutual_information(joint, Names{loss_names[t]}, Names{selector_names[t]},
                                                       context_names[t]));
    out.total += out.terms.back().nats;
  }
  return out;
}

/// Nearest point of a sorted grid; used to bin Monte Carlo losses.
inline double snap_to_grid(double v, std::span<const double> grid) {
  if (grid.empty()) return v;
  auto it = std::lower_bound(grid.begin(), grid.end(), v);
  if (it == grid.end()) return grid.back();
  if (it == grid.begin()) return *it;
  return (*it - v) < (v - *(it - 1)) ? *it : *(it - 1);
}

/// Empirical table from equally weighted sample rows. Columns listed in
/// `binned` are snapped onto `grid` first.
inline DiscreteJoint empirical_joint(const Names& schema, const std::vector<std::vector<double>>& samples,
                                     const Names& binned = {}, std::span<const double> grid = {}) {
  DiscreteJoint out(schema);
  if (samples.empty()) return out;
  const auto bcols = out.columns(binned);
  const double w = 1.0 / static_cast<double>(samples.size());
  std::vector<double> buf;
  for (const auto& s : samples) {
    buf = s;
    for (auto c : bcols) buf[c] = snap_to_grid(buf[c], grid);
    out.add_atom(buf, w);
  }
  return out;
}

/// Plug-in CMI over sampled rows; mode is tagged plug_in.
inline InfoValue plug_in_cmi(const DiscreteJoint& empirical, const Names& x, const Names& y, const Names& g) {
  auto v = conditional_mutual_information(empirical, x, y, g);
  v.mode = InfoValue::Mode::plug_in;
  return v;
}

}  // namespace sscmi
