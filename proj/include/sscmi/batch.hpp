#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sscmi/bounds.hpp"
#include "sscmi/discrete_joint.hpp"
#include "sscmi/info.hpp"
#include "sscmi/util.hpp"

namespace sscmi {

/// Finite set of label-valued functions on {0, ..., domain_size - 1}.
using FunctionTable = std::vector<std::vector<int>>;

/// Largest set of points shattered by a class of binary functions (brute force).
inline int vc_dimension(const FunctionTable& fns, std::size_t domain_size) {
  if (fns.empty()) return -1;
  if (domain_size > 20) throw std::invalid_argument("vc_dimension: domain too large for brute force");
  int best = 0;
  const std::uint32_t full = 1u << domain_size;
  for (std::uint32_t set = 1; set < full; ++set) {
    const int k = std::popcount(set);
    if (k <= best || (std::size_t{1} << k) > fns.size()) continue;
    std::vector<char> seen(std::size_t{1} << k, 0);
    std::size_t distinct = 0;
    for (const auto& f : fns) {
      std::size_t pattern = 0, bit = 0;
      for (std::size_t x = 0; x < domain_size; ++x)
        if (set >> x & 1u) pattern |= static_cast<std::size_t>(f[x] != 0) << bit++;
      if (!seen[pattern]) {
        seen[pattern] = 1;
        ++distinct;
      }
    }
    if (distinct == seen.size()) best = k;
  }
  return best;
}

/// max{(d + 1) log 2, d log(2 e n / d)}; d = 0 gives log 2.
inline double vc_pattern_bound(int d, int n) {
  if (d < 0 || n < 1) throw std::invalid_argument("vc_pattern_bound: need d >= 0 and n >= 1");
  const double a = (d + 1) * std::numbers::ln2;
  if (d == 0) return a;
  return std::max(a, d * std::log(2.0 * std::numbers::e * n / d));
}

/// Batch supervised world: Z = X x Y with law D, and a finite hypothesis class.
struct BatchWorld {
  std::size_t num_x = 2;
  std::size_t num_y = 2;
  std::vector<double> pxy;     // D(x, y) at x * num_y + y
  FunctionTable hypotheses;    // hypotheses[k][x] = predicted label
  std::optional<PairTable> pair;  // row law; default D x D (only that case is a batch supersample)

  [[nodiscard]] std::size_t num_atoms() const { return num_x * num_y; }

  void validate() const {
    if (num_x == 0 || num_y == 0) throw std::invalid_argument("batch world: empty domain");
    if (pxy.size() != num_atoms()) throw std::invalid_argument("batch world: D must cover X x Y");
    double s = 0.0;
    for (double p : pxy) {
      if (p < 0.0) throw std::invalid_argument("batch world: negative probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("batch world: D does not sum to 1");
    if (hypotheses.empty()) throw std::invalid_argument("batch world: no hypotheses");
    for (const auto& h : hypotheses) {
      if (h.size() != num_x) throw std::invalid_argument("batch world: hypothesis must label every x");
      for (int y : h)
        if (y < 0 || static_cast<std::size_t>(y) >= num_y) throw std::invalid_argument("batch world: label out of range");
    }
    if (pair && pair->size() != num_atoms() * num_atoms()) throw std::invalid_argument("batch world: pair table size");
  }

  [[nodiscard]] double loss(std::size_t h, std::size_t z) const {
    return hypotheses[h][z / num_y] == static_cast<int>(z % num_y) ? 0.0 : 1.0;
  }

  [[nodiscard]] double population_risk(std::size_t h) const {
    double r = 0.0;
    for (std::size_t z = 0; z < num_atoms(); ++z) r += pxy[z] * loss(h, z);
    return r;
  }
};

/// ERM (ties to the lowest index) or Gibbs P(h) proportional to exp(-eta n L_S(h)).
struct BatchLearner {
  enum class Kind { erm, gibbs, constant };
  Kind kind = Kind::erm;
  double eta = 1.0;
  std::size_t constant_index = 0;

  [[nodiscard]] std::vector<double> posterior(const BatchWorld& w, std::span<const std::size_t> sample) const {
    const auto H = w.hypotheses.size();
    std::vector<double> risk(H, 0.0);
    for (std::size_t h = 0; h < H; ++h)
      for (auto z : sample) risk[h] += w.loss(h, z);
    std::vector<double> p(H, 0.0);
    switch (kind) {
      case Kind::constant:
        p.at(constant_index) = 1.0;
        break;
      case Kind::erm:
        p[static_cast<std::size_t>(std::min_element(risk.begin(), risk.end()) - risk.begin())] = 1.0;
        break;
      case Kind::gibbs: {
        const double lo = *std::min_element(risk.begin(), risk.end());
        double s = 0.0;
        for (std::size_t h = 0; h < H; ++h) s += p[h] = std::exp(-eta * (risk[h] - lo));
        for (auto& v : p) v /= s;
        break;
      }
    }
    return p;
  }
};

struct BatchJoint {
  DiscreteJoint table;
  int n = 0;
  bool iid = true;
  int vc_dim = -1;  // -1 when labels are not binary
};

/// Context names for conditioning on the whole supersample.
inline Names batch_supersample_names(int n) {
  Names out;
  for (int i = 1; i <= n; ++i) {
    out.push_back(col("Z0", i));
    out.push_back(col("Z1", i));
  }
  return out;
}

/// Exact law of (Z~, U, W) and derived losses for the batch construction.
///
/// Columns per i: Z0[i], Z1[i], U[i], Lp[i] = loss(W, Z0[i]), Lsel[i], Lgho[i];
/// then W, F (code of the 2n predictions), LD = population risk of W.
inline BatchJoint enumerate_batch(const BatchWorld& world, const BatchLearner& learner, int n,
                                  std::size_t cap = 10'000'000) {
  world.validate();
  if (n < 1) throw std::invalid_argument("batch horizon must be at least 1");
  const auto m = world.num_atoms();
  PairTable pair(m * m);
  if (world.pair) {
    pair = *world.pair;
  } else {
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) pair[a * m + b] = world.pxy[a] * world.pxy[b];
  }
  BatchJoint out;
  out.n = n;
  out.iid = !world.pair.has_value();
  if (world.pair) {
    // A supplied table is i.i.d. only if it equals D x D.
    out.iid = true;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        if (std::abs(pair[a * m + b] - world.pxy[a] * world.pxy[b]) > 1e-12) out.iid = false;
  }
  if (world.num_y == 2) out.vc_dim = vc_dimension(world.hypotheses, world.num_x);

  std::vector<std::size_t> rows;
  for (std::size_t k = 0; k < m * m; ++k)
    if (pair[k] > 0.0) rows.push_back(k);
  const auto H = world.hypotheses.size();
  double count = std::pow(static_cast<double>(rows.size()) * 2.0, n) * static_cast<double>(H);
  if (count > static_cast<double>(cap))
    throw EnumerationTooLarge("batch enumeration exceeds the atom cap of " + std::to_string(cap), n);

  Names schema;
  for (int i = 1; i <= n; ++i)
    for (const char* f : {"Z0", "Z1", "U", "Lp", "Lsel", "Lgho"}) schema.push_back(col(f, i));
  schema.insert(schema.end(), {"W", "F", "LD"});
  out.table = DiscreteJoint(schema);

  const auto N = static_cast<std::size_t>(n);
  std::vector<std::size_t> idx(N, 0), sample(N);
  std::vector<double> vals(schema.size());
  const double psel = std::pow(0.5, n);
  while (true) {
    for (std::uint32_t u = 0; u < (1u << N); ++u) {
      double prow = psel;
      for (std::size_t i = 0; i < N; ++i) {
        const auto cell = rows[idx[i]];
        prow *= pair[cell];
        sample[i] = (u >> i & 1u) ? cell % m : cell / m;
      }
      const auto post = learner.posterior(world, sample);
      for (std::size_t h = 0; h < H; ++h) {
        if (post[h] == 0.0) continue;
        double fcode = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
          const auto cell = rows[idx[i]];
          const auto z0 = cell / m, z1 = cell % m;
          const int ui = static_cast<int>(u >> i & 1u);
          const double l0 = world.loss(h, z0), l1 = world.loss(h, z1);
          double* v = vals.data() + 6 * i;
          v[0] = double(z0);
          v[1] = double(z1);
          v[2] = ui;
          v[3] = l0;
          v[4] = ui ? l1 : l0;
          v[5] = ui ? l0 : l1;
          fcode = fcode * double(world.num_y) + world.hypotheses[h][z0 / world.num_y];
          fcode = fcode * double(world.num_y) + world.hypotheses[h][z1 / world.num_y];
        }
        vals[6 * N] = double(h);
        vals[6 * N + 1] = fcode;
        vals[6 * N + 2] = world.population_risk(h);
        out.table.add_atom(vals, prow * post[h]);
      }
    }
    std::size_t k = 0;
    while (k < N && ++idx[k] == rows.size()) idx[k++] = 0;
    if (k == N) break;
  }
  return out;
}

/// E[L_D(W) - L_S(W)] and its one-coordinate form (2/n) sum E[eps_i L_i^+].
struct BatchGap {
  double gap = 0.0;
  double correlation = 0.0;
};

inline BatchGap batch_gap(const BatchJoint& bj) {
  BatchGap g;
  const auto& tab = bj.table;
  const auto cld = tab.column("LD");
  double train = 0.0, corr = 0.0;
  for (int i = 1; i <= bj.n; ++i) {
    const auto cs = tab.column(col("Lsel", i)), cu = tab.column(col("U", i)), cp = tab.column(col("Lp", i));
    train += tab.expect([=](std::span<const double> r) { return r[cs]; });
    corr += tab.expect([=](std::span<const double> r) { return (2.0 * r[cu] - 1.0) * r[cp]; });
  }
  g.gap = tab.expect([=](std::span<const double> r) { return r[cld]; }) - train / bj.n;
  g.correlation = 2.0 * corr / bj.n;
  return g;
}

/// Single-loss eCMI bound, the loss/function/output comparison chain, and the VC pattern bound.
inline BoundSet batch_ecmi_bound(const BatchJoint& bj, const Tolerances& tol = {}) {
  if (!bj.iid) throw NotApplicable("batch eCMI bound needs an i.i.d. n x 2 supersample");
  const int n = bj.n;
  const auto ctx = batch_supersample_names(n);
  Names selectors;
  std::vector<double> li;
  for (int i = 1; i <= n; ++i) {
    selectors.push_back(col("U", i));
    li.push_back(conditional_mutual_information(bj.table, Names{col("Lp", i)}, Names{col("U", i)}, ctx).nats);
  }
  const double IF = conditional_mutual_information(bj.table, Names{"F"}, selectors, ctx).nats;
  const double IW = conditional_mutual_information(bj.table, Names{"W"}, selectors, ctx).nats;
  const auto g = batch_gap(bj);
  double root_sum = 0.0;
  for (double v : li) root_sum += std::sqrt(v);
  BoundSet out;
  out.push_back(identity_report("batch.one_coordinate_identity", g.gap, g.correlation, tol));
  out.push_back(exact_report("batch.loss", std::abs(g.gap), {{"loss_info", 2.0 / n * std::sqrt(2.0) * root_sum}}, tol));
  out.push_back(exact_report("batch.loss_vs_function", root_sum / n, {{"function_info", std::sqrt(IF / n)}}, tol));
  out.push_back(exact_report("batch.function_vs_output", std::sqrt(IF / n), {{"output_info", std::sqrt(IW / n)}}, tol));
  if (bj.vc_dim >= 0)
    out.push_back(exact_report("batch.vc_pattern", IF, {{"pattern_bound", vc_pattern_bound(std::max(bj.vc_dim, 0), n)}},
                               tol, "d=" + std::to_string(bj.vc_dim)));
  return out;
}

}  // namespace sscmi
