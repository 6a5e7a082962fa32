#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sscmi/discrete_joint.hpp"
#include "sscmi/info.hpp"
#include "sscmi/rng.hpp"
#include "sscmi/util.hpp"

namespace sscmi {

struct OutcomeSpace {
  std::vector<std::string> atoms;
  std::vector<double> loss_grid;  // optional; used to bin Monte Carlo losses

  [[nodiscard]] std::size_t size() const noexcept { return atoms.size(); }

  void validate() const {
    if (atoms.empty()) throw std::invalid_argument("outcome space is empty");
    for (std::size_t i = 0; i < atoms.size(); ++i)
      for (std::size_t j = i + 1; j < atoms.size(); ++j)
        if (atoms[i] == atoms[j]) throw std::invalid_argument("duplicate outcome label: " + atoms[i]);
    for (double g : loss_grid)
      if (g < 0.0 || g > 1.0) throw std::invalid_argument("loss grid value outside [0,1]");
    if (!std::is_sorted(loss_grid.begin(), loss_grid.end())) throw std::invalid_argument("loss grid must be sorted");
  }

  static OutcomeSpace numbered(std::size_t m) {
    OutcomeSpace s;
    for (std::size_t i = 0; i < m; ++i) s.atoms.push_back("z" + std::to_string(i));
    return s;
  }
};

/// Row-major m*m table: entry z0*m + z1 is P(Z0 = z0, Z1 = z1).
using PairTable = std::vector<double>;

/// Law of the round-t pair as a function of the learner history.
///
/// `fixed` uses tables[0] throughout; `by_round` uses tables[t-1] (the last
/// table repeats past its end); `by_last_selected` uses tables[0] at t = 1
/// and tables[1 + z] once the previous selected atom was z.
struct RowKernel {
  enum class Key { fixed, by_round, by_last_selected };

  Key key = Key::fixed;
  std::vector<PairTable> tables;
  bool exchangeable = false;
  bool conditional_product = false;

  [[nodiscard]] const PairTable& table_for(int t, int last_selected) const {
    switch (key) {
      case Key::fixed:
        return tables.at(0);
      case Key::by_round:
        return tables.at(std::min<std::size_t>(static_cast<std::size_t>(t - 1), tables.size() - 1));
      case Key::by_last_selected:
        return tables.at(last_selected < 0 ? 0 : static_cast<std::size_t>(last_selected) + 1);
    }
    throw std::logic_error("unreachable");
  }

  void validate(std::size_t m, double tol = 1e-12) const {
    if (tables.empty()) throw std::invalid_argument("row kernel has no tables");
    if (key == Key::by_last_selected && tables.size() != m + 1)
      throw std::invalid_argument("by_last_selected row kernel needs m + 1 tables");
    for (std::size_t k = 0; k < tables.size(); ++k) {
      const auto& tab = tables[k];
      if (tab.size() != m * m) throw std::invalid_argument("row table " + std::to_string(k) + " has wrong size");
      double s = 0.0;
      for (double p : tab) {
        if (p < 0.0) throw std::invalid_argument("row table " + std::to_string(k) + " has a negative entry");
        s += p;
      }
      if (std::abs(s - 1.0) > tol) throw std::invalid_argument("row table " + std::to_string(k) + " does not sum to 1");
      if (exchangeable)
        for (std::size_t a = 0; a < m; ++a)
          for (std::size_t b = 0; b < m; ++b)
            if (std::abs(tab[a * m + b] - tab[b * m + a]) > tol)
              throw std::invalid_argument("row table " + std::to_string(k) + " declared exchangeable but is not symmetric");
      if (conditional_product) {
        auto p0 = first_marginal(tab, m), p1 = second_marginal(tab, m);
        for (std::size_t a = 0; a < m; ++a)
          for (std::size_t b = 0; b < m; ++b)
            if (std::abs(tab[a * m + b] - p0[a] * p1[b]) > tol || std::abs(p0[a] - p1[a]) > tol)
              throw std::invalid_argument("row table " + std::to_string(k) +
                                          " declared conditional_product but is not an i.i.d. product");
      }
    }
  }

  static std::vector<double> first_marginal(const PairTable& tab, std::size_t m) {
    std::vector<double> p(m, 0.0);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) p[a] += tab[a * m + b];
    return p;
  }
  static std::vector<double> second_marginal(const PairTable& tab, std::size_t m) {
    std::vector<double> p(m, 0.0);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) p[b] += tab[a * m + b];
    return p;
  }

  static RowKernel iid(std::span<const double> marginal) {
    const auto m = marginal.size();
    PairTable tab(m * m);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) tab[a * m + b] = marginal[a] * marginal[b];
    RowKernel k;
    k.tables = {std::move(tab)};
    k.exchangeable = k.conditional_product = true;
    return k;
  }
};

/// Retained selected-path variables of each round, in fold order.
enum class Retained { Z, W, U };

inline std::string to_string(Retained r) {
  switch (r) {
    case Retained::Z: return "Z";
    case Retained::W: return "W";
    case Retained::U: return "U";
  }
  return "?";
}

struct WorldSpec {
  OutcomeSpace space;
  RowKernel rows;
  std::vector<Retained> retained{Retained::Z, Retained::W};

  [[nodiscard]] bool retains(Retained r) const {
    return std::find(retained.begin(), retained.end(), r) != retained.end();
  }

  void validate() const {
    space.validate();
    rows.validate(space.size());
    if (rows.key == RowKernel::Key::by_last_selected && !retains(Retained::Z))
      throw std::invalid_argument("row kernel keyed by the last selected atom needs Z retained in the history");
  }
};

/// W_t ~ table[w_{t-1}][z_sel].
struct MarkovUpdate {
  std::vector<std::vector<std::vector<double>>> table;
};

/// W_t ~ prior(w) exp(-eta * sum_{s<=t} loss(w, z_sel_s)).
struct GibbsUpdate {
  double eta = 1.0;
  std::vector<double> prior;
};

struct ConstantWeight {
  double q = 1.0;
};
/// Q_t = q[W_{t-1}].
struct StateWeight {
  std::vector<double> q;
};
/// Q_t = 1 until some earlier selected loss was positive, then 0.
struct StopAfterLoss {};

using UpdateRule = std::variant<MarkovUpdate, GibbsUpdate>;
using WeightRule = std::variant<ConstantWeight, StateWeight, StopAfterLoss>;

struct LearnerSpec {
  std::size_t num_states = 1;
  std::vector<std::vector<double>> loss;  // loss[w][z] in [0,1]
  int initial_state = 0;
  UpdateRule update = MarkovUpdate{};
  WeightRule weight = ConstantWeight{};

  void validate(const WorldSpec& world, double tol = 1e-12) const {
    const auto m = world.space.size();
    if (num_states == 0) throw std::invalid_argument("learner has no states");
    if (loss.size() != num_states) throw std::invalid_argument("loss matrix needs one row per state");
    for (const auto& row : loss) {
      if (row.size() != m) throw std::invalid_argument("loss matrix needs one column per atom");
      for (double v : row)
        if (v < -tol || v > 1.0 + tol) throw std::invalid_argument("loss value outside [0,1]");
    }
    if (initial_state < 0 || static_cast<std::size_t>(initial_state) >= num_states)
      throw std::invalid_argument("initial state out of range");
    if (const auto* mk = std::get_if<MarkovUpdate>(&update)) {
      if (mk->table.size() != num_states) throw std::invalid_argument("Markov update needs one block per state");
      bool depends_on_prev = false;
      for (std::size_t w = 0; w < num_states; ++w) {
        if (mk->table[w].size() != m) throw std::invalid_argument("Markov update needs one row per atom");
        for (std::size_t z = 0; z < m; ++z) {
          const auto& d = mk->table[w][z];
          if (d.size() != num_states) throw std::invalid_argument("Markov update rows must cover all states");
          double s = 0.0;
          for (double p : d) {
            if (p < 0.0) throw std::invalid_argument("Markov update has a negative probability");
            s += p;
          }
          if (std::abs(s - 1.0) > tol) throw std::invalid_argument("Markov update row does not sum to 1");
          if (d != mk->table[0][z]) depends_on_prev = true;
        }
      }
      if (depends_on_prev && !world.retains(Retained::W))
        throw std::invalid_argument("update reads W_{t-1} but W is not retained in the history");
    } else {
      const auto& g = std::get<GibbsUpdate>(update);
      if (!(g.eta >= 0.0)) throw std::invalid_argument("Gibbs rate must be nonnegative");
      if (g.prior.size() != num_states) throw std::invalid_argument("Gibbs prior must cover all states");
      double s = 0.0;
      for (double p : g.prior) s += p;
      if (std::abs(s - 1.0) > tol) throw std::invalid_argument("Gibbs prior does not sum to 1");
      if (g.eta > 0.0 && !world.retains(Retained::Z))
        throw std::invalid_argument("Gibbs posterior reads past atoms but Z is not retained in the history");
    }
    std::visit(
        [&](const auto& w) {
          using T = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<T, ConstantWeight>) {
            if (w.q < 0.0 || w.q > 1.0) throw std::invalid_argument("weight outside [0,1]");
          } else if constexpr (std::is_same_v<T, StateWeight>) {
            if (w.q.size() != num_states) throw std::invalid_argument("state weight needs one value per state");
            for (double v : w.q)
              if (v < 0.0 || v > 1.0) throw std::invalid_argument("weight outside [0,1]");
            if (!world.retains(Retained::W)) throw std::invalid_argument("state weight reads W but W is not retained");
          } else {
            if (!world.retains(Retained::W) || !world.retains(Retained::Z))
              throw std::invalid_argument("stop-after-loss weight needs Z and W retained");
          }
        },
        weight);
  }

  /// W_t = selected atom; 0/1 loss 1{w != z}.
  static LearnerSpec memorize_last(std::size_t m) {
    LearnerSpec l;
    l.num_states = m;
    l.loss.assign(m, std::vector<double>(m, 1.0));
    MarkovUpdate up;
    up.table.assign(m, std::vector<std::vector<double>>(m, std::vector<double>(m, 0.0)));
    for (std::size_t w = 0; w < m; ++w) {
      l.loss[w][w] = 0.0;
      for (std::size_t z = 0; z < m; ++z) up.table[w][z][z] = 1.0;
    }
    l.update = std::move(up);
    return l;
  }

  /// State drawn from `dist` every round, ignoring the data.
  static LearnerSpec constant(std::vector<std::vector<double>> loss, std::vector<double> dist) {
    LearnerSpec l;
    l.num_states = loss.size();
    const auto m = loss.empty() ? 0 : loss[0].size();
    l.loss = std::move(loss);
    MarkovUpdate up;
    up.table.assign(l.num_states, std::vector<std::vector<double>>(m, dist));
    l.update = std::move(up);
    return l;
  }
};

struct RetainedRound {
  int z = -1;
  int w = -1;
  int u = -1;
};
/// Learner history H_t: one record per completed round; unretained fields are -1.
using History = std::vector<RetainedRound>;

/// Everything the learner carries between rounds. All of it is a function of
/// the retained history, so the update and weight rules are predictable.
struct LearnerState {
  int round = 0;
  int last_selected = -1;
  int w_prev = 0;
  bool stopped = false;
  std::vector<double> cumulative_loss;
  History history;
};

namespace detail {

inline LearnerState initial_state(const LearnerSpec& l) {
  LearnerState s;
  s.w_prev = l.initial_state;
  s.cumulative_loss.assign(l.num_states, 0.0);
  return s;
}

inline double weight_of(const LearnerSpec& l, const LearnerState& s) {
  return std::visit(
      [&](const auto& w) -> double {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, ConstantWeight>) return w.q;
        else if constexpr (std::is_same_v<T, StateWeight>) return w.q[static_cast<std::size_t>(s.w_prev)];
        else return s.stopped ? 0.0 : 1.0;
      },
      l.weight);
}

inline std::vector<double> transition(const LearnerSpec& l, const LearnerState& s, int z) {
  if (const auto* mk = std::get_if<MarkovUpdate>(&l.update))
    return mk->table[static_cast<std::size_t>(s.w_prev)][static_cast<std::size_t>(z)];
  const auto& g = std::get<GibbsUpdate>(l.update);
  std::vector<double> logits(l.num_states);
  double mx = -INFINITY;
  for (std::size_t w = 0; w < l.num_states; ++w) {
    if (g.prior[w] <= 0.0) {
      logits[w] = -INFINITY;
      continue;
    }
    logits[w] = std::log(g.prior[w]) - g.eta * (s.cumulative_loss[w] + l.loss[w][static_cast<std::size_t>(z)]);
    mx = std::max(mx, logits[w]);
  }
  double total = 0.0;
  for (auto& v : logits) total += (v = std::isinf(v) ? 0.0 : std::exp(v - mx));
  for (auto& v : logits) v /= total;
  return logits;
}

inline LearnerState advance(const LearnerSpec& l, const WorldSpec& world, const LearnerState& s, int z, int u, int w) {
  LearnerState n = s;
  ++n.round;
  n.last_selected = z;
  n.w_prev = w;
  for (std::size_t k = 0; k < l.num_states; ++k) n.cumulative_loss[k] += l.loss[k][static_cast<std::size_t>(z)];
  if (l.loss[static_cast<std::size_t>(w)][static_cast<std::size_t>(z)] > 0.0) n.stopped = true;
  RetainedRound r;
  if (world.retains(Retained::Z)) r.z = z;
  if (world.retains(Retained::W)) r.w = w;
  if (world.retains(Retained::U)) r.u = u;
  n.history.push_back(r);
  return n;
}

inline std::vector<std::int64_t> history_key(const History& h) {
  std::vector<std::int64_t> k;
  k.reserve(3 * h.size());
  for (const auto& r : h) {
    k.push_back(r.z);
    k.push_back(r.w);
    k.push_back(r.u);
  }
  return k;
}

inline History decode_history(const std::vector<std::int64_t>& k) {
  History h(k.size() / 3);
  for (std::size_t i = 0; i < h.size(); ++i)
    h[i] = {static_cast<int>(k[3 * i]), static_cast<int>(k[3 * i + 1]), static_cast<int>(k[3 * i + 2])};
  return h;
}

/// Converts a probability vector to P and renormalizes in P, so exact-rational
/// enumerations are closed exactly.
template <class P>
std::vector<P> normalized(std::span<const double> v) {
  std::vector<P> out(v.size());
  P s(0);
  for (std::size_t i = 0; i < v.size(); ++i) s += (out[i] = static_cast<P>(v[i]));
  for (auto& x : out) x /= s;
  return out;
}

}  // namespace detail

/// Per-round coordinate names of an enumerated supersample joint.
///
///   H[t]   code of the learner history before round t
///   Z0[t], Z1[t], U[t], Q[t], W[t]
///   l0[t], l1[t]          unweighted losses of W[t] on each coordinate
///   Lp[t], Lm[t]          Q * l0, Q * l1
///   Lsel[t], Lgho[t]      weighted selected and ghost losses
///   pop[t]                Q * sum_z loss(W[t], z) P0(z | H)
inline const std::vector<std::string>& round_fields() {
  static const std::vector<std::string> f{"H", "Z0", "Z1", "U", "Q", "W", "l0", "l1", "Lp", "Lm", "Lsel", "Lgho", "pop"};
  return f;
}

/// Conditioning context of round t: history plus the full current row.
inline Names context_names(int t) { return {col("H", t), col("Z0", t), col("Z1", t)}; }

inline Names round_names(std::string_view base, int n) {
  Names out;
  for (int t = 1; t <= n; ++t) out.push_back(col(base, t));
  return out;
}

inline std::vector<Names> context_names_all(int n) {
  std::vector<Names> out;
  for (int t = 1; t <= n; ++t) out.push_back(context_names(t));
  return out;
}

template <class P>
struct BasicSupersampleJoint {
  BasicDiscreteJoint<P> table;
  int horizon = 0;
  bool exchangeable = false;
  bool conditional_product = false;
  bool fair_selectors = true;
  std::vector<History> histories;  // indexed by H[t] code
  std::vector<Retained> retained;
  std::vector<std::vector<double>> loss;
  std::size_t num_atoms = 0;
  std::vector<std::vector<double>> first_marginals;  // per history code: P0(. | H)
};

using SupersampleJoint = BasicSupersampleJoint<double>;

struct EnumerationOptions {
  std::size_t cap = 10'000'000;
  double selector_bias = 0.5;  // P(U = 1); anything but 1/2 is a deliberate corruption
};

/// Exact joint law of the sequential supersample experiment over n rounds.
template <class P = double>
BasicSupersampleJoint<P> enumerate_joint(const WorldSpec& world, const LearnerSpec& learner, int n,
                                         const EnumerationOptions& opts = {}) {
  world.validate();
  learner.validate(world);
  if (n < 1) throw std::invalid_argument("horizon must be at least 1");
  if (!(opts.selector_bias >= 0.0 && opts.selector_bias <= 1.0)) throw std::invalid_argument("selector bias outside [0,1]");
  const auto m = world.space.size();
  const auto S = learner.num_states;

  BasicSupersampleJoint<P> out;
  out.horizon = n;
  out.exchangeable = world.rows.exchangeable;
  out.conditional_product = world.rows.conditional_product;
  out.fair_selectors = opts.selector_bias == 0.5;
  out.retained = world.retained;
  out.loss = learner.loss;
  out.num_atoms = m;

  Names schema;
  for (int t = 1; t <= n; ++t)
    for (const auto& f : round_fields()) schema.push_back(col(f, t));
  const std::size_t width = schema.size();
  const std::size_t per_round = round_fields().size();

  Interner histories;
  auto history_code = [&](const History& h) {
    const auto before = histories.size();
    const auto c = histories.code(detail::history_key(h));
    if (histories.size() != before) {
      out.histories.push_back(h);
      out.first_marginals.emplace_back();
    }
    return c;
  };

  struct Node {
    P prob;
    std::vector<P> values;
    LearnerState state;
  };
  std::vector<Node> level{{P(1), {}, detail::initial_state(learner)}};

  const P p_one = static_cast<P>(opts.selector_bias);
  const P p_sel[2] = {P(1) - p_one, p_one};

  for (int t = 1; t <= n; ++t) {
    std::vector<Node> next;
    for (const auto& node : level) {
      const auto& tab = world.rows.table_for(t, node.state.last_selected);
      const auto rows = detail::normalized<P>(tab);
      const auto marg0 = RowKernel::first_marginal(tab, m);
      const auto hcode = history_code(node.state.history);
      out.first_marginals[hcode] = marg0;
      const double q = detail::weight_of(learner, node.state);
      const P qp = static_cast<P>(q);
      for (std::size_t z0 = 0; z0 < m; ++z0)
        for (std::size_t z1 = 0; z1 < m; ++z1) {
          const P prow = rows[z0 * m + z1];
          if (prow == P(0)) continue;
          for (int u = 0; u < 2; ++u) {
            if (p_sel[u] == P(0)) continue;
            const int zs = static_cast<int>(u == 0 ? z0 : z1);
            const auto trans = detail::normalized<P>(detail::transition(learner, node.state, zs));
            for (std::size_t w = 0; w < S; ++w) {
              if (trans[w] == P(0)) continue;
              if (next.size() >= opts.cap)
                throw EnumerationTooLarge("enumeration exceeds the atom cap of " + std::to_string(opts.cap) +
                                              " at round " + std::to_string(t),
                                          t);
              Node child{node.prob * prow * p_sel[u] * trans[w], node.values,
                         detail::advance(learner, world, node.state, zs, u, static_cast<int>(w))};
              const P l0 = static_cast<P>(learner.loss[w][z0]);
              const P l1 = static_cast<P>(learner.loss[w][z1]);
              double popv = 0.0;
              for (std::size_t z = 0; z < m; ++z) popv += learner.loss[w][z] * marg0[z];
              const P lp = qp * l0, lm = qp * l1;
              child.values.insert(child.values.end(),
                                  {static_cast<P>(static_cast<double>(hcode)), static_cast<P>(static_cast<double>(z0)),
                                   static_cast<P>(static_cast<double>(z1)), P(u), qp,
                                   static_cast<P>(static_cast<double>(w)), l0, l1, lp, lm, u == 0 ? lp : lm,
                                   u == 0 ? lm : lp, qp * static_cast<P>(popv)});
              next.push_back(std::move(child));
            }
          }
        }
    }
    level = std::move(next);
  }

  out.table = BasicDiscreteJoint<P>(schema);
  out.table.reserve(level.size());
  for (const auto& node : level) {
    if (node.values.size() != width || width != per_round * static_cast<std::size_t>(n))
      throw std::logic_error("enumeration produced a malformed atom");
    out.table.add_atom(node.values, node.prob);
  }
  return out;
}

template <class P>
struct BasicRisks {
  P train{0};
  P holdout{0};
  P gap{0};
};
using Risks = BasicRisks<double>;

/// Weighted train / holdout risks and the sequential gap.
template <class P>
BasicRisks<P> sequential_risks(const BasicSupersampleJoint<P>& sj) {
  BasicRisks<P> r;
  const P n = static_cast<P>(sj.horizon);
  for (int t = 1; t <= sj.horizon; ++t) {
    r.train += sj.table.expect(col("Lsel", t));
    r.holdout += sj.table.expect(col("Lgho", t));
  }
  r.train /= n;
  r.holdout /= n;
  r.gap = r.holdout - r.train;
  return r;
}

/// (2/n) sum_t E[eps_t Lp_t]; only meaningful for exchangeable rows.
template <class P>
P row_swap_correlation(const BasicSupersampleJoint<P>& sj) {
  if (!sj.exchangeable)
    throw NotApplicable("row-swap correlation needs exchangeable rows; use two_coordinate_correlation");
  P s(0);
  for (int t = 1; t <= sj.horizon; ++t) {
    const auto cu = sj.table.column(col("U", t)), cl = sj.table.column(col("Lp", t));
    s += sj.table.expect([&](std::span<const P> r) { return (P(2) * r[cu] - P(1)) * r[cl]; });
  }
  return P(2) * s / static_cast<P>(sj.horizon);
}

/// (1/n) sum_t E[eps_t (Lp_t - Lm_t)]; needs only fair selectors.
template <class P>
P two_coordinate_correlation(const BasicSupersampleJoint<P>& sj) {
  P s(0);
  for (int t = 1; t <= sj.horizon; ++t) {
    const auto cu = sj.table.column(col("U", t)), cp = sj.table.column(col("Lp", t)), cm = sj.table.column(col("Lm", t));
    s += sj.table.expect([&](std::span<const P> r) { return (P(2) * r[cu] - P(1)) * (r[cp] - r[cm]); });
  }
  return s / static_cast<P>(sj.horizon);
}

/// max over rounds and contexts of |P(U_t = 1 | H, Z0, Z1) - 1/2|.
inline double selector_fairness_residual(const SupersampleJoint& sj) {
  double worst = 0.0;
  for (int t = 1; t <= sj.horizon; ++t) {
    const auto& tab = sj.table;
    TupleIndexer idx(tab.columns(context_names(t)));
    const auto cu = tab.column(col("U", t));
    std::vector<double> mass, ones;
    for (std::size_t i = 0; i < tab.size(); ++i) {
      const auto id = idx.id(tab.row(i));
      if (id == mass.size()) {
        mass.push_back(0.0);
        ones.push_back(0.0);
      }
      mass[id] += tab.prob(i);
      if (tab.at(i, cu) == 1.0) ones[id] += tab.prob(i);
    }
    for (std::size_t k = 0; k < mass.size(); ++k)
      if (mass[k] > 0.0) worst = std::max(worst, std::abs(ones[k] / mass[k] - 0.5));
  }
  return worst;
}

/// |L^ho - (1/n) sum_t E[pop_t]|; zero when rows are conditional products.
inline double conditional_product_holdout_residual(const SupersampleJoint& sj) {
  const auto r = sequential_risks(sj);
  double pop = 0.0;
  for (int t = 1; t <= sj.horizon; ++t) pop += sj.table.expect(col("pop", t));
  return std::abs(r.holdout - pop / sj.horizon);
}

struct TranscriptRound {
  int z0 = 0, z1 = 0, u = 0, w = 0;
  double q = 0.0;
  double selected_loss = 0.0;
  double ghost_loss = 0.0;
};

struct Transcript {
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  History initial_history;
  std::vector<TranscriptRound> rounds;
  std::vector<Retained> retained;

  /// H_{t}: fold of the retained variables of rounds 1..t.
  [[nodiscard]] History history_after(int t) const {
    History h = initial_history;
    for (int s = 0; s < t; ++s) {
      const auto& r = rounds[static_cast<std::size_t>(s)];
      RetainedRound k;
      auto keep = [&](Retained x) { return std::find(retained.begin(), retained.end(), x) != retained.end(); };
      if (keep(Retained::Z)) k.z = r.u == 0 ? r.z0 : r.z1;
      if (keep(Retained::W)) k.w = r.w;
      if (keep(Retained::U)) k.u = r.u;
      h.push_back(k);
    }
    return h;
  }
};

/// One trajectory; draws come from per-round streams so replicas are independent of evaluation order.
inline Transcript sample_transcript(const WorldSpec& world, const LearnerSpec& learner, int n, std::uint64_t seed,
                                    std::uint64_t replica, double selector_bias = 0.5) {
  const auto m = world.space.size();
  Transcript tr;
  tr.seed = seed;
  tr.replica = replica;
  tr.retained = world.retained;
  auto state = detail::initial_state(learner);
  for (int t = 1; t <= n; ++t) {
    const auto ut = static_cast<std::uint64_t>(t);
    auto row_rng = stream_for(seed, replica, ut, Stream::row);
    auto sel_rng = stream_for(seed, replica, ut, Stream::selector);
    auto learn_rng = stream_for(seed, replica, ut, Stream::learner);
    const auto& tab = world.rows.table_for(t, state.last_selected);
    const auto cell = row_rng.categorical(tab);
    TranscriptRound r;
    r.z0 = static_cast<int>(cell / m);
    r.z1 = static_cast<int>(cell % m);
    r.u = sel_rng.bernoulli(selector_bias) ? 1 : 0;
    r.q = detail::weight_of(learner, state);
    const int zs = r.u == 0 ? r.z0 : r.z1;
    const int zg = r.u == 0 ? r.z1 : r.z0;
    r.w = static_cast<int>(learn_rng.categorical(detail::transition(learner, state, zs)));
    r.selected_loss = r.q * learner.loss[static_cast<std::size_t>(r.w)][static_cast<std::size_t>(zs)];
    r.ghost_loss = r.q * learner.loss[static_cast<std::size_t>(r.w)][static_cast<std::size_t>(zg)];
    state = detail::advance(learner, world, state, zs, r.u, r.w);
    tr.rounds.push_back(r);
  }
  return tr;
}

inline std::vector<Transcript> sample_transcripts(const WorldSpec& world, const LearnerSpec& learner, int n,
                                                  std::size_t reps, std::uint64_t seed, double selector_bias = 0.5) {
  if (reps < 1) throw std::invalid_argument("reps must be at least 1");
  if (n < 1) throw std::invalid_argument("horizon must be at least 1");
  world.validate();
  learner.validate(world);
  std::vector<Transcript> out;
  out.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) out.push_back(sample_transcript(world, learner, n, seed, r, selector_bias));
  return out;
}

inline void write_transcripts_csv(std::ostream& os, std::span<const Transcript> trs) {
  os << "seed,replica,round,z0,z1,u,q,w,selected_loss,ghost_loss\n";
  for (const auto& tr : trs)
    for (std::size_t t = 0; t < tr.rounds.size(); ++t) {
      const auto& r = tr.rounds[t];
      os << tr.seed << ',' << tr.replica << ',' << t + 1 << ',' << r.z0 << ',' << r.z1 << ',' << r.u << ','
         << format_number(r.q) << ',' << r.w << ',' << format_number(r.selected_loss) << ','
         << format_number(r.ghost_loss) << '\n';
    }
}

/// Sample mean with its standard error.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

inline Estimate mean_estimate(std::span<const double> xs) {
  Estimate e;
  if (xs.empty()) return e;
  double s = 0.0;
  for (double x : xs) s += x;
  e.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double v = 0.0;
    for (double x : xs) v += (x - e.mean) * (x - e.mean);
    v /= static_cast<double>(xs.size() - 1);
    e.std_error = std::sqrt(v / static_cast<double>(xs.size()));
  }
  return e;
}

/// Monte Carlo estimates of the weighted risks and the gap from transcripts.
struct RiskEstimates {
  Estimate train, holdout, gap;
};

inline RiskEstimates estimate_risks(std::span<const Transcript> trs) {
  std::vector<double> tr, ho, gp;
  for (const auto& t : trs) {
    double a = 0.0, b = 0.0;
    for (const auto& r : t.rounds) {
      a += r.selected_loss;
      b += r.ghost_loss;
    }
    const double n = static_cast<double>(t.rounds.size());
    tr.push_back(a / n);
    ho.push_back(b / n);
    gp.push_back((b - a) / n);
  }
  return {mean_estimate(tr), mean_estimate(ho), mean_estimate(gp)};
}

}  // namespace sscmi
