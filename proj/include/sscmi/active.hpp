#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sscmi/batch.hpp"
#include "sscmi/bounds.hpp"
#include "sscmi/discrete_joint.hpp"
#include "sscmi/info.hpp"
#include "sscmi/rng.hpp"
#include "sscmi/util.hpp"

namespace sscmi {

/// Streaming data law over Z = X x Y, plus the query-coin grid.
struct ActiveWorld {
  std::size_t num_x = 2;
  std::size_t num_y = 2;
  std::vector<double> pxy;  // P(x, y) at x * num_y + y
  int coin_grid = 8;        // V uniform on the midpoints of [0, 1] cut into coin_grid cells

  [[nodiscard]] std::size_t num_atoms() const { return num_x * num_y; }
  [[nodiscard]] std::size_t x_of(std::size_t z) const { return z / num_y; }
  [[nodiscard]] std::size_t y_of(std::size_t z) const { return z % num_y; }

  void validate() const {
    if (num_x == 0 || num_y == 0) throw std::invalid_argument("active world: empty domain");
    if (pxy.size() != num_atoms()) throw std::invalid_argument("active world: law must cover X x Y");
    double s = 0.0;
    for (double p : pxy) {
      if (p < 0.0) throw std::invalid_argument("active world: negative probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("active world: law does not sum to 1");
    if (coin_grid < 1) throw std::invalid_argument("active world: coin grid must have at least one cell");
  }
};

/// p_t = table[W_{t-1}][X_t], every value in [p_min, 1].
struct QueryRule {
  std::string name = "constant";
  double p_min = 1.0;
  std::vector<std::vector<double>> table;  // [state][x]

  [[nodiscard]] double operator()(std::size_t w, std::size_t x) const { return table[w][x]; }

  void validate(std::size_t states, std::size_t num_x, int grid) const {
    if (!(p_min > 0.0) || p_min > 1.0) throw std::invalid_argument("query rule: p_min must lie in (0, 1]");
    if (table.size() != states) throw std::invalid_argument("query rule: one row per learner state");
    for (const auto& row : table) {
      if (row.size() != num_x) throw std::invalid_argument("query rule: one entry per feature");
      for (double p : row) {
        if (p < p_min - 1e-12 || p > 1.0 + 1e-12)
          throw std::invalid_argument("query rule: probability " + format_number(p) + " outside [p_min, 1]");
        const double k = p * grid;
        if (std::abs(k - std::round(k)) > 1e-9)
          throw std::invalid_argument("query rule: probability " + format_number(p) + " is not a multiple of 1/" +
                                      std::to_string(grid));
      }
    }
  }

  static QueryRule constant(double p, std::size_t states, std::size_t num_x) {
    return {"constant", p, std::vector<std::vector<double>>(states, std::vector<double>(num_x, p))};
  }

  /// Query surely where the current hypothesis disagrees with the class majority at x, else p_min.
  static QueryRule uncertainty(const FunctionTable& cls, std::size_t num_y, double p_min) {
    const auto X = cls.empty() ? 0 : cls[0].size();
    std::vector<int> majority(X, 0);
    for (std::size_t x = 0; x < X; ++x) {
      std::vector<int> votes(num_y, 0);
      for (const auto& h : cls) ++votes[static_cast<std::size_t>(h[x])];
      majority[x] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    QueryRule r{"uncertainty", p_min, {}};
    for (const auto& h : cls) {
      std::vector<double> row(X);
      for (std::size_t x = 0; x < X; ++x) row[x] = h[x] == majority[x] ? p_min : 1.0;
      r.table.push_back(std::move(row));
    }
    return r;
  }
};

/// Psi_t over a finite class of predictors h: X -> Y with 0/1 loss.
///
/// erm: argmin of the importance-weighted loss on S_t, keeping W_{t-1} among ties
///      (otherwise the lowest index).
/// gibbs: W_t ~ prior(h) exp(-eta * weighted loss on S_t).
/// memorize: W_t is W_{t-1} with the queried point relabelled; needs the full class.
/// constant: W_t ~ prior, independent of the data.
struct ActiveLearner {
  enum class Kind { erm, gibbs, memorize, constant };
  Kind kind = Kind::erm;
  FunctionTable hypotheses;
  std::vector<double> prior;  // gibbs and constant
  double eta = 1.0;
  int initial_state = 0;

  [[nodiscard]] std::size_t num_states() const { return hypotheses.size(); }

  [[nodiscard]] double loss(const ActiveWorld& world, std::size_t h, std::size_t z) const {
    return hypotheses[h][world.x_of(z)] == static_cast<int>(world.y_of(z)) ? 0.0 : 1.0;
  }

  void validate(const ActiveWorld& world) const {
    if (hypotheses.empty()) throw std::invalid_argument("active learner: empty class");
    for (const auto& h : hypotheses) {
      if (h.size() != world.num_x) throw std::invalid_argument("active learner: hypothesis must label every feature");
      for (int y : h)
        if (y < 0 || static_cast<std::size_t>(y) >= world.num_y) throw std::invalid_argument("active learner: label out of range");
    }
    if (initial_state < 0 || static_cast<std::size_t>(initial_state) >= num_states())
      throw std::invalid_argument("active learner: initial state out of range");
    if (kind == Kind::gibbs || kind == Kind::constant) {
      if (prior.size() != num_states()) throw std::invalid_argument("active learner: prior must cover the class");
      double s = 0.0;
      for (double p : prior) s += p;
      if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("active learner: prior does not sum to 1");
    }
    if (kind == Kind::gibbs && !(eta >= 0.0)) throw std::invalid_argument("active learner: negative rate");
    if (kind == Kind::memorize)
      for (std::size_t h = 0; h < num_states(); ++h)
        for (std::size_t x = 0; x < world.num_x; ++x)
          for (std::size_t y = 0; y < world.num_y; ++y) (void)relabel(h, x, static_cast<int>(y));
  }

  /// Index of hypothesis h with its value at x replaced by y.
  [[nodiscard]] std::size_t relabel(std::size_t h, std::size_t x, int y) const {
    auto target = hypotheses[h];
    target[x] = y;
    const auto it = std::find(hypotheses.begin(), hypotheses.end(), target);
    if (it == hypotheses.end()) throw std::invalid_argument("active learner: memorize needs a class closed under relabelling");
    return static_cast<std::size_t>(it - hypotheses.begin());
  }

  static ActiveLearner full_class(const ActiveWorld& world, Kind kind) {
    ActiveLearner l;
    l.kind = kind;
    std::size_t total = 1;
    for (std::size_t x = 0; x < world.num_x; ++x) total *= world.num_y;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<int> h(world.num_x);
      auto c = code;
      for (std::size_t x = 0; x < world.num_x; ++x, c /= world.num_y) h[x] = static_cast<int>(c % world.num_y);
      l.hypotheses.push_back(std::move(h));
    }
    l.prior.assign(total, 1.0 / double(total));
    return l;
  }
};

/// Learner-side state: previous output and the importance-weighted loss of every
/// hypothesis on S_t. Only queried labels ever enter `weighted_loss`.
struct ActiveState {
  int w = 0;
  std::vector<double> weighted_loss;
  int labeled = 0;
};

namespace detail {

inline ActiveState active_initial(const ActiveLearner& l) {
  return {l.initial_state, std::vector<double>(l.num_states(), 0.0), 0};
}

/// S_t update. `label` is empty for the missing-label symbol, and then nothing is evaluated.
inline ActiveState absorb(const ActiveLearner& l, const ActiveWorld& world, ActiveState s, std::size_t x,
                          std::optional<int> label, double p) {
  if (!label) return s;
  const auto z = x * world.num_y + static_cast<std::size_t>(*label);
  for (std::size_t h = 0; h < l.num_states(); ++h) s.weighted_loss[h] += l.loss(world, h, z) / p;
  ++s.labeled;
  return s;
}

/// Law of W_t = Psi_t(S_t, W_{t-1}).
inline std::vector<double> psi(const ActiveLearner& l, const ActiveState& s, std::size_t x, std::optional<int> label) {
  const auto H = l.num_states();
  std::vector<double> out(H, 0.0);
  switch (l.kind) {
    case ActiveLearner::Kind::constant:
      return l.prior;
    case ActiveLearner::Kind::memorize:
      out[label ? l.relabel(static_cast<std::size_t>(s.w), x, *label) : static_cast<std::size_t>(s.w)] = 1.0;
      return out;
    case ActiveLearner::Kind::erm: {
      const double lo = *std::min_element(s.weighted_loss.begin(), s.weighted_loss.end());
      auto tie = [&](std::size_t h) { return s.weighted_loss[h] <= lo + 1e-12; };
      std::size_t pick = static_cast<std::size_t>(s.w);
      if (!tie(pick)) {
        pick = 0;
        while (!tie(pick)) ++pick;
      }
      out[pick] = 1.0;
      return out;
    }
    case ActiveLearner::Kind::gibbs: {
      double mx = -INFINITY;
      for (std::size_t h = 0; h < H; ++h)
        if (l.prior[h] > 0.0) mx = std::max(mx, std::log(l.prior[h]) - l.eta * s.weighted_loss[h]);
      double tot = 0.0;
      for (std::size_t h = 0; h < H; ++h)
        tot += out[h] = l.prior[h] > 0.0 ? std::exp(std::log(l.prior[h]) - l.eta * s.weighted_loss[h] - mx) : 0.0;
      for (auto& v : out) v /= tot;
      return out;
    }
  }
  return out;
}

}  // namespace detail

/// Exact law of the active supersample construction.
///
/// Per round t: H[t] (code of H_{t-1}), Z0[t], Z1[t], P0[t], P1[t], Q0[t], Q1[t],
/// U[t], W[t], Ybar[t] (observed label, -1 for the missing-label symbol), and the
/// terminal quantities l0[t] = loss(W_n, Z0), Lp[t] = Q0/P0 l0, Lm[t], Lsel[t], Lgho[t].
/// Then R = population risk of W_n.
///
/// Query coins enter only through Q = 1{V <= p}; with p on the coin grid, the
/// coins are merged into their two query cells, which leaves every conditional
/// law given the context unchanged.
struct ActiveJoint {
  DiscreteJoint table;
  int horizon = 0;
  double p_min = 1.0;
  ActiveWorld world;
  ActiveLearner learner;
};

inline Names active_context(int t) {
  return {col("H", t), col("Z0", t), col("Z1", t), col("P0", t), col("P1", t), col("Q0", t), col("Q1", t)};
}

inline ActiveJoint run_iwal_exact(const ActiveWorld& world, const QueryRule& rule, const ActiveLearner& learner, int n,
                                  std::size_t cap = 2'000'000) {
  world.validate();
  learner.validate(world);
  rule.validate(learner.num_states(), world.num_x, world.coin_grid);
  if (n < 1) throw std::invalid_argument("active horizon must be at least 1");
  const auto m = world.num_atoms();
  const auto N = static_cast<std::size_t>(n);

  Names schema;
  for (int t = 1; t <= n; ++t)
    for (const char* f : {"H", "Z0", "Z1", "P0", "P1", "Q0", "Q1", "U", "W", "Ybar", "l0", "Lp", "Lm", "Lsel", "Lgho"})
      schema.push_back(col(f, t));
  schema.push_back("R");
  constexpr std::size_t per = 15;

  struct Node {
    double prob;
    std::vector<double> values;
    ActiveState state;
    std::vector<std::int64_t> history;
  };
  Interner histories;
  std::vector<Node> level{{1.0, std::vector<double>(schema.size(), 0.0), detail::active_initial(learner), {}}};
  for (std::size_t t = 0; t < N; ++t) {
    std::vector<Node> next;
    for (const auto& node : level) {
      const double hcode = static_cast<double>(histories.code(node.history));
      for (std::size_t z0 = 0; z0 < m; ++z0)
        for (std::size_t z1 = 0; z1 < m; ++z1) {
          const double prow = world.pxy[z0] * world.pxy[z1];
          if (prow <= 0.0) continue;
          const std::size_t zz[2] = {z0, z1};
          const double p[2] = {rule(static_cast<std::size_t>(node.state.w), world.x_of(z0)),
                               rule(static_cast<std::size_t>(node.state.w), world.x_of(z1))};
          for (int q0 = 0; q0 < 2; ++q0)
            for (int q1 = 0; q1 < 2; ++q1) {
              const double pq = (q0 ? p[0] : 1.0 - p[0]) * (q1 ? p[1] : 1.0 - p[1]);
              if (pq <= 0.0) continue;
              const int qq[2] = {q0, q1};
              for (int u = 0; u < 2; ++u) {
                const auto zs = zz[u];
                const auto x = world.x_of(zs);
                const std::optional<int> label = qq[u] ? std::optional<int>(static_cast<int>(world.y_of(zs))) : std::nullopt;
                auto after = detail::absorb(learner, world, node.state, x, label, p[u]);
                const auto law = detail::psi(learner, after, x, label);
                for (std::size_t w = 0; w < law.size(); ++w) {
                  if (law[w] <= 0.0) continue;
                  Node c{node.prob * prow * pq * 0.5 * law[w], node.values, after, node.history};
                  c.state.w = static_cast<int>(w);
                  double* v = c.values.data() + per * t;
                  v[0] = hcode;
                  v[1] = double(z0);
                  v[2] = double(z1);
                  v[3] = p[0];
                  v[4] = p[1];
                  v[5] = q0;
                  v[6] = q1;
                  v[7] = u;
                  v[8] = double(w);
                  v[9] = label ? double(*label) : -1.0;
                  c.history.insert(c.history.end(), {std::int64_t(x), qq[u], label ? *label : -1, std::int64_t(w)});
                  next.push_back(std::move(c));
                  if (next.size() > cap)
                    throw EnumerationTooLarge("active enumeration exceeds the atom cap of " + std::to_string(cap), int(t) + 1);
                }
              }
            }
        }
    }
    level = std::move(next);
  }

  ActiveJoint out;
  out.horizon = n;
  out.p_min = rule.p_min;
  out.world = world;
  out.learner = learner;
  out.table = DiscreteJoint(schema);
  out.table.reserve(level.size());
  for (auto& node : level) {
    const auto wn = static_cast<std::size_t>(node.state.w);
    for (std::size_t t = 0; t < N; ++t) {
      double* v = node.values.data() + per * t;
      const auto z0 = static_cast<std::size_t>(v[1]), z1 = static_cast<std::size_t>(v[2]);
      const double l0 = learner.loss(world, wn, z0), l1 = learner.loss(world, wn, z1);
      const double lp = v[5] * l0 / v[3], lm = v[6] * l1 / v[4];
      v[10] = l0;
      v[11] = lp;
      v[12] = lm;
      v[13] = v[7] == 0.0 ? lp : lm;
      v[14] = v[7] == 0.0 ? lm : lp;
    }
    double r = 0.0;
    for (std::size_t z = 0; z < m; ++z) r += world.pxy[z] * learner.loss(world, wn, z);
    node.values.back() = r;
    out.table.add_atom(node.values, node.prob);
  }
  return out;
}

/// Importance-weighted risks of the output after round `m` (default: the terminal W_n).
struct IwRisks {
  double train = 0.0;       // L^IW
  double holdout = 0.0;     // L^{IW,ho}
  double population = 0.0;  // E[R(W_m)]
};

inline IwRisks iw_risks(const ActiveJoint& aj, int m = 0) {
  const int n = aj.horizon;
  if (m == 0) m = n;
  if (m < 1 || m > n) throw std::invalid_argument("iw_risks: output round out of range");
  const auto& tab = aj.table;
  const auto& world = aj.world;
  const auto& L = aj.learner;
  const auto cw = tab.column(col("W", m));
  IwRisks r;
  for (int t = 1; t <= m; ++t) {
    const auto cz0 = tab.column(col("Z0", t)), cz1 = tab.column(col("Z1", t)), cu = tab.column(col("U", t));
    const auto cp0 = tab.column(col("P0", t)), cp1 = tab.column(col("P1", t));
    const auto cq0 = tab.column(col("Q0", t)), cq1 = tab.column(col("Q1", t));
    auto weighted = [&](std::span<const double> row, bool selected) {
      const bool first = (row[cu] == 0.0) == selected;
      const auto z = static_cast<std::size_t>(first ? row[cz0] : row[cz1]);
      const double q = first ? row[cq0] : row[cq1], p = first ? row[cp0] : row[cp1];
      return q == 0.0 ? 0.0 : L.loss(world, static_cast<std::size_t>(row[cw]), z) / p;
    };
    r.train += tab.expect([&](std::span<const double> row) { return weighted(row, true); });
    r.holdout += tab.expect([&](std::span<const double> row) { return weighted(row, false); });
  }
  r.train /= m;
  r.holdout /= m;
  r.population = tab.expect([&](std::span<const double> row) {
    double s = 0.0;
    for (std::size_t z = 0; z < world.num_atoms(); ++z) s += world.pxy[z] * L.loss(world, static_cast<std::size_t>(row[cw]), z);
    return s;
  });
  return r;
}

/// L^{IW,ho} = E[R(W_m)] for the terminal output and, with `m`, for W_m.
inline BoundReport population_identity_check(const ActiveJoint& aj, int m = 0, const Tolerances& tol = {}) {
  const auto r = iw_risks(aj, m);
  return identity_report(m == 0 || m == aj.horizon ? "active.population_identity" : "active.population_identity_W" + std::to_string(m),
                         r.holdout, r.population, Tolerances{1e-10, tol.sigmas});
}

inline std::vector<double> active_round_information(const ActiveJoint& aj) {
  std::vector<double> out;
  for (int t = 1; t <= aj.horizon; ++t)
    out.push_back(conditional_mutual_information(aj.table, Names{col("Lp", t)}, Names{col("U", t)}, active_context(t)).nats);
  return out;
}

/// p_min (L^{IW,ho} - L^IW) = (2/n) sum E[eps_t M_t^+], and the slow-rate bound.
inline BoundSet active_slow_bound(const ActiveJoint& aj, const Tolerances& tol = {}) {
  const double n = aj.horizon, pm = aj.p_min;
  const auto r = iw_risks(aj);
  const auto info = active_round_information(aj);
  double corr = 0.0, roots = 0.0;
  for (int t = 1; t <= aj.horizon; ++t) {
    const auto cu = aj.table.column(col("U", t)), cp = aj.table.column(col("Lp", t));
    corr += aj.table.expect([=](std::span<const double> row) { return (2.0 * row[cu] - 1.0) * pm * row[cp]; });
    roots += std::sqrt(2.0 * info[static_cast<std::size_t>(t - 1)]);
  }
  BoundSet out;
  out.push_back(identity_report("active.row_swap_identity", pm * (r.holdout - r.train), 2.0 / n * corr, tol));
  out.push_back(exact_report("active.slow", std::abs(r.population - r.train), {{"loss_info", 2.0 / (pm * n) * roots}}, tol));
  return out;
}

/// E[R(W_n)] <= (1 + C) L^IW + sum I / (eta p_min n), with the explicit and zero-train forms.
inline BoundSet active_fast_bound(const ActiveJoint& aj, double C, double eta, const Tolerances& tol = {}) {
  if (!shifted_rademacher_feasible(C, eta))
    throw InfeasibleParameters("(C, eta) violates e^{2 eta} + e^{-2 eta (C+1)} <= 2", shifted_rademacher_residual(C, eta));
  const double n = aj.horizon, pm = aj.p_min;
  const auto r = iw_risks(aj);
  double J = 0.0;
  for (double v : active_round_information(aj)) J += v;
  const double x = J / (pm * n);
  BoundSet out;
  out.push_back(exact_report("active.fast", r.population, {{"train", (1.0 + C) * r.train}, {"info", J / (eta * pm * n)}}, tol,
                             "C=" + format_number(C) + " eta=" + format_number(eta)));
  out.push_back(exact_report("active.fast_explicit", r.population,
                             {{"train", r.train}, {"info", 8.0 * x}, {"cross", 4.0 * std::sqrt(2.0 * r.train * x)}}, tol));
  if (r.train == 0.0)
    out.push_back(exact_report("active.fast_interpolation", r.population, {{"info", 2.0 * x / std::numbers::ln2}}, tol,
                               "zero importance-weighted training risk"));
  return out;
}

/// I(L_t^+; U_t | G) against E[Q_{t,0} I_g(loss(W_n, Z_{t,0}); U_t)] and its state form.
struct QueryAwareCmi {
  double lhs = 0.0;
  double decomposed = 0.0;
  double state_form = 0.0;
};

inline QueryAwareCmi query_aware_cmi(const ActiveJoint& aj, int t) {
  if (t < 1 || t > aj.horizon) throw std::invalid_argument("query_aware_cmi: round out of range");
  const auto ctx = active_context(t);
  QueryAwareCmi q;
  q.lhs = conditional_mutual_information(aj.table, Names{col("Lp", t)}, Names{col("U", t)}, ctx).nats;
  // CMI on the sub-probability table {Q0 = 1} is P(Q0 = 1) times the conditional CMI,
  // which is exactly the Q0-weighted average of the per-context terms.
  const auto c = aj.table.column(col("Q0", t));
  const auto queried = aj.table.filter([c](std::span<const double> r) { return r[c] == 1.0; });
  if (queried.empty()) return q;
  q.decomposed = conditional_mutual_information(queried, Names{col("l0", t)}, Names{col("U", t)}, ctx).nats;
  q.state_form = conditional_mutual_information(queried, Names{col("W", aj.horizon)}, Names{col("U", t)}, ctx).nats;
  return q;
}

inline BoundSet query_aware_report(const ActiveJoint& aj, const Tolerances& tol = {}) {
  BoundSet out;
  for (int t = 1; t <= aj.horizon; ++t) {
    const auto q = query_aware_cmi(aj, t);
    out.push_back(identity_report("active.query_aware[" + std::to_string(t) + "]", q.lhs, q.decomposed, Tolerances{1e-10, tol.sigmas}));
    out.push_back(exact_report("active.query_aware_state[" + std::to_string(t) + "]", q.lhs, {{"state_info", q.state_form}}, tol));
  }
  return out;
}

/// max over atoms and rounds of the distance of p_min L^+ from [0, 1]; zero when the range holds.
inline double weighted_loss_range_violation(const ActiveJoint& aj) {
  double worst = 0.0;
  for (int t = 1; t <= aj.horizon; ++t) {
    const auto c = aj.table.column(col("Lp", t));
    for (std::size_t i = 0; i < aj.table.size(); ++i) {
      const double v = aj.p_min * aj.table.at(i, c);
      worst = std::max({worst, -v, v - 1.0});
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Sampled transcripts

struct ActiveRound {
  int z0 = 0, z1 = 0;
  int v0 = 0, v1 = 0;  // coin cells; V = (v + 1/2) / grid
  double p0 = 1.0, p1 = 1.0;
  int q0 = 0, q1 = 0;
  int u = 0;
  int x = 0;
  int ybar = -1;  // -1 is the missing-label symbol
  int w = 0;
  int sample_size = 0;  // |S_t|
};

struct ActiveTranscript {
  std::uint64_t seed = 0, replica = 0;
  std::vector<ActiveRound> rounds;
};

inline ActiveTranscript sample_iwal(const ActiveWorld& world, const QueryRule& rule, const ActiveLearner& learner, int n,
                                    std::uint64_t seed, std::uint64_t replica) {
  const auto K = world.coin_grid;
  ActiveTranscript tr{seed, replica, {}};
  auto state = detail::active_initial(learner);
  for (int t = 1; t <= n; ++t) {
    const auto ut = static_cast<std::uint64_t>(t);
    auto row_rng = stream_for(seed, replica, ut, Stream::row);
    auto coin_rng = stream_for(seed, replica, ut, Stream::coin);
    auto sel_rng = stream_for(seed, replica, ut, Stream::selector);
    auto learn_rng = stream_for(seed, replica, ut, Stream::learner);
    ActiveRound r;
    r.z0 = static_cast<int>(row_rng.categorical(world.pxy));
    r.z1 = static_cast<int>(row_rng.categorical(world.pxy));
    r.v0 = static_cast<int>(coin_rng() % static_cast<std::uint64_t>(K));
    r.v1 = static_cast<int>(coin_rng() % static_cast<std::uint64_t>(K));
    const auto w_prev = static_cast<std::size_t>(state.w);
    r.p0 = rule(w_prev, world.x_of(static_cast<std::size_t>(r.z0)));
    r.p1 = rule(w_prev, world.x_of(static_cast<std::size_t>(r.z1)));
    r.q0 = (r.v0 + 0.5) / K <= r.p0 ? 1 : 0;
    r.q1 = (r.v1 + 0.5) / K <= r.p1 ? 1 : 0;
    r.u = sel_rng.bernoulli(0.5) ? 1 : 0;
    const auto zs = static_cast<std::size_t>(r.u ? r.z1 : r.z0);
    r.x = static_cast<int>(world.x_of(zs));
    const int q = r.u ? r.q1 : r.q0;
    const std::optional<int> label = q ? std::optional<int>(static_cast<int>(world.y_of(zs))) : std::nullopt;
    r.ybar = label ? *label : -1;
    state = detail::absorb(learner, world, state, world.x_of(zs), label, r.u ? r.p1 : r.p0);
    state.w = static_cast<int>(learn_rng.categorical(detail::psi(learner, state, world.x_of(zs), label)));
    r.w = state.w;
    r.sample_size = state.labeled;
    tr.rounds.push_back(r);
  }
  return tr;
}

/// Exact joint together with `reps` sampled transcripts.
struct IwalRun {
  ActiveJoint joint;
  std::vector<ActiveTranscript> transcripts;
};

inline IwalRun run_iwal(const ActiveWorld& world, const QueryRule& rule, const ActiveLearner& learner, int n,
                        std::size_t reps = 0, std::uint64_t seed = 0) {
  IwalRun run{run_iwal_exact(world, rule, learner, n), {}};
  run.transcripts.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) run.transcripts.push_back(sample_iwal(world, rule, learner, n, seed, r));
  return run;
}

// ---------------------------------------------------------------------------
// Random small active worlds

struct RandomActiveWorld {
  ActiveWorld world;
  QueryRule rule;
  ActiveLearner learner;
  int n = 1;
};

inline RandomActiveWorld random_active_world(std::uint64_t seed, std::uint64_t id) {
  auto rng = CounterRng{seed}.split(0xac7, id);
  RandomActiveWorld out;
  out.world.num_x = 2;
  out.world.num_y = 2;
  out.world.pxy.resize(4);
  double s = 0.0;
  for (auto& p : out.world.pxy) s += p = 0.05 + rng.uniform();
  for (auto& p : out.world.pxy) p /= s;
  const auto kind = static_cast<ActiveLearner::Kind>(rng() % 4);
  out.learner = ActiveLearner::full_class(out.world, kind);
  if (kind != ActiveLearner::Kind::memorize && rng.bernoulli(0.5)) {
    // Random sub-class of size 2 or 3.
    auto& hs = out.learner.hypotheses;
    const auto keep = 2 + rng() % 2;
    while (hs.size() > keep) hs.erase(hs.begin() + static_cast<std::ptrdiff_t>(rng() % hs.size()));
    out.learner.prior.assign(hs.size(), 1.0 / double(hs.size()));
  }
  out.learner.eta = 0.5 + 3.0 * rng.uniform();
  out.learner.initial_state = static_cast<int>(rng() % out.learner.num_states());
  const double pm = rng.bernoulli(0.5) ? 0.25 : 0.5;
  const auto H = out.learner.num_states();
  switch (rng() % 3) {
    case 0: out.rule = QueryRule::constant(pm, H, 2); break;
    case 1: out.rule = QueryRule::uncertainty(out.learner.hypotheses, 2, pm); break;
    default: {
      out.rule = QueryRule{"state_table", pm, std::vector<std::vector<double>>(H, std::vector<double>(2))};
      const int lo = static_cast<int>(pm * 8);
      for (auto& row : out.rule.table)
        for (auto& p : row) p = (lo + static_cast<int>(rng() % static_cast<std::uint64_t>(9 - lo))) / 8.0;
    }
  }
  out.n = rng.bernoulli(0.5) ? 2 : 1;
  return out;
}

}  // namespace sscmi
