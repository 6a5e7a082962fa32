#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sscmi/batch.hpp"
#include "sscmi/bounds.hpp"
#include "sscmi/supersample.hpp"
#include "sscmi/util.hpp"

namespace sscmi {

// ---------------------------------------------------------------------------
// Gibbs online learner

/// W_t ~ prior(w) exp(-eta sum_{s<=t} loss(w, Z_s)), with Q_t = 1.
struct GibbsLearner {
  double eta = 1.0;
  std::vector<double> prior;
  std::vector<std::vector<double>> loss;  // loss[w][z]

  [[nodiscard]] LearnerSpec spec() const {
    LearnerSpec l;
    l.num_states = prior.size();
    l.loss = loss;
    l.update = GibbsUpdate{eta, prior};
    l.weight = ConstantWeight{1.0};
    return l;
  }

  /// Posterior after observing `selected` (the update reads nothing else).
  [[nodiscard]] std::vector<double> posterior(std::span<const int> selected) const {
    const auto l = spec();
    auto s = detail::initial_state(l);
    if (selected.empty()) {
      double tot = 0.0;
      for (double p : prior) tot += p;
      std::vector<double> out(prior);
      for (auto& p : out) p /= tot;
      return out;
    }
    for (std::size_t k = 0; k + 1 < selected.size(); ++k)
      for (std::size_t w = 0; w < l.num_states; ++w) s.cumulative_loss[w] += loss[w][static_cast<std::size_t>(selected[k])];
    return detail::transition(l, s, selected.back());
  }
};

inline void require_unit_weights(const LearnerSpec& l) {
  const auto* c = std::get_if<ConstantWeight>(&l.weight);
  if (!c || c->q != 1.0) throw NotApplicable("online setting requires Q_t = 1");
}

/// Online slow-rate chain and the explicit shifted-Rademacher form, both with Q = 1.
/// When the training risk is numerically zero the large-shift limit (interpolation) is also reported.
inline BoundSet run_online(const WorldSpec& world, const LearnerSpec& learner, int n, const Tolerances& tol = {},
                           const EnumerationOptions& opts = {}) {
  require_unit_weights(learner);
  const auto sj = enumerate_joint(world, learner, n, opts);
  auto out = slow_rate_bound(sj, tol);
  const auto risks = sequential_risks(sj);
  const auto ri = round_information(sj);
  const double JL = ri.loss_sum(), N = n;
  out.push_back(exact_report("online.shifted_explicit", risks.holdout,
                             {{"train", risks.train}, {"info", 8.0 * JL / N}, {"cross", 4.0 * std::sqrt(2.0 * risks.train * JL / N)}},
                             tol));
  if (risks.train <= 1e-9) {
    // (1 + C) L + J / (eta n) with C large and eta on the frontier; tends to 2J / (n log 2) as L -> 0.
    const double C = 1e6, eta = eta_frontier(C);
    out.push_back(exact_report("online.interpolation", risks.holdout,
                               {{"train", (1.0 + C) * risks.train}, {"info", JL / (eta * N)}}, tol,
                               "C=1e6 eta=" + format_number(eta)));
  }
  return out;
}

inline BoundSet run_online(const WorldSpec& world, const GibbsLearner& gibbs, int n, const Tolerances& tol = {},
                           const EnumerationOptions& opts = {}) {
  return run_online(world, gibbs.spec(), n, tol, opts);
}

// ---------------------------------------------------------------------------
// Finite binary classes

struct BinaryClass {
  std::size_t domain_size = 0;
  FunctionTable functions;  // functions[k][x] in {0, 1}

  void validate() const {
    for (const auto& f : functions) {
      if (f.size() != domain_size) throw std::invalid_argument("binary class: function must cover the domain");
      for (int v : f)
        if (v != 0 && v != 1) throw std::invalid_argument("binary class: values must be 0 or 1");
    }
    auto sorted = functions;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("binary class: duplicate function");
  }

  static BinaryClass full(std::size_t m) {
    if (m > 20) throw std::invalid_argument("binary class: full class too large");
    BinaryClass c{m, {}};
    for (std::uint32_t b = 0; b < (1u << m); ++b) {
      std::vector<int> f(m);
      for (std::size_t x = 0; x < m; ++x) f[x] = static_cast<int>(b >> x & 1u);
      c.functions.push_back(std::move(f));
    }
    return c;
  }

  /// x -> 1{x >= theta} on {0..m-1}, theta = 0..m.
  static BinaryClass thresholds(std::size_t m) {
    BinaryClass c{m, {}};
    for (std::size_t th = 0; th <= m; ++th) {
      std::vector<int> f(m);
      for (std::size_t x = 0; x < m; ++x) f[x] = x >= th ? 1 : 0;
      c.functions.push_back(std::move(f));
    }
    return c;
  }

  /// One function per line, comma-separated 0/1 values; a first line that is not numeric is a header.
  static BinaryClass from_csv(std::istream& is) {
    BinaryClass c;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto cells = split_view(line, ',');
      if (first) {
        first = false;
        c.domain_size = cells.size();
        const auto& h = cells.front();
        if (!h.empty() && h.front() != '0' && h.front() != '1') continue;
      }
      if (cells.size() != c.domain_size) throw SchemaError("binary class CSV: ragged row");
      std::vector<int> f;
      for (auto cell : cells) {
        if (cell != "0" && cell != "1") throw SchemaError("binary class CSV: value must be 0 or 1");
        f.push_back(cell == "1" ? 1 : 0);
      }
      c.functions.push_back(std::move(f));
    }
    c.validate();
    return c;
  }
};

namespace detail {

class LittlestoneSearch {
 public:
  LittlestoneSearch(const BinaryClass& cls, int cap) : cls_(cls), cap_(cap), words_((cls.functions.size() + 63) / 64) {}

  int run() {
    Set all(words_, 0);
    for (std::size_t k = 0; k < cls_.functions.size(); ++k) all[k / 64] |= std::uint64_t{1} << (k % 64);
    return solve(all);
  }

 private:
  using Set = std::vector<std::uint64_t>;

  struct Hash {
    std::size_t operator()(const Set& s) const noexcept {
      std::uint64_t h = 1469598103934665603ull;
      for (auto w : s) h = (h ^ w) * 1099511628211ull;
      return h;
    }
  };

  static std::size_t count(const Set& s) {
    std::size_t c = 0;
    for (auto w : s) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  static int floor_log2(std::size_t v) { return static_cast<int>(std::bit_width(v)) - 1; }

  int solve(const Set& s) {
    const auto size = count(s);
    if (size <= 1) return size == 0 ? -1 : 0;
    if (auto it = memo_.find(s); it != memo_.end()) return it->second;
    const int ceiling = floor_log2(size);
    int best = 0;
    Set zero(words_), one(words_);
    for (std::size_t x = 0; x < cls_.domain_size && best < ceiling; ++x) {
      std::fill(zero.begin(), zero.end(), 0);
      std::fill(one.begin(), one.end(), 0);
      for (std::size_t k = 0; k < cls_.functions.size(); ++k) {
        if (!(s[k / 64] >> (k % 64) & 1u)) continue;
        auto& dst = cls_.functions[k][x] ? one : zero;
        dst[k / 64] |= std::uint64_t{1} << (k % 64);
      }
      const auto c0 = count(zero), c1 = count(one);
      if (c0 == 0 || c1 == 0 || 1 + floor_log2(std::min(c0, c1)) <= best) continue;
      const int a = solve(zero);
      if (1 + a <= best) continue;
      best = std::max(best, 1 + std::min(a, solve(one)));
    }
    if (best > cap_) throw std::length_error("littlestone_dimension: depth cap " + std::to_string(cap_) + " exceeded");
    memo_.emplace(s, best);
    return best;
  }

  const BinaryClass& cls_;
  int cap_;
  std::size_t words_;
  std::unordered_map<Set, int, Hash> memo_;
};

}  // namespace detail

/// Depth of the deepest complete mistake tree shattered by the class; -1 for the empty class.
inline int littlestone_dimension(const BinaryClass& cls, int max_depth = 12) {
  cls.validate();
  return detail::LittlestoneSearch(cls, max_depth).run();
}

inline int vc_dimension(const BinaryClass& cls) { return vc_dimension(cls.functions, cls.domain_size); }

struct PatternGrowth {
  double binomial = 0.0;               // log sum_{i <= min(d, n)} C(n, i)
  std::optional<double> sauer_shelah;  // d log(e n / d) when 1 <= d <= n
};

inline PatternGrowth pattern_growth_bound(int d, int n) {
  if (d < 0 || n < 0) throw std::invalid_argument("pattern_growth_bound: need d >= 0 and n >= 0");
  PatternGrowth g;
  const int top = std::min(d, n);
  // log-sum-exp over log C(n, i)
  std::vector<double> terms;
  for (int i = 0; i <= top; ++i)
    terms.push_back(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0));
  const double mx = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  g.binomial = d == 0 ? 0.0 : mx + std::log(s);
  if (d >= 1 && d <= n) g.sauer_shelah = d * std::log(std::numbers::e * n / d);
  return g;
}

inline PatternGrowth pattern_growth_bound(const BinaryClass& cls, int n, int max_depth = 12) {
  return pattern_growth_bound(std::max(littlestone_dimension(cls, max_depth), 0), n);
}

/// Whether every selector path's loss sequence L_t^+ is matched by one class member
/// evaluated at the path's Z_{t,0} atoms. Returns the first failing path description.
inline std::optional<std::string> realizability_failure(const SupersampleJoint& sj, const BinaryClass& cls) {
  const auto& tab = sj.table;
  std::vector<std::size_t> cz, cl;
  for (int t = 1; t <= sj.horizon; ++t) {
    cz.push_back(tab.column(col("Z0", t)));
    cl.push_back(tab.column(col("Lp", t)));
  }
  for (std::size_t i = 0; i < tab.size(); ++i) {
    if (tab.prob(i) <= 0.0) continue;
    const auto r = tab.row(i);
    bool found = false;
    for (const auto& f : cls.functions) {
      bool ok = true;
      for (std::size_t t = 0; t < cz.size() && ok; ++t)
        ok = static_cast<double>(f[static_cast<std::size_t>(r[cz[t]])]) == r[cl[t]];
      if (ok) {
        found = true;
        break;
      }
    }
    if (!found) return "no class member reproduces the loss path of atom " + std::to_string(i);
  }
  return std::nullopt;
}

/// Sum_t I(L_t^+; U_t | G_{t-1}) against the binomial pattern-growth bound (and its
/// d log(e n / d) relaxation). Inconclusive unless pathwise realizability is certified.
inline BoundSet verify_pattern_scmi(const WorldSpec& world, const LearnerSpec& learner, const BinaryClass& cls, int n,
                                    const Tolerances& tol = {}, int max_depth = 12) {
  require_unit_weights(learner);
  cls.validate();
  if (cls.domain_size != world.space.size())
    return {inconclusive_report("online.pattern_growth", "realizability not certified: class domain is not the atom set")};
  const auto sj = enumerate_joint(world, learner, n);
  if (auto why = realizability_failure(sj, cls))
    return {inconclusive_report("online.pattern_growth", "realizability not certified: " + *why)};
  const int d = littlestone_dimension(cls, max_depth);
  const auto g = pattern_growth_bound(std::max(d, 0), n);
  const double scmi = round_information(sj).loss_sum();
  const std::string note = "Ldim=" + std::to_string(d);
  BoundSet out;
  out.push_back(exact_report("online.pattern_growth", scmi, {{"log_binomial_sum", g.binomial}}, tol, note));
  if (g.sauer_shelah)
    out.push_back(exact_report("online.sauer_shelah", g.binomial, {{"d_log_en_over_d", *g.sauer_shelah}}, tol, note));
  return out;
}

// ---------------------------------------------------------------------------
// Instances whose realizability holds by construction

struct PatternInstance {
  std::string name;
  WorldSpec world;
  LearnerSpec learner;
  BinaryClass cls;
  int n = 1;
};

/// Zero loss everywhere; the class is the zero function.
inline PatternInstance constant_loss_instance(std::size_t m = 3, int n = 3) {
  PatternInstance p;
  p.name = "constant_loss";
  const std::vector<double> uni(m, 1.0 / double(m));
  p.world = WorldSpec{OutcomeSpace::numbered(m), RowKernel::iid(uni)};
  p.learner = LearnerSpec::constant({std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)}, {0.5, 0.5});
  p.cls = BinaryClass{m, {std::vector<int>(m, 0)}};
  p.n = n;
  return p;
}

/// Learner commits to a threshold after the first selected atom and keeps it,
/// so every path's losses come from a single threshold function.
inline PatternInstance threshold_instance(std::size_t m = 3, int n = 3) {
  PatternInstance p;
  p.name = "thresholds";
  const std::vector<double> uni(m, 1.0 / double(m));
  p.world = WorldSpec{OutcomeSpace::numbered(m), RowKernel::iid(uni)};
  p.cls = BinaryClass::thresholds(m);
  const std::size_t T = m + 1, S = T + 1, undecided = T;
  LearnerSpec l;
  l.num_states = S;
  l.initial_state = static_cast<int>(undecided);
  l.loss.assign(S, std::vector<double>(m, 0.0));
  for (std::size_t th = 0; th < T; ++th)
    for (std::size_t z = 0; z < m; ++z) l.loss[th][z] = z >= th ? 1.0 : 0.0;
  MarkovUpdate up;
  up.table.assign(S, std::vector<std::vector<double>>(m, std::vector<double>(S, 0.0)));
  for (std::size_t z = 0; z < m; ++z) {
    for (std::size_t th = 0; th < T; ++th) up.table[th][z][th] = 1.0;
    up.table[undecided][z][z] += 0.5;
    up.table[undecided][z][z + 1] += 0.5;
  }
  l.update = std::move(up);
  p.learner = std::move(l);
  p.n = n;
  return p;
}

/// Round t draws both coordinates from its own pair of atoms {2t-2, 2t-1}, so no
/// atom repeats along a path and the full class on 2n atoms realizes everything.
inline PatternInstance full_class_instance(int n = 3) {
  PatternInstance p;
  p.name = "full_class";
  const auto m = static_cast<std::size_t>(2 * n);
  p.world.space = OutcomeSpace::numbered(m);
  p.world.rows.key = RowKernel::Key::by_round;
  p.world.rows.exchangeable = p.world.rows.conditional_product = true;
  for (int t = 0; t < n; ++t) {
    PairTable tab(m * m, 0.0);
    for (std::size_t a : {2u * t, 2u * t + 1})
      for (std::size_t b : {2u * t, 2u * t + 1}) tab[a * m + b] = 0.25;
    p.world.rows.tables.push_back(std::move(tab));
  }
  p.learner = LearnerSpec::memorize_last(m);
  p.cls = BinaryClass::full(m);
  p.n = n;
  return p;
}

}  // namespace sscmi
