#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "sscmi/info.hpp"
#include "sscmi/supersample.hpp"
#include "sscmi/util.hpp"

namespace sscmi {

struct Tolerances {
  double exact = 1e-10;  // exact verdict slack
  double sigmas = 4.0;   // Monte Carlo verdict width
};

/// One verified inequality: lhs <= sum(rhs_terms).
struct BoundReport {
  enum class Mode { exact, monte_carlo };
  enum class Verdict { holds, violated, inconclusive };

  std::string name;
  double lhs = 0.0;
  std::vector<std::pair<std::string, double>> rhs_terms;
  double margin = 0.0;
  Mode mode = Mode::exact;
  double std_error = 0.0;
  Verdict verdict = Verdict::holds;
  std::string note;

  [[nodiscard]] double rhs() const {
    double s = 0.0;
    for (const auto& [k, v] : rhs_terms) s += v;
    return s;
  }
};

inline const char* to_string(BoundReport::Verdict v) {
  switch (v) {
    case BoundReport::Verdict::holds: return "holds";
    case BoundReport::Verdict::violated: return "violated";
    case BoundReport::Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

inline const char* to_string(BoundReport::Mode m) { return m == BoundReport::Mode::exact ? "exact" : "monte_carlo"; }

using RhsTerms = std::vector<std::pair<std::string, double>>;

inline BoundReport exact_report(std::string name, double lhs, RhsTerms rhs, const Tolerances& tol = {},
                                std::string note = {}) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs_terms = std::move(rhs);
  r.margin = r.rhs() - lhs;
  r.note = std::move(note);
  r.verdict = r.margin >= -tol.exact ? BoundReport::Verdict::holds : BoundReport::Verdict::violated;
  if (std::isnan(r.margin)) r.verdict = BoundReport::Verdict::inconclusive;
  return r;
}

/// Monte Carlo verdict: holds when the margin clears `sigmas` standard errors,
/// violated when it falls below minus that, inconclusive in between.
inline BoundReport monte_carlo_report(std::string name, double lhs, RhsTerms rhs, double std_error,
                                      const Tolerances& tol = {}, std::string note = {}) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs_terms = std::move(rhs);
  r.margin = r.rhs() - lhs;
  r.mode = BoundReport::Mode::monte_carlo;
  r.std_error = std_error;
  r.note = std::move(note);
  const double w = tol.sigmas * std_error;
  if (r.margin - w >= 0.0) r.verdict = BoundReport::Verdict::holds;
  else if (r.margin + w < 0.0) r.verdict = BoundReport::Verdict::violated;
  else r.verdict = BoundReport::Verdict::inconclusive;
  return r;
}

/// Equality a == b reported as |a - b| <= 0.
inline BoundReport identity_report(std::string name, double a, double b, const Tolerances& tol = {},
                                   std::string note = {}) {
  return exact_report(std::move(name), std::abs(a - b), {}, tol, std::move(note));
}

inline BoundReport inconclusive_report(std::string name, std::string premise) {
  BoundReport r;
  r.name = std::move(name);
  r.verdict = BoundReport::Verdict::inconclusive;
  r.note = std::move(premise);
  r.lhs = r.margin = std::nan("");
  return r;
}

using BoundSet = std::vector<BoundReport>;

inline void append(BoundSet& into, const BoundSet& more) { into.insert(into.end(), more.begin(), more.end()); }

struct VerdictCounts {
  std::size_t holds = 0, violated = 0, inconclusive = 0;
};

inline VerdictCounts count_verdicts(const BoundSet& set) {
  VerdictCounts c;
  for (const auto& r : set) {
    switch (r.verdict) {
      case BoundReport::Verdict::holds: ++c.holds; break;
      case BoundReport::Verdict::violated: ++c.violated; break;
      case BoundReport::Verdict::inconclusive: ++c.inconclusive; break;
    }
  }
  return c;
}

namespace detail {
inline std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}
}  // namespace detail

inline void write_reports_csv(std::ostream& os, const BoundSet& set, std::string_view group_column = {},
                              const std::vector<std::string>& groups = {}) {
  if (!group_column.empty()) os << group_column << ',';
  os << "name,mode,lhs,rhs,margin,std_error,verdict,rhs_terms,note\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& r = set[i];
    if (!group_column.empty()) os << (i < groups.size() ? groups[i] : std::string{}) << ',';
    std::string terms;
    for (const auto& [k, v] : r.rhs_terms) {
      if (!terms.empty()) terms += ';';
      terms += k + '=' + format_number(v);
    }
    os << r.name << ',' << to_string(r.mode) << ',' << format_number(r.lhs) << ',' << format_number(r.rhs()) << ','
       << format_number(r.margin) << ',' << format_number(r.std_error) << ',' << to_string(r.verdict) << ','
       << detail::csv_safe(terms) << ',' << detail::csv_safe(r.note) << '\n';
  }
}

inline void write_summary(std::ostream& os, const BoundSet& set) {
  const auto c = count_verdicts(set);
  os << "reports: " << set.size() << "\nholds: " << c.holds << "\nviolated: " << c.violated
     << "\ninconclusive: " << c.inconclusive << '\n';
  double worst = INFINITY;
  std::string worst_name;
  for (const auto& r : set)
    if (r.verdict != BoundReport::Verdict::inconclusive && r.margin < worst) {
      worst = r.margin;
      worst_name = r.name;
    }
  if (!worst_name.empty()) os << "smallest margin: " << format_number(worst) << " (" << worst_name << ")\n";
  for (const auto& r : set)
    if (r.verdict == BoundReport::Verdict::violated)
      os << "VIOLATED " << r.name << ": lhs " << format_number(r.lhs) << " rhs " << format_number(r.rhs()) << '\n';
}

// ---------------------------------------------------------------------------
// Scalar helpers

/// Bennett-Bernstein envelope psi_b(lambda) = (e^{lambda b} - lambda b - 1) / b^2.
inline double psi_b(double lambda, double b) {
  if (b == 0.0) return lambda * lambda / 2.0;
  const double x = lambda * b;
  return (std::expm1(x) - x) / (b * b);
}

/// Upper envelope lambda^2 / (2 (1 - lambda b / 3)), valid for 0 < lambda < 3/b.
inline double psi_envelope(double lambda, double b) { return lambda * lambda / (2.0 * (1.0 - lambda * b / 3.0)); }

/// lambda = C / (B + C b / 3).
inline double bernstein_lambda(double C, double B, double b) { return C / (B + C * b / 3.0); }

/// 1 - B lambda / (1 - lambda b / 3).
inline double bernstein_coefficient(double lambda, double B, double b) { return 1.0 - B * lambda / (1.0 - lambda * b / 3.0); }

/// Information coefficient 2 (B + C b / 3) / (C (1 - C)) of the explicit form (per 1/n).
inline double bernstein_explicit_coefficient(double C, double B, double b) {
  return 2.0 * (B + C * b / 3.0) / (C * (1.0 - C));
}

/// e^{2 eta} + e^{-2 eta (C + 1)} - 2; feasible when <= 0.
inline double shifted_rademacher_residual(double C, double eta) {
  return std::exp(2.0 * eta) + std::exp(-2.0 * eta * (C + 1.0)) - 2.0;
}

inline bool shifted_rademacher_feasible(double C, double eta, double slack = 1e-15) {
  return C > 0.0 && eta > 0.0 && shifted_rademacher_residual(C, eta) <= slack;
}

/// Largest feasible eta for a given C, by bisection on (0, log 2 / 2].
inline double eta_frontier(double C, int iterations = 200) {
  if (!(C > 0.0)) throw std::invalid_argument("eta_frontier: C must be positive");
  double lo = 0.0, hi = std::numbers::ln2 / 2.0;
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == 0.0 || shifted_rademacher_residual(C, mid) <= 0.0) lo = mid;
    else hi = mid;
  }
  return lo;
}

/// Value of (1 + C) L + J / (eta n) at the explicit optimizer C = min(1, sqrt(8 x / L)), eta = C / 8.
inline double shifted_rademacher_explicit(double L, double J, double n) {
  const double x = J / n;
  return L + 8.0 * x + 4.0 * std::sqrt(2.0 * L * x);
}

inline std::pair<double, double> shifted_rademacher_optimizer(double L, double J, double n) {
  const double x = J / n;
  const double C = L > 0.0 ? std::min(1.0, std::sqrt(8.0 * x / L)) : 1.0;
  return {C, C / 8.0};
}

/// Default (C, eta) grid: the frontier root for several C, plus eta = C/8 where C <= 1.
inline std::vector<std::pair<double, double>> default_shifted_grid() {
  std::vector<std::pair<double, double>> g;
  for (double C : {0.05, 0.1, 0.2, 0.25, 0.5, 0.75, 1.0, 2.0, 4.0, 16.0}) {
    if (C <= 1.0) g.emplace_back(C, C / 8.0);
    g.emplace_back(C, eta_frontier(C));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Per-round information terms of a supersample joint

struct RoundInfo {
  std::vector<double> loss;   // I(Lp_t; U_t | G_{t-1})
  std::vector<double> state;  // I(W_t; U_t | G_{t-1})
  [[nodiscard]] double loss_sum() const { return sum(loss); }
  [[nodiscard]] double state_sum() const { return sum(state); }
  [[nodiscard]] double loss_sqrt_sum() const { return sqrt_sum(loss); }
  [[nodiscard]] double state_sqrt_sum() const { return sqrt_sum(state); }
  static double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  static double sqrt_sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::sqrt(2.0 * std::max(x, 0.0));
    return s;
  }
};

inline RoundInfo round_information(const SupersampleJoint& sj) {
  RoundInfo ri;
  for (int t = 1; t <= sj.horizon; ++t) {
    ri.loss.push_back(conditional_mutual_information(sj.table, col("Lp", t), col("U", t), context_names(t)).nats);
    ri.state.push_back(conditional_mutual_information(sj.table, col("W", t), col("U", t), context_names(t)).nats);
  }
  return ri;
}

inline BoundReport data_processing_report(std::string name, const std::vector<double>& smaller,
                                          const std::vector<double>& larger, const Tolerances& tol) {
  double worst = -INFINITY;
  for (std::size_t t = 0; t < smaller.size(); ++t) worst = std::max(worst, smaller[t] - larger[t]);
  if (smaller.empty()) worst = 0.0;
  return exact_report(std::move(name), std::max(worst, 0.0), {}, tol, "max over rounds of loss-info minus state-info");
}

// ---------------------------------------------------------------------------
// Bounds on supersample joints

/// Slow-rate chain |gap| <= (2/n) sum sqrt(2 I_L) <= (2/n) sum sqrt(2 I_W) <= 2 sqrt((2/n) sum I_W).
inline BoundSet slow_rate_bound(const SupersampleJoint& sj, const Tolerances& tol = {}) {
  if (!sj.exchangeable)
    throw NotApplicable("slow-rate SCMI bound needs exchangeable rows; use two_coordinate_bound");
  const double n = sj.horizon;
  const auto risks = sequential_risks(sj);
  const auto ri = round_information(sj);
  const double a = 2.0 / n * ri.loss_sqrt_sum();
  const double b = 2.0 / n * ri.state_sqrt_sum();
  const double c = 2.0 * std::sqrt(2.0 / n * ri.state_sum());
  BoundSet out;
  out.push_back(exact_report("scmi_slow.loss", std::abs(risks.gap), {{"loss_info", a}}, tol));
  out.push_back(exact_report("scmi_slow.loss_vs_state_roundwise", a, {{"state_info_roundwise", b}}, tol));
  out.push_back(exact_report("scmi_slow.state_roundwise_vs_total", b, {{"state_info_total", c}}, tol));
  out.push_back(data_processing_report("scmi.data_processing", ri.loss, ri.state, tol));
  return out;
}

/// Exchangeability-free chain on the signed difference Lp - Lm.
inline BoundSet two_coordinate_bound(const SupersampleJoint& sj, const Tolerances& tol = {}) {
  const int N = sj.horizon;
  const double n = N;
  auto tab = sj.table;
  for (int t = 1; t <= N; ++t) {
    const auto cp = tab.column(col("Lp", t)), cm = tab.column(col("Lm", t));
    tab = tab.with_column(col("D", t), [cp, cm](std::span<const double> r) { return r[cp] - r[cm]; });
  }
  std::vector<double> id, ipair, iw;
  for (int t = 1; t <= N; ++t) {
    const auto ctx = context_names(t);
    id.push_back(conditional_mutual_information(tab, Names{col("D", t)}, Names{col("U", t)}, ctx).nats);
    ipair.push_back(
        conditional_mutual_information(tab, Names{col("Lp", t), col("Lm", t)}, Names{col("U", t)}, ctx).nats);
    iw.push_back(conditional_mutual_information(tab, Names{col("W", t)}, Names{col("U", t)}, ctx).nats);
  }
  const double gap = sequential_risks(sj).gap;
  const double a = RoundInfo::sqrt_sum(id) / n;
  const double b = RoundInfo::sqrt_sum(ipair) / n;
  const double c = RoundInfo::sqrt_sum(iw) / n;
  const double d = std::sqrt(2.0 / n * RoundInfo::sum(iw));
  BoundSet out;
  out.push_back(exact_report("two_coordinate.difference", std::abs(gap), {{"difference_info", a}}, tol));
  out.push_back(exact_report("two_coordinate.difference_vs_pair", a, {{"pair_info", b}}, tol));
  out.push_back(exact_report("two_coordinate.pair_vs_state", b, {{"state_info_roundwise", c}}, tol));
  out.push_back(exact_report("two_coordinate.state_roundwise_vs_total", c, {{"state_info_total", d}}, tol));
  return out;
}

/// Bernstein parameters. b <= 0 means "use the observed range of the excess";
/// lambda <= 0 means "derive lambda from C".
struct BernsteinParams {
  double b = 0.0;
  double B = 1.0;
  double lambda = 0.0;
  double C = 0.5;
};

struct ExcessSummary {
  double holdout = 0.0;        // R^ho
  double train = 0.0;          // R^tr
  double second_moment = 0.0;  // (1/n) sum E[e0^2]
  double max_abs = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
  std::vector<double> info;    // I(e0_t; U_t | G_{t-1})
  [[nodiscard]] double B_empirical() const {
    if (second_moment == 0.0) return 0.0;
    return holdout > 0.0 ? second_moment / holdout : INFINITY;
  }
};

/// Excess e_{t,u} = Q (loss(W_t, Z_u) - loss(w*, Z_u)) and its summaries.
inline ExcessSummary excess_summary(const SupersampleJoint& sj, int comparator) {
  if (comparator < 0 || static_cast<std::size_t>(comparator) >= sj.loss.size())
    throw std::invalid_argument("comparator state out of range");
  const int N = sj.horizon;
  const auto& lw = sj.loss[static_cast<std::size_t>(comparator)];
  auto tab = sj.table;
  for (int t = 1; t <= N; ++t) {
    const auto cq = tab.column(col("Q", t)), c0 = tab.column(col("Z0", t)), c1 = tab.column(col("Z1", t));
    const auto l0 = tab.column(col("l0", t)), l1 = tab.column(col("l1", t));
    tab = tab.with_column(col("e0", t), [=, &lw](std::span<const double> r) {
      return r[cq] * (r[l0] - lw[static_cast<std::size_t>(r[c0])]);
    });
    tab = tab.with_column(col("e1", t), [=, &lw](std::span<const double> r) {
      return r[cq] * (r[l1] - lw[static_cast<std::size_t>(r[c1])]);
    });
  }
  ExcessSummary s;
  s.min_value = INFINITY;
  s.max_value = -INFINITY;
  for (int t = 1; t <= N; ++t) {
    const auto cu = tab.column(col("U", t)), e0 = tab.column(col("e0", t)), e1 = tab.column(col("e1", t));
    s.holdout += tab.expect([=](std::span<const double> r) { return r[cu] == 1.0 ? r[e0] : r[e1]; });
    s.train += tab.expect([=](std::span<const double> r) { return r[cu] == 1.0 ? r[e1] : r[e0]; });
    s.second_moment += tab.expect([=](std::span<const double> r) { return r[e0] * r[e0]; });
    for (std::size_t i = 0; i < tab.size(); ++i) {
      if (tab.prob(i) <= 0.0) continue;
      for (auto c : {e0, e1}) {
        const double v = tab.at(i, c);
        s.max_abs = std::max(s.max_abs, std::abs(v));
        s.min_value = std::min(s.min_value, v);
        s.max_value = std::max(s.max_value, v);
      }
    }
    s.info.push_back(conditional_mutual_information(tab, col("e0", t), col("U", t), context_names(t)).nats);
  }
  s.holdout /= N;
  s.train /= N;
  s.second_moment /= N;
  return s;
}

/// Fixed state minimizing the weighted ghost loss (1/n) sum E[Q loss(w, Z_ghost)].
/// Sweeps use it as w*; the nonnegative-excess premise is still checked, not assumed.
inline int best_comparator(const SupersampleJoint& sj) {
  int best = 0;
  double best_value = INFINITY;
  for (std::size_t w = 0; w < sj.loss.size(); ++w) {
    double v = 0.0;
    for (int t = 1; t <= sj.horizon; ++t) {
      const auto cq = sj.table.column(col("Q", t)), cu = sj.table.column(col("U", t)),
                 c0 = sj.table.column(col("Z0", t)), c1 = sj.table.column(col("Z1", t));
      v += sj.table.expect([&](std::span<const double> r) {
        return r[cq] * sj.loss[w][static_cast<std::size_t>(r[cu] == 1.0 ? r[c0] : r[c1])];
      });
    }
    if (v < best_value - 1e-15) {
      best_value = v;
      best = static_cast<int>(w);
    }
  }
  return best;
}

/// Bernstein-type bound, its explicit corollary, and the unit-interval special case.
inline BoundSet bernstein_bound(const SupersampleJoint& sj, int comparator, const BernsteinParams& params,
                                const Tolerances& tol = {}) {
  if (!sj.exchangeable) throw NotApplicable("Bernstein SCMI bound needs exchangeable rows");
  const auto ex = excess_summary(sj, comparator);
  const double n = sj.horizon;
  const double info = RoundInfo::sum(ex.info);
  BoundSet out;
  const std::string premise_note = "B_empirical=" + format_number(ex.B_empirical()) +
                                   " R_ho=" + format_number(ex.holdout) + " R_tr=" + format_number(ex.train);

  const double b = params.b > 0.0 ? params.b : ex.max_abs;
  if (ex.max_abs > b + 1e-12) {
    out.push_back(inconclusive_report("bernstein.main", "premise failed: |e| exceeds declared b; " + premise_note));
    return out;
  }
  if (b == 0.0) {
    out.push_back(exact_report("bernstein.main", 0.0, {{"train", 0.0}, {"info", 0.0}}, tol, "b = 0: trivial"));
    return out;
  }
  if (ex.holdout < -tol.exact) {
    out.push_back(inconclusive_report("bernstein.main", "premise failed: nonnegative excess R_ho >= 0; " + premise_note));
    return out;
  }
  const double B = std::max(params.B, ex.B_empirical());
  if (!std::isfinite(B)) {
    out.push_back(inconclusive_report("bernstein.main", "premise failed: Bernstein condition with finite B; " + premise_note));
    return out;
  }
  const double lambda = params.lambda > 0.0 ? params.lambda : bernstein_lambda(params.C, B, b);
  const double coef = bernstein_coefficient(lambda, B, b);
  if (!(lambda > 0.0 && lambda < 3.0 / b && coef > 0.0)) {
    out.push_back(inconclusive_report("bernstein.main", "premise failed: lambda infeasible; " + premise_note));
    return out;
  }
  const double R_ho = std::max(ex.holdout, 0.0);
  out.push_back(exact_report("bernstein.main", coef * R_ho, {{"train", ex.train}, {"info", 2.0 / (lambda * n) * info}},
                             tol, premise_note + " B_used=" + format_number(B)));
  if (params.C > 0.0 && params.C < 1.0) {
    const double C = params.C;
    out.push_back(exact_report("bernstein.explicit", R_ho,
                               {{"train", ex.train / (1.0 - C)}, {"info", bernstein_explicit_coefficient(C, B, b) / n * info}},
                               tol, "C=" + format_number(C)));
  }
  const bool unit = ex.min_value >= -1e-15 && ex.max_value <= 1.0 + 1e-15;
  if (unit && ex.train <= ex.holdout + 1e-15) {
    // B = 1 follows from e^2 <= e and R_tr <= R_ho.
    out.push_back(exact_report("bernstein.unit_interval", R_ho, {{"train", 2.0 * ex.train}, {"info", 28.0 / (3.0 * n) * info}},
                               tol, "second_moment<=R_ho: " + std::string(ex.second_moment <= R_ho + 1e-15 ? "yes" : "no")));
  }
  return out;
}

/// Shifted-Rademacher bounds for (C, eta) plus the explicit and interpolation forms.
inline BoundSet shifted_rademacher_bound(const SupersampleJoint& sj, double C, double eta, const Tolerances& tol = {}) {
  if (!sj.exchangeable) throw NotApplicable("shifted-Rademacher SCMI bound needs exchangeable rows");
  if (!shifted_rademacher_feasible(C, eta))
    throw InfeasibleParameters("(C, eta) violates e^{2 eta} + e^{-2 eta (C+1)} <= 2", shifted_rademacher_residual(C, eta));
  for (const auto& row : sj.loss)
    for (double v : row)
      if (v < 0.0) throw NotApplicable("shifted-Rademacher bound needs nonnegative losses");
  const double n = sj.horizon;
  const auto risks = sequential_risks(sj);
  const auto ri = round_information(sj);
  const double JL = ri.loss_sum(), JW = ri.state_sum();
  BoundSet out;
  const std::string pn = "C=" + format_number(C) + " eta=" + format_number(eta);
  out.push_back(exact_report("shifted_rademacher.loss", risks.holdout,
                             {{"train", (1.0 + C) * risks.train}, {"info", JL / (eta * n)}}, tol, pn));
  out.push_back(exact_report("shifted_rademacher.state", risks.holdout,
                             {{"train", (1.0 + C) * risks.train}, {"info", JW / (eta * n)}}, tol, pn));
  out.push_back(exact_report("shifted_rademacher.explicit", risks.holdout,
                             {{"train", risks.train}, {"info", 8.0 * JL / n}, {"cross", 4.0 * std::sqrt(2.0 * risks.train * JL / n)}},
                             tol));
  out.push_back(exact_report("shifted_rademacher.explicit_state", risks.holdout,
                             {{"train", risks.train}, {"info", 8.0 * JW / n}, {"cross", 4.0 * std::sqrt(2.0 * risks.train * JW / n)}},
                             tol));
  if (risks.train == 0.0)
    out.push_back(exact_report("shifted_rademacher.interpolation", risks.holdout,
                               {{"info", 2.0 / (n * std::numbers::ln2) * JL}}, tol, "zero training risk"));
  // The explicit form is an instance of the parametric one, so it cannot beat the grid minimum.
  auto grid = default_shifted_grid();
  grid.push_back(shifted_rademacher_optimizer(risks.train, JL, n));
  double best = INFINITY;
  for (const auto& [c, e] : grid) {
    // J = 0 puts the optimizer at C = 0, where the information term vanishes in the limit.
    const double info = JL == 0.0 ? 0.0 : JL / (e * n);
    best = std::min(best, (1.0 + c) * risks.train + info);
  }
  out.push_back(exact_report("shifted_rademacher.grid_dominance", best,
                             {{"explicit", shifted_rademacher_explicit(risks.train, JL, n)}}, Tolerances{1e-9, tol.sigmas}));
  return out;
}

/// Stopping rule: I_t = continue_at(H_{t-1}, t). `reads` lists the history
/// variables the rule inspects; anything not retained is rejected.
struct PredictableRule {
  std::string name;
  std::vector<Retained> reads;
  std::function<bool(const History&, int)> continue_at;

  static PredictableRule never_stop() {
    return {"never", {}, [](const History&, int) { return true; }};
  }
  static PredictableRule stop_immediately() {
    return {"tau0", {}, [](const History&, int) { return false; }};
  }
  /// Continue until a past round had positive selected loss under `loss`.
  static PredictableRule stop_after_first_loss(std::vector<std::vector<double>> loss) {
    return {"first_loss", {Retained::Z, Retained::W}, [loss = std::move(loss)](const History& h, int) {
              for (const auto& r : h)
                if (loss[static_cast<std::size_t>(r.w)][static_cast<std::size_t>(r.z)] > 0.0) return false;
              return true;
            }};
  }
};

/// Cumulative stopped bounds with l_t = I_t loss(W_t, Z_{t,0}).
inline BoundSet stopping_bound(const SupersampleJoint& sj, const PredictableRule& rule, double C = 1.0,
                               double eta = 0.125, const Tolerances& tol = {}) {
  for (auto r : rule.reads)
    if (std::find(sj.retained.begin(), sj.retained.end(), r) == sj.retained.end())
      throw NotApplicable("stopping rule '" + rule.name + "' reads " + to_string(r) +
                          ", which is not part of the learner history");
  if (!sj.exchangeable) throw NotApplicable("stopping bound needs exchangeable rows");
  if (!shifted_rademacher_feasible(C, eta))
    throw InfeasibleParameters("(C, eta) violates the shifted-Rademacher feasibility condition",
                               shifted_rademacher_residual(C, eta));
  const int N = sj.horizon;
  auto tab = sj.table;
  double Ltr = 0.0, Lho = 0.0;
  std::vector<double> il, iw;
  for (int t = 1; t <= N; ++t) {
    const auto ch = tab.column(col("H", t));
    tab = tab.with_column(col("I", t), [&](std::span<const double> r) {
      return rule.continue_at(sj.histories[static_cast<std::size_t>(r[ch])], t) ? 1.0 : 0.0;
    });
    const auto ci = tab.column(col("I", t)), l0 = tab.column(col("l0", t)), l1 = tab.column(col("l1", t)),
               cu = tab.column(col("U", t));
    tab = tab.with_column(col("ell", t), [=](std::span<const double> r) { return r[ci] * r[l0]; });
    Ltr += tab.expect([=](std::span<const double> r) { return r[ci] * (r[cu] == 0.0 ? r[l0] : r[l1]); });
    Lho += tab.expect([=](std::span<const double> r) { return r[ci] * (r[cu] == 0.0 ? r[l1] : r[l0]); });
    // W_t is charged only on rounds where the indicator is on; I_t is a function of the context.
    il.push_back(conditional_mutual_information(tab, col("ell", t), col("U", t), context_names(t)).nats);
    iw.push_back(conditional_mutual_information(tab, col("W", t), col("U", t), context_names(t)).nats);
  }
  const double JL = RoundInfo::sum(il), JW = RoundInfo::sum(iw);
  BoundSet out;
  const std::string pn = "rule=" + rule.name;
  out.push_back(exact_report("stopping.slow", std::abs(Lho - Ltr), {{"loss_info", 2.0 * RoundInfo::sqrt_sum(il)}}, tol, pn));
  out.push_back(exact_report("stopping.shifted_loss", Lho, {{"train", (1.0 + C) * Ltr}, {"info", JL / eta}}, tol, pn));
  out.push_back(exact_report("stopping.shifted_state", Lho, {{"train", (1.0 + C) * Ltr}, {"info", JW / eta}}, tol, pn));
  out.push_back(exact_report("stopping.explicit", Lho,
                             {{"train", Ltr}, {"info", 8.0 * JL}, {"cross", 4.0 * std::sqrt(2.0 * Ltr * JL)}}, tol, pn));
  if (Ltr == 0.0)
    out.push_back(exact_report("stopping.interpolation", Lho, {{"info", 2.0 / std::numbers::ln2 * JL}}, tol, pn));
  return out;
}

}  // namespace sscmi
