#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "oracles.hpp"
#include "sscmi/active.hpp"

using namespace sscmi;

namespace {

ActiveWorld two_by_two(std::vector<double> pxy) { return ActiveWorld{2, 2, std::move(pxy), 8}; }

const BoundReport& find(const BoundSet& set, const std::string& name) {
  for (const auto& r : set)
    if (r.name == name) return r;
  throw std::runtime_error("missing report " + name);
}

// Oracle: E[R(W_n)] for the memorizing learner on the full class over two
// binary features with a constant query probability, by recursion over the
// selected process only (no supersample, no coins beyond P(Q = 1) = p).
double memorize_population_risk(const std::vector<double>& pxy, double p, int w0, int n) {
  std::map<int, double> law{{w0, 1.0}};
  for (int t = 0; t < n; ++t) {
    std::map<int, double> next;
    for (auto [w, pw] : law)
      for (int z = 0; z < 4; ++z) {
        const int x = z / 2, y = z % 2;
        const int relabelled = (w & ~(1 << x)) | (y << x);
        next[relabelled] += pw * pxy[z] * p;
        next[w] += pw * pxy[z] * (1.0 - p);
      }
    law = std::move(next);
  }
  double r = 0.0;
  for (auto [w, pw] : law)
    for (int z = 0; z < 4; ++z) r += pw * pxy[z] * (((w >> (z / 2)) & 1) == z % 2 ? 0.0 : 1.0);
  return r;
}

double column_mean(const DiscreteJoint& t, const std::string& name) { return t.expect(name); }

}  // namespace

TEST(QueryRule, RejectsOutOfRangeAndOffGrid) {
  auto r = QueryRule::constant(0.5, 2, 2);
  EXPECT_NO_THROW(r.validate(2, 2, 8));
  r.table[1][0] = 0.25;
  EXPECT_THROW(r.validate(2, 2, 8), std::invalid_argument);
  r.table[1][0] = 0.6;
  EXPECT_THROW(r.validate(2, 2, 8), std::invalid_argument);
  EXPECT_NO_THROW(QueryRule::constant(0.6, 2, 2).validate(2, 2, 5));
  const auto w = two_by_two({0.25, 0.25, 0.25, 0.25});
  EXPECT_THROW(run_iwal_exact(w, QueryRule::constant(0.3, 4, 2), ActiveLearner::full_class(w, ActiveLearner::Kind::erm), 1),
               std::invalid_argument);
}

TEST(RunIwal, AlwaysQueryIsPassive) {
  const auto w = two_by_two({0.3, 0.1, 0.2, 0.4});
  const auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::erm);
  const auto run = run_iwal(w, QueryRule::constant(1.0, l.num_states(), 2), l, 2, 200, 4);
  for (const auto& tr : run.transcripts)
    for (std::size_t t = 0; t < tr.rounds.size(); ++t) {
      EXPECT_EQ(tr.rounds[t].sample_size, static_cast<int>(t + 1));
      EXPECT_NE(tr.rounds[t].ybar, -1);
    }
  // With weights 1 the IW training risk is the plain selected-path empirical risk of W_n.
  const auto& tab = run.joint.table;
  double plain = 0.0;
  for (int t = 1; t <= 2; ++t) {
    const auto cz0 = tab.column(col("Z0", t)), cz1 = tab.column(col("Z1", t)), cu = tab.column(col("U", t)),
               cw = tab.column("W[2]");
    plain += tab.expect([&](std::span<const double> r) {
      const int z = static_cast<int>(r[cu] == 0.0 ? r[cz0] : r[cz1]);
      return l.hypotheses[static_cast<std::size_t>(r[cw])][static_cast<std::size_t>(z / 2)] == z % 2 ? 0.0 : 1.0;
    });
  }
  EXPECT_NEAR(iw_risks(run.joint).train, plain / 2.0, 1e-14);
}

TEST(RunIwal, HalfQueryHalvesTheSample) {
  const auto w = two_by_two({0.25, 0.25, 0.25, 0.25});
  const auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::memorize);
  const int n = 4;
  const auto rule = QueryRule::constant(0.5, l.num_states(), 2);
  EXPECT_THROW(run_iwal_exact(w, rule, l, n), EnumerationTooLarge);
  IwalRun run{run_iwal_exact(w, rule, l, 2), {}};
  for (std::uint64_t r = 0; r < 20000; ++r) run.transcripts.push_back(sample_iwal(w, rule, l, n, 17, r));
  double s = 0.0, s2 = 0.0;
  for (const auto& tr : run.transcripts) {
    const double k = tr.rounds.back().sample_size;
    s += k;
    s2 += k * k;
  }
  const double N = static_cast<double>(run.transcripts.size());
  const double mean = s / N, se = std::sqrt((s2 / N - mean * mean) / N);
  EXPECT_LT(std::abs(mean - n / 2.0), 4.0 * se);
  double exact = 0.0;
  for (int t = 1; t <= 2; ++t)
    exact += run.joint.table.expect([&, cq0 = run.joint.table.column(col("Q0", t)), cq1 = run.joint.table.column(col("Q1", t)),
                                     cu = run.joint.table.column(col("U", t))](std::span<const double> r) {
      return r[cu] == 0.0 ? r[cq0] : r[cq1];
    });
  EXPECT_NEAR(exact, 1.0, 1e-12);
}

TEST(RunIwal, UncertaintyRuleEnumeratesWithClosure) {
  const auto w = two_by_two({0.1, 0.3, 0.35, 0.25});
  const auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::erm);
  const auto rule = QueryRule::uncertainty(l.hypotheses, 2, 0.25);
  const auto aj = run_iwal_exact(w, rule, l, 2);
  EXPECT_NO_THROW(aj.table.check_closure(1e-12));
  const auto c = aj.table.column("P0[1]");
  bool saw_low = false;
  for (std::size_t i = 0; i < aj.table.size(); ++i) saw_low |= aj.table.at(i, c) == 0.25;
  EXPECT_TRUE(saw_low);
}

TEST(RunIwal, MissingLabelNeverEntersTheSample) {
  const auto w = two_by_two({0.2, 0.3, 0.1, 0.4});
  auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::gibbs);
  const auto rule = QueryRule::uncertainty(l.hypotheses, 2, 0.5);
  for (std::uint64_t rep = 0; rep < 500; ++rep) {
    const auto tr = sample_iwal(w, rule, l, 5, 3, rep);
    int prev = 0;
    for (const auto& r : tr.rounds) {
      const int q = r.u ? r.q1 : r.q0;
      EXPECT_EQ(r.ybar == -1, q == 0);
      EXPECT_EQ(r.sample_size, prev + q);
      prev = r.sample_size;
    }
  }
  // Unqueried rounds leave the weighted losses untouched.
  const auto s0 = detail::active_initial(l);
  const auto s1 = detail::absorb(l, w, s0, 1, std::nullopt, 0.5);
  EXPECT_EQ(s1.weighted_loss, s0.weighted_loss);
  EXPECT_EQ(s1.labeled, 0);
}

TEST(IwRisks, ZeroLossGivesZero) {
  // Labels are a deterministic function of x and the class is that function alone.
  const auto w = two_by_two({0.4, 0.0, 0.0, 0.6});
  ActiveLearner l;
  l.kind = ActiveLearner::Kind::erm;
  l.hypotheses = {{0, 1}};
  const auto aj = run_iwal_exact(w, QueryRule::constant(0.5, 1, 2), l, 2);
  const auto r = iw_risks(aj);
  EXPECT_EQ(r.train, 0.0);
  EXPECT_EQ(r.holdout, 0.0);
}

TEST(PopulationIdentity, ThreeWorlds) {
  const auto w = two_by_two({0.3, 0.2, 0.1, 0.4});
  const auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::memorize);
  const auto H = l.num_states();
  QueryRule state_rule{"state", 0.25, std::vector<std::vector<double>>(H, std::vector<double>(2))};
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t x = 0; x < 2; ++x) state_rule.table[h][x] = l.hypotheses[h][x] == 1 ? 0.25 : 0.875;
  for (const auto& rule : {QueryRule::constant(1.0, H, 2), QueryRule::constant(0.25, H, 2), state_rule}) {
    const auto aj = run_iwal_exact(w, rule, l, 2);
    const double ho = (column_mean(aj.table, "Lgho[1]") + column_mean(aj.table, "Lgho[2]")) / 2.0;
    EXPECT_NEAR(ho, column_mean(aj.table, "R"), 1e-10) << rule.name;
    EXPECT_EQ(population_identity_check(aj).verdict, BoundReport::Verdict::holds) << rule.name;
    const auto r = iw_risks(aj);
    EXPECT_NEAR(r.holdout, ho, 1e-14);
    if (rule.name == "constant")
      EXPECT_NEAR(r.population, memorize_population_risk(w.pxy, rule.p_min, l.initial_state, 2), 1e-12);
  }
}

TEST(PopulationIdentity, IntermediateOutput) {
  const auto w = two_by_two({0.3, 0.2, 0.1, 0.4});
  const auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::memorize);
  const auto aj = run_iwal_exact(w, QueryRule::constant(0.5, l.num_states(), 2), l, 2);
  for (int m = 1; m <= 2; ++m) {
    const auto r = iw_risks(aj, m);
    EXPECT_NEAR(r.holdout, r.population, 1e-10) << m;
    EXPECT_NEAR(r.population, memorize_population_risk(w.pxy, 0.5, 0, m), 1e-12) << m;
    EXPECT_EQ(population_identity_check(aj, m).verdict, BoundReport::Verdict::holds);
  }
}

TEST(ActiveSlow, DataIndependentLearnerIsZero) {
  const auto w = two_by_two({0.3, 0.2, 0.1, 0.4});
  auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::constant);
  const auto aj = run_iwal_exact(w, QueryRule::constant(0.5, l.num_states(), 2), l, 2);
  const auto set = active_slow_bound(aj);
  EXPECT_NEAR(find(set, "active.slow").lhs, 0.0, 1e-12);
  EXPECT_NEAR(find(set, "active.slow").rhs(), 0.0, 1e-12);
}

TEST(ActiveSlow, MemorizingLearnerOneRound) {
  const auto w = two_by_two({0.3, 0.2, 0.1, 0.4});
  const auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::memorize);
  const auto aj = run_iwal_exact(w, QueryRule::constant(0.5, l.num_states(), 2), l, 1);
  const auto set = active_slow_bound(aj);
  const auto& slow = find(set, "active.slow");
  EXPECT_GE(slow.margin, 0.0);
  EXPECT_GT(slow.lhs, 0.0);
  const double I = oracle::cmi(aj.table, Names{"Lp[1]"}, Names{"U[1]"}, active_context(1));
  EXPECT_NEAR(slow.rhs(), 2.0 / 0.5 * std::sqrt(2.0 * I), 1e-9);
  EXPECT_EQ(find(set, "active.row_swap_identity").verdict, BoundReport::Verdict::holds);
}

TEST(ActiveSlow, RandomWorldSweep) {
  for (std::uint64_t id = 0; id < 100; ++id) {
    const auto rw = random_active_world(21, id);
    const auto aj = run_iwal_exact(rw.world, rw.rule, rw.learner, rw.n);
    aj.table.check_closure(1e-10);
    for (const auto& r : active_slow_bound(aj)) EXPECT_GE(r.margin, -1e-10) << id << ' ' << r.name;
    for (const auto& r : active_fast_bound(aj, 1.0, 0.125)) EXPECT_GE(r.margin, -1e-10) << id << ' ' << r.name;
    EXPECT_NEAR(iw_risks(aj).holdout, iw_risks(aj).population, 1e-10) << id;
    EXPECT_EQ(weighted_loss_range_violation(aj), 0.0) << id;
    double oracle_j = 0.0;
    for (int t = 1; t <= rw.n; ++t) oracle_j += oracle::cmi(aj.table, Names{col("Lp", t)}, Names{col("U", t)}, active_context(t));
    double lib_j = 0.0;
    for (double v : active_round_information(aj)) lib_j += v;
    EXPECT_NEAR(lib_j, oracle_j, 1e-10) << id;
  }
}

TEST(ActiveFast, RealizableInterpolation) {
  // Labels follow h*(x) = x; ERM over a class containing h* never errs on queried points.
  const auto w = two_by_two({0.45, 0.0, 0.0, 0.55});
  auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::erm);
  const auto aj = run_iwal_exact(w, QueryRule::constant(0.5, l.num_states(), 2), l, 3);
  const auto r = iw_risks(aj);
  EXPECT_EQ(r.train, 0.0);
  EXPECT_GT(r.population, 0.0);
  const auto set = active_fast_bound(aj, 1.0, 0.125);
  const auto& interp = find(set, "active.fast_interpolation");
  EXPECT_EQ(interp.verdict, BoundReport::Verdict::holds);
  double J = 0.0;
  for (int t = 1; t <= 3; ++t) J += oracle::cmi(aj.table, Names{col("Lp", t)}, Names{col("U", t)}, active_context(t));
  EXPECT_NEAR(interp.rhs(), 2.0 * J / (0.5 * 3.0 * std::numbers::ln2), 1e-9);
}

TEST(ActiveFast, FeasibilityAndConstantLearner) {
  EXPECT_TRUE(shifted_rademacher_feasible(1.0, 0.125));
  const auto w = two_by_two({0.45, 0.0, 0.0, 0.55});
  ActiveLearner l;
  l.kind = ActiveLearner::Kind::constant;
  l.hypotheses = {{0, 1}};
  l.prior = {1.0};
  const auto aj = run_iwal_exact(w, QueryRule::constant(0.5, 1, 2), l, 2);
  EXPECT_THROW(active_fast_bound(aj, 0.1, 0.3), InfeasibleParameters);
  const auto set = active_fast_bound(aj, 1.0, 0.125);
  for (const auto& r : set) {
    EXPECT_EQ(r.lhs, 0.0) << r.name;
    EXPECT_EQ(r.rhs(), 0.0) << r.name;
  }
}

TEST(QueryAware, NeverQueriedCoordinateIsZero) {
  const auto w = two_by_two({0.3, 0.2, 0.1, 0.4});
  const auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::memorize);
  auto aj = run_iwal_exact(w, QueryRule::constant(0.5, l.num_states(), 2), l, 2);
  const auto c = aj.table.column("Q0[1]");
  aj.table = aj.table.filter([c](std::span<const double> r) { return r[c] == 0.0; });
  const auto q = query_aware_cmi(aj, 1);
  EXPECT_EQ(q.lhs, 0.0);
  EXPECT_EQ(q.decomposed, 0.0);
}

TEST(QueryAware, AlwaysQueryIsPlainCmi) {
  const auto w = two_by_two({0.3, 0.2, 0.1, 0.4});
  const auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::memorize);
  const auto aj = run_iwal_exact(w, QueryRule::constant(1.0, l.num_states(), 2), l, 2);
  for (int t = 1; t <= 2; ++t) {
    const auto q = query_aware_cmi(aj, t);
    const double plain = oracle::cmi(aj.table, Names{col("l0", t)}, Names{col("U", t)}, active_context(t));
    EXPECT_NEAR(q.decomposed, plain, 1e-10);
    EXPECT_NEAR(q.lhs, plain, 1e-10);
    EXPECT_GT(q.lhs, 0.0);
  }
}

TEST(QueryAware, MixedCoins) {
  const auto w = two_by_two({0.3, 0.2, 0.1, 0.4});
  auto l = ActiveLearner::full_class(w, ActiveLearner::Kind::gibbs);
  l.eta = 2.0;
  const auto aj = run_iwal_exact(w, QueryRule::uncertainty(l.hypotheses, 2, 0.375), l, 2);
  for (int t = 1; t <= 2; ++t) {
    const auto q = query_aware_cmi(aj, t);
    EXPECT_NEAR(q.lhs, q.decomposed, 1e-10);
    EXPECT_LE(q.lhs, q.state_form + 1e-12);
    // Independent evaluation: Q0-weighted per-context terms via the oracle on the queried sub-table.
    const auto c = aj.table.column(col("Q0", t));
    const auto sub = aj.table.filter([c](std::span<const double> r) { return r[c] == 1.0; });
    const double mass = sub.total_mass();
    DiscreteJoint norm(sub.schema());
    for (std::size_t i = 0; i < sub.size(); ++i) norm.add_atom(sub.row(i), sub.prob(i) / mass);
    EXPECT_NEAR(q.decomposed, mass * oracle::cmi(norm, Names{col("l0", t)}, Names{col("U", t)}, active_context(t)), 1e-10);
  }
  for (const auto& r : query_aware_report(aj)) EXPECT_EQ(r.verdict, BoundReport::Verdict::holds) << r.name;
}
