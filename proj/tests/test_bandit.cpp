#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "sscmi/bandit.hpp"
#include "sscmi/random_worlds.hpp"

using namespace sscmi;

namespace {

const BoundReport& find(const BoundSet& set, const std::string& name) {
  for (const auto& r : set)
    if (r.name == name) return r;
  throw std::runtime_error("missing report " + name);
}

void expect_all_hold(const BoundSet& set) {
  for (const auto& r : set)
    EXPECT_EQ(r.verdict, BoundReport::Verdict::holds) << r.name << " lhs=" << r.lhs << " rhs=" << r.rhs() << " " << r.note;
}

// Oracle: expectations of Delta(rho~_t), Delta(rho_t), Delta-hat_t(rho_t) and
// the ghost-branch virtual-arm average for K = 2 Bernoulli arms, written as
// plain nested recursion over (A0, R0, A1, R1, U) without the library's
// enumerator or posterior helpers.
struct OracleExpect {
  double gap_tilde = 0, gap_exp = 0, emp_gap = 0, ghost = 0;
};

void oracle_recurse(const double mu[2], double eps_of(int), double gam_of(int), int s, int T,
                    double pi1, double S0, double S1, double prob, std::vector<std::array<double, 5>>& hist,
                    OracleExpect& out) {
  const int best = mu[0] > mu[1] ? 0 : 1;
  const double gaps[2] = {mu[best] - mu[0], mu[best] - mu[1]};
  if (s > T) {
    const double r0 = S0 / T, r1 = S1 / T;
    const double g = gam_of(T);
    const double e0 = std::exp(g * r0), e1 = std::exp(g * r1);
    const double rho[2] = {e0 / (e0 + e1), e1 / (e0 + e1)};
    const double eps = eps_of(T + 1);
    const double tl[2] = {(1 - 2 * eps) * rho[0] + eps, (1 - 2 * eps) * rho[1] + eps};
    const double rh[2] = {r0, r1};
    out.gap_tilde += prob * (tl[0] * gaps[0] + tl[1] * gaps[1]);
    out.gap_exp += prob * (rho[0] * gaps[0] + rho[1] * gaps[1]);
    out.emp_gap += prob * (rho[0] * (rh[best] - rh[0]) + rho[1] * (rh[best] - rh[1]));
    for (int ab = 0; ab < 2; ++ab)
      for (const auto& h : hist) {
        // h = {pi(arm 1), ghost arm, ghost reward, -, -}
        const double pi[2] = {1 - h[0], h[0]};
        const int ga = static_cast<int>(h[1]);
        auto w = [&](int b) { return ga == b ? h[2] / pi[b] : 0.0; };
        out.ghost += prob * rho[ab] * (w(best) - w(ab)) / T;
      }
    return;
  }
  const double pi[2] = {1 - pi1, pi1};
  for (int a0 = 0; a0 < 2; ++a0)
    for (int y0 = 0; y0 < 2; ++y0)
      for (int a1 = 0; a1 < 2; ++a1)
        for (int y1 = 0; y1 < 2; ++y1)
          for (int u = 0; u < 2; ++u) {
            const double p = pi[a0] * (y0 ? mu[a0] : 1 - mu[a0]) * pi[a1] * (y1 ? mu[a1] : 1 - mu[a1]) * 0.5;
            if (p == 0.0) continue;
            const int a = u ? a1 : a0, y = u ? y1 : y0, ga = u ? a0 : a1, gy = u ? y0 : y1;
            double n0 = S0, n1 = S1;
            (a == 0 ? n0 : n1) += y / pi[a];
            const double g = gam_of(s);
            const double e0 = std::exp(g * n0 / s), e1 = std::exp(g * n1 / s);
            const double eps = eps_of(s + 1);
            const double next1 = (1 - 2 * eps) * e1 / (e0 + e1) + eps;
            hist.push_back({pi1, double(ga), double(gy), 0, 0});
            oracle_recurse(mu, eps_of, gam_of, s + 1, T, next1, n0, n1, prob * p, hist, out);
            hist.pop_back();
          }
}

double const_eps(int) { return 0.1; }
double const_gamma(int) { return 2.0; }

}  // namespace

TEST(BanditSchedule, StandardValues) {
  const auto s = Schedule::standard(2, 0.2);
  const double eps = std::min(0.5, std::sqrt(52.0 * std::log(2.0) / (2 * 1000 * 0.2)));
  EXPECT_NEAR(s.epsilon(1000), eps, 1e-15);
  EXPECT_NEAR(s.epsilon(1000), 0.300182, 5e-7);
  EXPECT_NEAR(s.gamma(1000), 2.0 * std::log(2.0) / (2 * eps), 1e-12);
  EXPECT_NEAR(s.gamma(1000), 2.309091, 5e-7);
  EXPECT_NEAR(s.gamma(1000), 2.309102, 2e-5);
  EXPECT_NO_THROW(s.validate(2, 100000));
}

TEST(BanditSchedule, ViolationsCarryRound) {
  Schedule bad;
  bad.epsilon = [](int t) { return t < 5 ? 0.2 : 0.3; };
  bad.gamma = [](int) { return 1.0; };
  try {
    bad.validate(2, 10);
    FAIL() << "expected ScheduleViolation";
  } catch (const ScheduleViolation& v) {
    EXPECT_EQ(v.round(), 5);
  }
  auto too_big = Schedule::constant(0.6, 1.0);
  EXPECT_THROW(too_big.validate(2, 3), ScheduleViolation);

  BanditOptions opts;
  opts.policy = [](int s, std::span<const double> prev) {
    if (s == 3) return std::vector<double>{0.99, 0.01};
    return std::vector<double>(prev.begin(), prev.end());
  };
  const auto env = BanditEnv::bernoulli({0.9, 0.5});
  try {
    run_bandit(env, Schedule::constant(0.1, 1.0), 5, 1, 0, opts);
    FAIL() << "expected ScheduleViolation";
  } catch (const ScheduleViolation& v) {
    EXPECT_EQ(v.round(), 3);
  }
}

TEST(BanditEnv, LoaderRejectsBadArms) {
  EXPECT_THROW(BanditEnv::bernoulli({0.5, 0.5}), SchemaError);
  EXPECT_THROW(BanditEnv::bernoulli({0.5}), SchemaError);
  EXPECT_THROW(BanditEnv({RewardLaw{{0.0, 1.5}, {0.5, 0.5}}, RewardLaw::point(0.2)}), SchemaError);
  RewardLaw wide;
  for (int i = 0; i < 9; ++i) wide.values.push_back(i / 8.0), wide.probs.push_back(1.0 / 9);
  EXPECT_THROW(BanditEnv({wide, RewardLaw::point(0.1)}), SchemaError);
  const auto env = BanditEnv::bernoulli({0.5, 0.9, 0.7});
  EXPECT_EQ(env.best(), 1);
  EXPECT_NEAR(env.delta_min(), 0.2, 1e-15);
}

TEST(BanditRun, PosteriorInvariants) {
  const auto env = BanditEnv::bernoulli({0.9, 0.5, 0.3});
  const auto sched = Schedule::standard(3, env.delta_min());
  const auto run = run_bandit(env, sched, 2000, 7);
  std::vector<double> prev(3, 1.0 / 3);
  double sums[3] = {0, 0, 0};
  for (const auto& r : run.rounds) {
    for (int a = 0; a < 3; ++a) {
      EXPECT_GE(r.pi[a], sched.epsilon(r.t) - 1e-15);
      EXPECT_NEAR(r.pi[a], prev[a], 1e-15);
    }
    sums[r.arm] += r.reward / r.pi[r.arm];
    double z = 0, st = 0, so = 0;
    for (int a = 0; a < 3; ++a) z += std::exp(r.gamma * sums[a] / r.t);
    for (int a = 0; a < 3; ++a) {
      EXPECT_NEAR(r.rhat[a], sums[a] / r.t, 1e-12);
      EXPECT_NEAR(r.rho[a], std::exp(r.gamma * sums[a] / r.t) / z, 1e-12);
      EXPECT_NEAR(r.rho_tilde[a], (1 - 3 * r.epsilon_next) * r.rho[a] + r.epsilon_next, 1e-15);
      EXPECT_GE(r.rho_tilde[a], r.epsilon_next - 1e-15);
      so += r.rho[a];
      st += r.rho_tilde[a];
    }
    EXPECT_NEAR(so, 1.0, 1e-12);
    EXPECT_NEAR(st, 1.0, 1e-12);
    EXPECT_EQ(r.arm, r.arm_pair[r.u]);
    EXPECT_LE(r.gap_tilde, r.gap_exp + 3 * r.epsilon_next + 1e-12);
    EXPECT_LE(r.emp_gap, std::log(3.0) / r.gamma + 1e-12);
    prev = r.rho_tilde;
  }
}

TEST(BanditRun, GhostsNeverInfluencePolicies) {
  const auto env = BanditEnv::bernoulli({0.8, 0.4});
  const auto sched = Schedule::standard(2, env.delta_min());
  BanditOptions a, b;
  b.ghost_salt = 12345;
  const auto ra = run_bandit(env, sched, 500, 3, 0, a), rb = run_bandit(env, sched, 500, 3, 0, b);
  int ghost_differs = 0;
  for (std::size_t i = 0; i < ra.rounds.size(); ++i) {
    EXPECT_EQ(ra.rounds[i].pi, rb.rounds[i].pi);
    EXPECT_EQ(ra.rounds[i].arm, rb.rounds[i].arm);
    EXPECT_EQ(ra.rounds[i].reward, rb.rounds[i].reward);
    EXPECT_EQ(ra.rounds[i].virtual_arm, rb.rounds[i].virtual_arm);
    const int g = 1 - ra.rounds[i].u;
    ghost_differs += ra.rounds[i].arm_pair[g] != rb.rounds[i].arm_pair[g] ||
                     ra.rounds[i].reward_pair[g] != rb.rounds[i].reward_pair[g];
  }
  EXPECT_GT(ghost_differs, 50);
}

TEST(BanditRun, SelectedPathIsOrdinaryBandit) {
  // Oracle: a plain exponential-weights bandit consuming the same selected
  // feedback stream, with no paired construction at all.
  const double mu[2] = {0.3, 0.75};
  const auto env = BanditEnv::bernoulli({mu[0], mu[1]});
  const auto sched = Schedule::standard(2, env.delta_min());
  const auto run = run_bandit(env, sched, 300, 11, 4);
  double pi[2] = {0.5, 0.5}, S[2] = {0, 0};
  for (int s = 1; s <= 300; ++s) {
    auto g = stream_for(11, 4, s, Stream::feedback).split(0);
    const int a = g.uniform() < pi[0] ? 0 : 1;
    const double y = g.uniform() < 1.0 - mu[a] ? 0.0 : 1.0;
    const auto& r = run.rounds[s - 1];
    ASSERT_EQ(r.arm, a) << "round " << s;
    ASSERT_EQ(r.reward, y) << "round " << s;
    S[a] += y / pi[a];
    const double gm = sched.gamma(s), eps = sched.epsilon(s + 1);
    const double e0 = std::exp(gm * S[0] / s), e1 = std::exp(gm * S[1] / s);
    pi[0] = (1 - 2 * eps) * e0 / (e0 + e1) + eps;
    pi[1] = (1 - 2 * eps) * e1 / (e0 + e1) + eps;
    EXPECT_NEAR(r.rho_tilde[0], pi[0], 1e-12);
  }
}

TEST(BanditRun, DeterministicRewardsGiveUnbiasedEstimates) {
  const auto env = BanditEnv({RewardLaw::point(0.7), RewardLaw::point(0.3)});
  const auto sched = Schedule::standard(2, env.delta_min());
  const int T = 20;
  std::vector<double> r0, r1;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto run = run_bandit(env, sched, T, 99, seed);
    r0.push_back(run.rounds.back().rhat[0]);
    r1.push_back(run.rounds.back().rhat[1]);
  }
  const auto m0 = mean_se(r0), m1 = mean_se(r1);
  EXPECT_LE(std::abs(m0.mean - 0.7), 4 * m0.se);
  EXPECT_LE(std::abs(m1.mean - 0.3), 4 * m1.se);
}

TEST(BanditRun, UniformScheduleKeepsUniformPolicy) {
  const auto env = BanditEnv::bernoulli({0.9, 0.5, 0.2});
  const auto run = run_bandit(env, Schedule::uniform(3), 200, 5);
  for (const auto& r : run.rounds)
    for (double p : r.rho_tilde) EXPECT_NEAR(p, 1.0 / 3, 1e-15);
  EXPECT_NEAR(run.rounds.back().cumulative, 200 * (0.4 + 0.7) / 3, 1e-9);
}

TEST(BanditEmpiricalGap, Examples) {
  const auto env = BanditEnv::bernoulli({0.9, 0.5});
  BanditRun run{env, {}};
  BanditRound r;
  r.t = 1;
  r.pi = {0.5, 0.5};
  r.arm = 0;
  r.reward = 1.0;
  run.rounds.push_back(r);
  const std::vector<double> uniform{0.5, 0.5}, point{1.0, 0.0};
  EXPECT_NEAR(empirical_gap(run, uniform), 1.0, 1e-15);
  EXPECT_EQ(empirical_gap(run, point), 0.0);

  const auto full = run_bandit(env, Schedule::standard(2, 0.4), 400, 2);
  for (int t : {1, 17, 400}) {
    const auto& rt = full.rounds[t - 1];
    EXPECT_NEAR(empirical_gap(full, rt.rho, t), rt.emp_gap, 1e-10);
    EXPECT_EQ(empirical_gap(full, point, t), 0.0);
  }
}

TEST(BanditExact, CapAdmitsThreeRounds) {
  const auto env = BanditEnv::bernoulli({0.9, 0.5});
  const auto eb = enumerate_bandit(env, Schedule::constant(0.1, 2.0), 3);
  EXPECT_EQ(eb.paths.size(), 32768u);
  double mass = 0;
  for (const auto& p : eb.paths) mass += p.prob;
  EXPECT_NEAR(mass, 1.0, 1e-12);
  try {
    enumerate_bandit(env, Schedule::constant(0.1, 2.0), 4);
    FAIL() << "expected EnumerationTooLarge";
  } catch (const EnumerationTooLarge& e) {
    EXPECT_EQ(e.round(), 4);
  }
}

TEST(BanditExact, MatchesIndependentRecursion) {
  const double mu[2] = {0.9, 0.5};
  const auto env = BanditEnv::bernoulli({mu[0], mu[1]});
  const auto eb = enumerate_bandit(env, Schedule::constant(0.1, 2.0), 2);
  for (int T : {1, 2}) {
    OracleExpect o;
    std::vector<std::array<double, 5>> hist;
    oracle_recurse(mu, const_eps, const_gamma, 1, T, 0.5, 0, 0, 1.0, hist, o);
    const auto e = exact_terms(eb, T);
    EXPECT_NEAR(e.gap_tilde, o.gap_tilde, 1e-12);
    EXPECT_NEAR(e.gap_exp, o.gap_exp, 1e-12);
    EXPECT_NEAR(e.emp_gap, o.emp_gap, 1e-12);
    EXPECT_NEAR(e.ghost_virtual, o.ghost, 1e-12);
    EXPECT_NEAR(o.ghost, o.gap_exp, 1e-12);
    // SCMI terms against the entropy-based oracle.
    for (int s = 1; s <= T; ++s) {
      auto ctx = detail::bandit_context(s);
      EXPECT_NEAR(e.scmi[s - 1], oracle::cmi(e.joint, {col("X", s)}, {col("U", s)}, ctx), 1e-12);
    }
  }
}

TEST(BanditExact, AllChecksOnTinyInstance) {
  const auto env = BanditEnv::bernoulli({0.9, 0.5});
  for (const auto& sched : {Schedule::standard(2, env.delta_min()), Schedule::constant(0.1, 2.0),
                            Schedule::constant(0.05, 8.0)}) {
    const auto eb = enumerate_bandit(env, sched, 3);
    for (int t = 1; t <= 3; ++t) {
      const auto set = exact_bandit_checks(eb, t);
      expect_all_hold(set);
      EXPECT_LE(std::abs(find(set, "bandit.decomposition").lhs), 1e-10);
      EXPECT_LE(std::abs(find(set, "bandit.row_swap").lhs), 1e-10);
      EXPECT_GE(find(set, "bandit.one_step_exact").margin, 0.0);
    }
  }
}

TEST(BanditExact, ExactAgreesWithMonteCarlo) {
  const auto env = BanditEnv::bernoulli({0.9, 0.5});
  const auto sched = Schedule::constant(0.1, 2.0);
  const auto e = exact_terms(enumerate_bandit(env, sched, 3), 3);
  EnsembleOptions opts;
  opts.checkpoints = {3};
  const auto ens = run_ensemble(env, sched, 3, 40000, 17, opts);
  for (auto field : {&CheckpointValues::gap_tilde, &CheckpointValues::gap_exp, &CheckpointValues::emp_gap}) {
    const auto m = mean_se(gather(ens, 3, field));
    const double exact = field == &CheckpointValues::gap_tilde ? e.gap_tilde
                         : field == &CheckpointValues::gap_exp ? e.gap_exp
                                                               : e.emp_gap;
    EXPECT_LE(std::abs(m.mean - exact), 4 * m.se + 1e-12);
  }
}

TEST(BanditExact, RandomInstanceSweep) {
  for (std::uint64_t id = 0; id < 12; ++id) {
    auto rng = CounterRng{2024}.split(0x3b, id);
    const double hi = 0.3 + 0.7 * rng.uniform();
    const double lo = hi * (0.05 + 0.9 * rng.uniform());
    const bool swap = rng.bernoulli(0.5);
    const auto env = BanditEnv::bernoulli(swap ? std::vector<double>{lo, hi} : std::vector<double>{hi, lo});
    const double eps = 0.02 + 0.45 * rng.uniform();
    const double gamma = 10.0 * rng.uniform();
    const auto sched = rng.bernoulli(0.5) ? Schedule::constant(eps, gamma) : Schedule::standard(2, env.delta_min(), 0.5);
    const int T = 2;
    const auto eb = enumerate_bandit(env, sched, T);
    for (int t = 1; t <= T; ++t) expect_all_hold(exact_bandit_checks(eb, t));
  }
}

TEST(BanditEntropy, ZeroTemperatureHasNoInformation) {
  const auto env = BanditEnv::bernoulli({0.9, 0.5});
  const auto eb = enumerate_bandit(env, Schedule::constant(0.2, 0.0), 2);
  const auto e = exact_terms(eb, 2);
  EXPECT_NEAR(e.kl_uniform, 0.0, 1e-15);
  EXPECT_NEAR(e.scmi_sum, 0.0, 1e-12);
  expect_all_hold(entropy_reduction_check(e, 2));
}

TEST(BanditEntropy, ChainOnTwoRounds) {
  const auto env = BanditEnv::bernoulli({0.6, 0.1});
  const auto eb = enumerate_bandit(env, Schedule::constant(0.1, 4.0), 2);
  const auto e = exact_terms(eb, 2);
  const auto set = entropy_reduction_check(e, 2);
  expect_all_hold(set);
  EXPECT_GT(e.scmi_sum, 0.0);
  EXPECT_LE(e.kl_uniform, std::log(2.0));
  // Oracle: I(Abar; transcript) from entropies.
  Names all;
  for (int s = 1; s <= 2; ++s)
    for (const char* c : {"A0", "R0", "A1", "R1", "U"}) all.push_back(col(c, s));
  EXPECT_NEAR(e.total_info, oracle::cmi(e.joint, {"Abar"}, all, {}), 1e-12);
}

TEST(BanditSelectorSquare, Examples) {
  const double b = 3.0;
  DiscreteJoint indep({"X", "U", "G"});
  for (int u = 0; u < 2; ++u) {
    indep.add_atom(std::vector<double>{1.0, double(u), 0.0}, 0.25);
    indep.add_atom(std::vector<double>{-2.0, double(u), 0.0}, 0.25);
  }
  auto r = selector_square_check(indep, "X", "U", {"G"}, b);
  EXPECT_EQ(r.verdict, BoundReport::Verdict::holds);
  EXPECT_NEAR(r.lhs, 2.5, 1e-15);
  EXPECT_NEAR(r.rhs(), 1.5 * 2.5, 1e-12);

  DiscreteJoint spike({"X", "U", "G"});
  spike.add_atom(std::vector<double>{b, 0.0, 0.0}, 0.5);
  spike.add_atom(std::vector<double>{0.0, 1.0, 0.0}, 0.5);
  r = selector_square_check(spike, "X", "U", {"G"}, b);
  EXPECT_EQ(r.verdict, BoundReport::Verdict::holds);
  EXPECT_NEAR(r.lhs, b * b / 2, 1e-12);
  EXPECT_NEAR(r.rhs(), 20 * b * b * std::numbers::ln2, 1e-10);

  DiscreteJoint unfair({"X", "U", "G"});
  unfair.add_atom(std::vector<double>{0.0, 0.0, 0.0}, 0.7);
  unfair.add_atom(std::vector<double>{0.0, 1.0, 0.0}, 0.3);
  EXPECT_EQ(selector_square_check(unfair, "X", "U", {"G"}, b).verdict, BoundReport::Verdict::inconclusive);
}

TEST(BanditSelectorSquare, RandomJointSweep) {
  int checked = 0;
  for (std::uint64_t id = 0; id < 10000; ++id) {
    const auto j = random_selector_joint(31, id, 1.0, 4);
    const auto r = selector_square_check(j, "X", "U", {"G"}, 1.0);
    ASSERT_EQ(r.verdict, BoundReport::Verdict::holds) << "joint " << id;
    ASSERT_GE(r.margin, -1e-10);
    ++checked;
  }
  EXPECT_EQ(checked, 10000);
}

TEST(BanditMonteCarlo, OneStepAndOrdinaryMiAtT100) {
  const auto env = BanditEnv::bernoulli({0.9, 0.5});
  const auto sched = Schedule::standard(2, env.delta_min());
  EnsembleOptions opts;
  opts.checkpoints = {10, 50, 100};
  const auto ens = run_ensemble(env, sched, 100, 10000, 1, opts);
  for (int t : opts.checkpoints) {
    const auto one = one_step_bound_check(ens, t);
    expect_all_hold(one);
    EXPECT_GE(find(one, "bandit.one_step").margin - 4 * find(one, "bandit.one_step").std_error, 0.0);
    expect_all_hold(ordinary_mi_bound_check(ens, t));
  }
  expect_all_hold(pathwise_checks(ens));
  const auto ent = entropy_reduction_check(ens, 100);
  EXPECT_EQ(find(ent, "bandit.entropy_reduction").verdict, BoundReport::Verdict::inconclusive);
  EXPECT_EQ(find(ent, "bandit.kl_logk").verdict, BoundReport::Verdict::holds);
}

TEST(BanditMonteCarlo, ParallelAggregationIsDeterministic) {
  const auto env = BanditEnv::bernoulli({0.9, 0.5});
  const auto sched = Schedule::standard(2, env.delta_min());
  EnsembleOptions one, many;
  one.checkpoints = many.checkpoints = {50, 200};
  one.parallel = 1;
  many.parallel = 4;
  many.chunk = 3;
  const auto a = run_ensemble(env, sched, 200, 101, 9, one), b = run_ensemble(env, sched, 200, 101, 9, many);
  for (int t : {50, 200}) {
    const auto ga = gather(a, t, &CheckpointValues::gap_tilde), gb = gather(b, t, &CheckpointValues::gap_tilde);
    EXPECT_EQ(ga, gb);
    EXPECT_EQ(mean_se(ga).mean, mean_se(gb).mean);
  }
}

TEST(BanditRegret, SqrtScalingAndUniformAblation) {
  const auto env = BanditEnv::bernoulli({0.9, 0.5});
  const auto curve = regret_curve(env, Schedule::standard(2, env.delta_min()), 100000, 1000, 5);
  EXPECT_GE(curve.slope, 0.35);
  EXPECT_LE(curve.slope, 0.65);
  for (std::size_t i = 1; i < curve.mean.size(); ++i) EXPECT_GE(curve.mean[i], curve.mean[i - 1]);

  const auto flat = regret_curve(env, Schedule::uniform(2), 100000, 1000, 5);
  EXPECT_NEAR(flat.slope, 1.0, 1e-9);
  EXPECT_GE(flat.slope, 0.85);
}
