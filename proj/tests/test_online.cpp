#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "sscmi/online.hpp"
#include "sscmi/random_worlds.hpp"

using namespace sscmi;

namespace {

// Decision form: a depth-d mistake tree is shattered iff some point splits the
// class into two nonempty halves that each shatter depth d-1.
bool shatters(const FunctionTable& h, std::size_t m, int d) {
  if (h.empty()) return false;
  if (d == 0) return true;
  for (std::size_t x = 0; x < m; ++x) {
    FunctionTable a, b;
    for (const auto& f : h) (f[x] ? b : a).push_back(f);
    if (shatters(a, m, d - 1) && shatters(b, m, d - 1)) return true;
  }
  return false;
}

int ldim_oracle(const BinaryClass& c) {
  int d = 0;
  while (shatters(c.functions, c.domain_size, d + 1)) ++d;
  return d;
}

int vc_oracle(const BinaryClass& c) {
  int best = 0;
  for (unsigned set = 0; set < (1u << c.domain_size); ++set) {
    std::vector<std::vector<int>> patterns;
    for (const auto& f : c.functions) {
      std::vector<int> p;
      for (std::size_t x = 0; x < c.domain_size; ++x)
        if (set >> x & 1u) p.push_back(f[x]);
      if (std::find(patterns.begin(), patterns.end(), p) == patterns.end()) patterns.push_back(p);
    }
    const int k = std::popcount(set);
    if (patterns.size() == (std::size_t{1} << k)) best = std::max(best, k);
  }
  return best;
}

BinaryClass random_class(std::uint64_t id, std::size_t m) {
  CounterRng rng = CounterRng{99}.split(0x77, id);
  BinaryClass c{m, {}};
  for (std::uint32_t b = 0; b < (1u << m); ++b)
    if (rng.bernoulli(0.3)) {
      std::vector<int> f(m);
      for (std::size_t x = 0; x < m; ++x) f[x] = static_cast<int>(b >> x & 1u);
      c.functions.push_back(std::move(f));
    }
  if (c.functions.empty()) c.functions.push_back(std::vector<int>(m, 0));
  return c;
}

double oracle_scmi_sum(const SupersampleJoint& sj) {
  double s = 0.0;
  for (int t = 1; t <= sj.horizon; ++t) {
    auto ctx = context_names(t);
    s += oracle::cmi(sj.table, Names{col("Lp", t)}, Names{col("U", t)}, ctx);
  }
  return s;
}

const BoundReport& find(const BoundSet& set, const std::string& name) {
  for (const auto& r : set)
    if (r.name == name) return r;
  throw std::runtime_error("missing report " + name);
}

}  // namespace

TEST(Gibbs, PosteriorNormalizedOnRandomHistories) {
  CounterRng rng(5);
  for (int k = 0; k < 50; ++k) {
    GibbsLearner g;
    g.eta = 10.0 * rng.uniform();
    g.prior = detail::random_distribution(rng, 4, 0.0);
    g.loss.assign(4, std::vector<double>(3));
    for (auto& row : g.loss)
      for (auto& v : row) v = rng.uniform();
    std::vector<int> hist;
    for (int t = 0; t < 6; ++t) {
      hist.push_back(static_cast<int>(rng() % 3));
      const auto p = g.posterior(hist);
      double s = 0.0;
      for (double v : p) s += v;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Gibbs, PosteriorMatchesClosedForm) {
  GibbsLearner g{2.0, {0.25, 0.75}, {{0.0, 1.0}, {1.0, 0.5}}};
  const std::vector<int> hist{0, 1, 1};
  const double a = 0.25 * std::exp(-2.0 * 2.0), b = 0.75 * std::exp(-2.0 * 2.0);
  const auto p = g.posterior(hist);
  EXPECT_NEAR(p[0], a / (a + b), 1e-14);
  EXPECT_NEAR(p[1], b / (a + b), 1e-14);
}

TEST(RunOnline, ZeroRateIsDataIndependent) {
  const std::vector<double> marg{0.3, 0.7};
  WorldSpec w{OutcomeSpace::numbered(2), RowKernel::iid(marg)};
  GibbsLearner g{0.0, {0.5, 0.5}, {{0.0, 1.0}, {1.0, 0.0}}};
  const auto set = run_online(w, g, 3);
  const auto sj = enumerate_joint(w, g.spec(), 3);
  EXPECT_NEAR(oracle_scmi_sum(sj), 0.0, 1e-12);
  EXPECT_NEAR(find(set, "scmi_slow.loss").lhs, 0.0, 1e-14);
  EXPECT_NEAR(find(set, "scmi_slow.loss").rhs(), 0.0, 1e-12);
  for (const auto& r : set) EXPECT_EQ(r.verdict, BoundReport::Verdict::holds) << r.name;
}

TEST(RunOnline, LargeRateRealizableInterpolates) {
  // Hypothesis 0 is perfect on the support {0, 1}; hypothesis 1 errs on atom 1.
  const std::vector<double> marg{0.5, 0.5, 0.0};
  WorldSpec w{OutcomeSpace::numbered(3), RowKernel::iid(marg)};
  GibbsLearner g{50.0, {0.5, 0.5}, {{0.0, 0.0, 1.0}, {0.0, 1.0, 0.0}}};
  const auto set = run_online(w, g, 3);
  const auto sj = enumerate_joint(w, g.spec(), 3);
  const auto risks = sequential_risks(sj);
  EXPECT_LT(risks.train, 1e-15);
  const auto& interp = find(set, "online.interpolation");
  EXPECT_EQ(interp.verdict, BoundReport::Verdict::holds);
  EXPECT_NEAR(interp.rhs(), 2.0 * oracle_scmi_sum(sj) / (3.0 * std::numbers::ln2), 1e-5);
  EXPECT_GT(interp.lhs, 0.0);
}

TEST(RunOnline, RejectsNonUnitWeights) {
  const std::vector<double> marg{0.5, 0.5};
  WorldSpec w{OutcomeSpace::numbered(2), RowKernel::iid(marg)};
  auto l = LearnerSpec::memorize_last(2);
  l.weight = ConstantWeight{0.5};
  EXPECT_THROW(run_online(w, l, 2), NotApplicable);
}

TEST(RunOnline, RandomWorldSweep) {
  int checked = 0;
  for (std::uint64_t id = 0; id < 60; ++id) {
    auto rw = random_world(8, id);
    CounterRng rng = CounterRng{8}.split(0x78, id);
    GibbsLearner g;
    g.eta = 4.0 * rng.uniform();
    g.prior = detail::random_distribution(rng, rw.learner.num_states, 0.0);
    g.loss = rw.learner.loss;
    if (!rw.world.retains(Retained::Z)) continue;
    const auto set = run_online(rw.world, g, rw.horizon);
    const auto sj = enumerate_joint(rw.world, g.spec(), rw.horizon);
    const auto& slow = find(set, "scmi_slow.loss");
    EXPECT_GE(slow.margin, -1e-10) << id;
    double oracle_rhs = 0.0;
    for (int t = 1; t <= rw.horizon; ++t)
      oracle_rhs += std::sqrt(2.0 * std::max(0.0, oracle::cmi(sj.table, Names{col("Lp", t)}, Names{col("U", t)}, context_names(t))));
    EXPECT_NEAR(slow.rhs(), 2.0 / rw.horizon * oracle_rhs, 1e-6) << id;
    EXPECT_GE(find(set, "online.shifted_explicit").margin, -1e-10) << id;
    ++checked;
  }
  EXPECT_GT(checked, 40);
}

TEST(Littlestone, Examples) {
  EXPECT_EQ(littlestone_dimension(BinaryClass{3, {{0, 1, 0}}}), 0);
  for (std::size_t m = 1; m <= 5; ++m) EXPECT_EQ(littlestone_dimension(BinaryClass::full(m)), static_cast<int>(m));
  const auto th = BinaryClass::thresholds(3);
  ASSERT_EQ(th.functions.size(), 4u);
  EXPECT_EQ(littlestone_dimension(th), 2);
  EXPECT_EQ(ldim_oracle(th), 2);
  EXPECT_EQ(littlestone_dimension(BinaryClass{2, {}}), -1);
}

TEST(Littlestone, ThresholdsGrowLogarithmically) {
  for (std::size_t m = 1; m <= 15; ++m) {
    const auto th = BinaryClass::thresholds(m);
    EXPECT_EQ(littlestone_dimension(th), static_cast<int>(std::floor(std::log2(double(m + 1))))) << m;
    EXPECT_EQ(vc_dimension(th), 1);
  }
}

TEST(Littlestone, MatchesOracleAndDominatesVc) {
  for (std::uint64_t id = 0; id < 50; ++id) {
    const auto c = random_class(id, 3 + id % 3);
    const int ld = littlestone_dimension(c);
    EXPECT_EQ(ld, ldim_oracle(c)) << id;
    EXPECT_EQ(vc_dimension(c), vc_oracle(c)) << id;
    EXPECT_GE(ld, vc_dimension(c)) << id;
  }
}

TEST(Littlestone, MonotoneUnderAddingFunctions) {
  for (std::uint64_t id = 0; id < 30; ++id) {
    auto c = random_class(100 + id, 4);
    const int before = littlestone_dimension(c);
    for (std::uint32_t b = 0; b < 16; ++b) {
      std::vector<int> f(4);
      for (int x = 0; x < 4; ++x) f[x] = static_cast<int>(b >> x & 1u);
      if (std::find(c.functions.begin(), c.functions.end(), f) != c.functions.end()) continue;
      auto bigger = c;
      bigger.functions.push_back(f);
      EXPECT_GE(littlestone_dimension(bigger), before);
    }
  }
}

TEST(Littlestone, DepthCap) {
  EXPECT_THROW(littlestone_dimension(BinaryClass::full(4), 3), std::length_error);
  EXPECT_EQ(littlestone_dimension(BinaryClass::full(4), 4), 4);
}

TEST(BinaryClassIo, LoadsCsvAndRejectsDuplicates) {
  std::istringstream in("x1,x2,x3\n0,0,1\n0,1,1\n1,1,1\n0,0,0\n");
  const auto c = BinaryClass::from_csv(in);
  EXPECT_EQ(c.domain_size, 3u);
  EXPECT_EQ(c.functions.size(), 4u);
  EXPECT_EQ(littlestone_dimension(c), 2);
  std::istringstream noheader("1,0\n0,1\n");
  EXPECT_EQ(BinaryClass::from_csv(noheader).functions.size(), 2u);
  std::istringstream dup("0,1\n0,1\n");
  EXPECT_THROW(BinaryClass::from_csv(dup), std::invalid_argument);
  std::istringstream bad("0,2\n");
  EXPECT_THROW(BinaryClass::from_csv(bad), SchemaError);
}

TEST(PatternGrowth, Values) {
  EXPECT_EQ(pattern_growth_bound(0, 5).binomial, 0.0);
  EXPECT_FALSE(pattern_growth_bound(0, 5).sauer_shelah.has_value());
  EXPECT_NEAR(pattern_growth_bound(2, 8).binomial, std::log(37.0), 1e-13);
  EXPECT_NEAR(pattern_growth_bound(2, 8).binomial, 3.610918, 5e-7);
  for (int n = 1; n <= 10; ++n) EXPECT_NEAR(pattern_growth_bound(n, n).binomial, n * std::numbers::ln2, 1e-12);
  EXPECT_NEAR(pattern_growth_bound(7, 3).binomial, 3 * std::numbers::ln2, 1e-12);
}

TEST(PatternGrowth, BinomialSumBelowSauerShelah) {
  for (int n = 1; n <= 40; ++n)
    for (int d = 1; d <= n; ++d) {
      double s = 0.0, c = 1.0;
      for (int i = 0; i <= d; ++i) {
        s += c;
        c = c * (n - i) / (i + 1);
      }
      const auto g = pattern_growth_bound(d, n);
      EXPECT_NEAR(g.binomial, std::log(s), 1e-10);
      ASSERT_TRUE(g.sauer_shelah.has_value());
      EXPECT_LE(g.binomial, *g.sauer_shelah + 1e-12);
    }
}

TEST(PatternScmi, ConstantLossClass) {
  const auto p = constant_loss_instance();
  const auto set = verify_pattern_scmi(p.world, p.learner, p.cls, p.n);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set[0].lhs, 0.0);
  EXPECT_EQ(set[0].rhs(), 0.0);
  EXPECT_EQ(set[0].verdict, BoundReport::Verdict::holds);
}

TEST(PatternScmi, ThresholdInstance) {
  const auto p = threshold_instance();
  const auto set = verify_pattern_scmi(p.world, p.learner, p.cls, p.n);
  const auto& r = find(set, "online.pattern_growth");
  EXPECT_EQ(r.verdict, BoundReport::Verdict::holds);
  const auto sj = enumerate_joint(p.world, p.learner, p.n);
  EXPECT_NEAR(r.lhs, oracle_scmi_sum(sj), 1e-12);
  EXPECT_GT(r.lhs, 0.0);
  EXPECT_NEAR(r.rhs(), std::log(7.0), 1e-12);  // d = 2, n = 3
  EXPECT_GE(r.margin, 0.0);
}

TEST(PatternScmi, FullClassAtMostNLog2) {
  const auto p = full_class_instance(3);
  const auto set = verify_pattern_scmi(p.world, p.learner, p.cls, p.n);
  const auto& r = find(set, "online.pattern_growth");
  EXPECT_EQ(r.verdict, BoundReport::Verdict::holds);
  EXPECT_NEAR(r.rhs(), 3.0 * std::numbers::ln2, 1e-12);
  const auto sj = enumerate_joint(p.world, p.learner, p.n);
  EXPECT_NEAR(r.lhs, oracle_scmi_sum(sj), 1e-12);
  EXPECT_LE(r.lhs, 3.0 * std::numbers::ln2);
}

TEST(PatternScmi, UncertifiedIsInconclusive) {
  const std::vector<double> uni{1.0 / 3, 1.0 / 3, 1.0 / 3};
  WorldSpec w{OutcomeSpace::numbered(3), RowKernel::iid(uni)};
  const auto set = verify_pattern_scmi(w, LearnerSpec::memorize_last(3), BinaryClass::full(3), 3);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set[0].verdict, BoundReport::Verdict::inconclusive);
  EXPECT_NE(set[0].note.find("not certified"), std::string::npos);
  const auto other = verify_pattern_scmi(w, LearnerSpec::memorize_last(3), BinaryClass::full(2), 3);
  EXPECT_EQ(other[0].verdict, BoundReport::Verdict::inconclusive);
}
