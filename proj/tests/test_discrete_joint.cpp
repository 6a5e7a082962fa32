#include <sstream>

#include <gtest/gtest.h>

#include "sscmi/discrete_joint.hpp"

using sscmi::DiscreteJoint;

namespace {

DiscreteJoint two_bits() {
  DiscreteJoint j({"X", "Y"});
  j.add_atom(std::vector<double>{0, 0}, 0.375);
  j.add_atom(std::vector<double>{0, 1}, 0.125);
  j.add_atom(std::vector<double>{1, 0}, 0.125);
  j.add_atom(std::vector<double>{1, 1}, 0.375);
  return j;
}

}  // namespace

TEST(DiscreteJoint, RejectsDuplicateAndEmptyNames) {
  EXPECT_THROW(DiscreteJoint({"A", "A"}), sscmi::SchemaError);
  EXPECT_THROW(DiscreteJoint({""}), sscmi::SchemaError);
}

TEST(DiscreteJoint, UnknownColumnIsSchemaError) {
  auto j = two_bits();
  EXPECT_THROW((void)j.column("Z"), sscmi::SchemaError);
  EXPECT_THROW((void)j.expect("Z"), sscmi::SchemaError);
}

TEST(DiscreteJoint, ClosureAndExpectation) {
  auto j = two_bits();
  EXPECT_NO_THROW(j.check_closure());
  EXPECT_DOUBLE_EQ(j.expect("X"), 0.5);
  EXPECT_DOUBLE_EQ(j.expect([](auto r) { return r[0] * r[1]; }), 0.375);
  DiscreteJoint bad({"X"});
  bad.add_atom(std::vector<double>{0}, 0.5);
  EXPECT_THROW(bad.check_closure(), std::domain_error);
}

TEST(DiscreteJoint, MarginalMergesAtoms) {
  auto m = two_bits().marginal({"Y"});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m.prob(0), 0.5);
  EXPECT_DOUBLE_EQ(m.prob(1), 0.5);
}

TEST(DiscreteJoint, FilterKeepsSubMeasure) {
  auto f = two_bits().filter([](auto r) { return r[0] == 1.0; });
  EXPECT_EQ(f.size(), 2u);
  EXPECT_DOUBLE_EQ(f.total_mass(), 0.5);
}

TEST(DiscreteJoint, CsvRoundTrip) {
  auto j = two_bits().with_column("S", [](auto r) { return r[0] + r[1] / 3.0; });
  std::ostringstream os;
  sscmi::write_csv(os, j);
  std::istringstream is(os.str());
  auto back = sscmi::read_csv(is);
  ASSERT_EQ(back.schema(), j.schema());
  ASSERT_EQ(back.size(), j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    EXPECT_EQ(back.prob(i), j.prob(i));
    for (std::size_t c = 0; c < j.width(); ++c) EXPECT_EQ(back.at(i, c), j.at(i, c));
  }
  std::ostringstream again;
  sscmi::write_csv(again, back);
  EXPECT_EQ(again.str(), os.str());
}

TEST(DiscreteJoint, CsvRejectsMalformed) {
  std::istringstream no_prob("X,Y\n0,1\n");
  EXPECT_THROW(sscmi::read_csv(no_prob), sscmi::SchemaError);
  std::istringstream short_row("X,probability\n0,0.5,1\n");
  EXPECT_THROW(sscmi::read_csv(short_row), sscmi::SchemaError);
}
