#pragma once

// Reference computations used only by tests. They share nothing with the
// library code paths they check beyond the DiscreteJoint container.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sscmi/discrete_joint.hpp"

namespace oracle {

inline double entropy(const sscmi::DiscreteJoint& j, const std::vector<std::size_t>& cols) {
  std::map<std::vector<double>, double> m;
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::vector<double> k;
    for (auto c : cols) k.push_back(j.at(i, c));
    m[k] += j.prob(i);
  }
  double h = 0.0;
  for (const auto& [k, p] : m)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

/// I(X;Y|G) = H(X,G) + H(Y,G) - H(X,Y,G) - H(G).
inline double cmi(const sscmi::DiscreteJoint& j, std::vector<std::size_t> x, std::vector<std::size_t> y,
                  std::vector<std::size_t> g) {
  auto cat = [](std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  return entropy(j, cat(x, g)) + entropy(j, cat(y, g)) - entropy(j, cat(cat(x, y), g)) - entropy(j, g);
}

inline double cmi(const sscmi::DiscreteJoint& j, const std::vector<std::string>& x, const std::vector<std::string>& y,
                  const std::vector<std::string>& g) {
  return cmi(j, j.columns(x), j.columns(y), j.columns(g));
}

}  // namespace oracle
