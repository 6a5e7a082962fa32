#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "sscmi/discrete_joint.hpp"
#include "sscmi/rng.hpp"
#include "sscmi/supersample.hpp"

namespace sscmi {

/// Knobs for the seeded world generator used by property sweeps.
struct RandomWorldOptions {
  bool exchangeable = true;
  int max_horizon = 4;
  int max_atoms = 3;
  int max_states = 4;
  std::size_t atom_budget = 20'000;
  bool allow_gibbs = true;
  bool allow_predictable_weights = true;
};

struct RandomWorld {
  std::uint64_t id = 0;
  WorldSpec world;
  LearnerSpec learner;
  int horizon = 1;
};

namespace detail {

inline int uniform_int(CounterRng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

/// Random probability vector; each entry is dropped to zero with probability `sparsity`.
inline std::vector<double> random_distribution(CounterRng& rng, std::size_t k, double sparsity) {
  std::vector<double> v(k);
  double s = 0.0;
  for (auto& x : v) s += (x = rng.bernoulli(sparsity) ? 0.0 : 0.05 + rng.uniform());
  if (s == 0.0) {
    v[static_cast<std::size_t>(rng() % k)] = 1.0;
    return v;
  }
  for (auto& x : v) x /= s;
  return v;
}

inline PairTable random_pair_table(CounterRng& rng, std::size_t m, bool exchangeable) {
  PairTable t(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) t[a * m + b] = rng.bernoulli(0.25) ? 0.0 : 0.05 + rng.uniform();
  if (exchangeable)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) t[a * m + b] = t[b * m + a] = 0.5 * (t[a * m + b] + t[b * m + a]);
  else
    t[1] += 0.5;  // make sure P(z0, z1) != P(z1, z0) somewhere
  double s = 0.0;
  for (double x : t) s += x;
  if (s == 0.0) {
    t[0] = 1.0;
    return t;
  }
  for (auto& x : t) x /= s;
  return t;
}

inline std::size_t support_size(std::span<const double> v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x > 0.0; }));
}

}  // namespace detail

/// Upper bound on the atom count of enumerate_joint for this world.
inline double atom_count_bound(const WorldSpec& world, const LearnerSpec& learner, int n) {
  std::size_t rows = 0;
  for (const auto& t : world.rows.tables) rows = std::max(rows, detail::support_size(t));
  std::size_t states = learner.num_states;
  if (const auto* mk = std::get_if<MarkovUpdate>(&learner.update)) {
    states = 0;
    for (const auto& block : mk->table)
      for (const auto& d : block) states = std::max(states, detail::support_size(d));
  } else {
    states = detail::support_size(std::get<GibbsUpdate>(learner.update).prior);
  }
  return std::pow(static_cast<double>(rows * 2 * states), n);
}

/// Reproducible random world: the same (seed, id, options) always give the same world.
inline RandomWorld random_world(std::uint64_t seed, std::uint64_t id, const RandomWorldOptions& opt = {}) {
  auto rng = CounterRng{seed}.split(static_cast<std::uint64_t>(Stream::world), id);
  RandomWorld rw;
  rw.id = id;
  const int m = detail::uniform_int(rng, 2, opt.max_atoms);
  const int S = detail::uniform_int(rng, 1, opt.max_states);
  int n = detail::uniform_int(rng, 1, opt.max_horizon);
  const auto mu = static_cast<std::size_t>(m), Su = static_cast<std::size_t>(S);

  auto& w = rw.world;
  w.space = OutcomeSpace::numbered(mu);
  w.space.loss_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  if (rng.bernoulli(0.25)) w.retained.push_back(Retained::U);

  const bool product = opt.exchangeable && rng.bernoulli(0.35);
  const int key = detail::uniform_int(rng, 0, 2);
  w.rows.key = static_cast<RowKernel::Key>(key);
  const std::size_t ntables = key == 0 ? 1 : key == 1 ? static_cast<std::size_t>(opt.max_horizon) : mu + 1;
  for (std::size_t k = 0; k < ntables; ++k) {
    if (product) {
      const auto marg = detail::random_distribution(rng, mu, 0.2);
      w.rows.tables.push_back(RowKernel::iid(marg).tables[0]);
    } else {
      w.rows.tables.push_back(detail::random_pair_table(rng, mu, opt.exchangeable));
    }
  }
  w.rows.exchangeable = opt.exchangeable;
  w.rows.conditional_product = product;

  auto& l = rw.learner;
  l.num_states = Su;
  l.loss.assign(Su, std::vector<double>(mu));
  for (auto& row : l.loss)
    for (auto& v : row) v = 0.25 * detail::uniform_int(rng, 0, 4);
  l.initial_state = detail::uniform_int(rng, 0, S - 1);

  if (opt.allow_gibbs && rng.bernoulli(0.2)) {
    l.update = GibbsUpdate{0.5 + 2.5 * rng.uniform(), detail::random_distribution(rng, Su, 0.0)};
  } else {
    MarkovUpdate up;
    const bool deterministic = rng.bernoulli(0.5);
    up.table.assign(Su, std::vector<std::vector<double>>(mu));
    for (auto& block : up.table)
      for (auto& d : block) {
        if (deterministic) {
          d.assign(Su, 0.0);
          d[static_cast<std::size_t>(detail::uniform_int(rng, 0, S - 1))] = 1.0;
        } else {
          d = detail::random_distribution(rng, Su, 0.4);
        }
      }
    l.update = std::move(up);
  }

  const int wk = opt.allow_predictable_weights ? detail::uniform_int(rng, 0, 3) : 0;
  if (wk == 0) l.weight = ConstantWeight{1.0};
  else if (wk == 1) l.weight = ConstantWeight{0.25 * detail::uniform_int(rng, 1, 4)};
  else if (wk == 2) {
    StateWeight sw;
    for (int s = 0; s < S; ++s) sw.q.push_back(0.25 * detail::uniform_int(rng, 0, 4));
    l.weight = sw;
  } else {
    l.weight = StopAfterLoss{};
  }

  while (n > 1 && atom_count_bound(w, l, n) > static_cast<double>(opt.atom_budget)) --n;
  rw.horizon = n;
  return rw;
}

/// Random joint over (X, U, G) with P(U = 1 | G) = 1/2 and |X| <= b; X takes
/// values on a small grid in [-b, b].
inline DiscreteJoint random_selector_joint(std::uint64_t seed, std::uint64_t id, double b, int max_contexts = 4) {
  auto rng = CounterRng{seed}.split(0x6734, id);
  const int ng = detail::uniform_int(rng, 1, max_contexts);
  const int nx = detail::uniform_int(rng, 2, 5);
  std::vector<double> xs;
  for (int i = 0; i < nx; ++i) xs.push_back(b * (2.0 * rng.uniform() - 1.0));
  if (rng.bernoulli(0.3)) xs[0] = b;
  DiscreteJoint j({"X", "U", "G"});
  const auto pg = detail::random_distribution(rng, static_cast<std::size_t>(ng), 0.0);
  for (int g = 0; g < ng; ++g)
    for (int u = 0; u < 2; ++u) {
      const auto px = detail::random_distribution(rng, static_cast<std::size_t>(nx), 0.3);
      for (int x = 0; x < nx; ++x) {
        const double p = pg[static_cast<std::size_t>(g)] * 0.5 * px[static_cast<std::size_t>(x)];
        if (p > 0.0) j.add_atom(std::vector<double>{xs[static_cast<std::size_t>(x)], double(u), double(g)}, p);
      }
    }
  return j;
}

/// Random table over three small categorical coordinates X, Y, G.
inline DiscreteJoint random_three_way(std::uint64_t seed, std::uint64_t id) {
  auto rng = CounterRng{seed}.split(0x3e3, id);
  const int nx = detail::uniform_int(rng, 2, 4), ny = detail::uniform_int(rng, 2, 4), ng = detail::uniform_int(rng, 1, 3);
  const auto p = detail::random_distribution(rng, static_cast<std::size_t>(nx * ny * ng), 0.3);
  DiscreteJoint j({"X", "Y", "G"});
  std::size_t k = 0;
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int g = 0; g < ng; ++g, ++k)
        if (p[k] > 0.0) j.add_atom(std::vector<double>{double(x), double(y), double(g)}, p[k]);
  return j;
}

}  // namespace sscmi
