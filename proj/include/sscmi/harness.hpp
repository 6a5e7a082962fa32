#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sscmi/active.hpp"
#include "sscmi/bandit.hpp"
#include "sscmi/batch.hpp"
#include "sscmi/bounds.hpp"
#include "sscmi/config.hpp"
#include "sscmi/online.hpp"
#include "sscmi/random_worlds.hpp"
#include "sscmi/supersample.hpp"

namespace sscmi {

enum ExitCode : int { exit_ok = 0, exit_violation = 1, exit_usage = 2, exit_inconclusive = 3 };

/// A check that did not apply to a world: NotApplicable, or a premise the world fails.
struct SkippedCheck {
  std::string group, check, reason;
};

struct SuiteResult {
  std::string suite;
  BoundSet reports;
  std::vector<std::string> groups;  // one per report
  std::vector<SkippedCheck> not_applicable;
  VerdictCounts counts;
  double wall_seconds = 0.0;
  std::string digest;
  std::vector<std::pair<std::string, std::string>> files;  // extra artifacts, relative path -> content
  std::vector<std::string> notes;                           // extra summary lines

  [[nodiscard]] int exit_code() const {
    if (counts.violated > 0) return exit_violation;
    if (counts.inconclusive > 0) return exit_inconclusive;
    return exit_ok;
  }
};

// ---------------------------------------------------------------------------
// Work items and the collector

struct ItemOutput {
  BoundSet reports;
  std::vector<std::pair<std::string, std::string>> skipped;  // (check, reason)

  /// Premise failures reported as inconclusive are recorded as not applicable.
  void add(BoundSet set) {
    for (auto& r : set) {
      const bool premise = r.verdict == BoundReport::Verdict::inconclusive &&
                           (r.note.starts_with("premise failed") || r.note.starts_with("realizability not certified"));
      if (premise) skipped.emplace_back(r.name, r.note);
      else reports.push_back(std::move(r));
    }
  }
  void add(BoundReport r) { add(BoundSet{std::move(r)}); }

  template <class F>
  void guard(const std::string& check, F&& f) {
    try {
      add(f());
    } catch (const NotApplicable& e) {
      skipped.emplace_back(check, e.what());
    }
  }
};

struct WorkItem {
  std::string group;
  std::function<void(ItemOutput&)> run;
};

/// Runs the items in parallel and appends their outputs in item order.
inline void run_items(SuiteResult& res, const std::vector<WorkItem>& items, unsigned parallel) {
  std::vector<ItemOutput> outs(items.size());
  parallel_for(items.size(), parallel, 1, [&](std::size_t i) { items[i].run(outs[i]); });
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (auto& r : outs[i].reports) {
      res.reports.push_back(std::move(r));
      res.groups.push_back(items[i].group);
    }
    for (auto& [check, reason] : outs[i].skipped) res.not_applicable.push_back({items[i].group, check, reason});
  }
}

inline std::string reports_csv(const SuiteResult& res) {
  std::ostringstream os;
  write_reports_csv(os, res.reports, "group", res.groups);
  return os.str();
}

inline std::string not_applicable_csv(const SuiteResult& res) {
  std::ostringstream os;
  os << "group,check,reason\n";
  for (const auto& s : res.not_applicable)
    os << s.group << ',' << s.check << ',' << detail::csv_safe(s.reason) << '\n';
  return os.str();
}

inline std::string summary_text(const SuiteResult& res) {
  std::ostringstream os;
  os << "suite: " << res.suite << "\nconfig digest: " << res.digest << '\n';
  write_summary(os, res.reports);
  os << "not applicable: " << res.not_applicable.size() << '\n';
  for (const auto& n : res.notes) os << n << '\n';
  os << "wall time: " << format_number(res.wall_seconds) << " s\n";
  os << "exit status: " << res.exit_code() << '\n';
  return os.str();
}

/// Single writer for every artifact of a run.
inline void write_outputs(const SuiteResult& res, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto put = [&](const fs::path& rel, const std::string& text) {
    const auto path = dir / rel;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
  };
  put("reports.csv", reports_csv(res));
  put("not_applicable.csv", not_applicable_csv(res));
  for (const auto& [rel, text] : res.files) put(rel, text);
  put("summary.txt", summary_text(res));
}

// ---------------------------------------------------------------------------
// Shared checks

/// Exact identities of one supersample joint: the row-swap form (exchangeable rows only),
/// the two-coordinate form, selector fairness and, for product rows, the holdout/population match.
inline void identity_checks(ItemOutput& out, const SupersampleJoint& sj, const Tolerances& tol) {
  const double gap = sequential_risks(sj).gap;
  out.guard("identity.row_swap", [&] { return BoundSet{identity_report("identity.row_swap", gap, row_swap_correlation(sj), tol)}; });
  out.add(identity_report("identity.two_coordinate", gap, two_coordinate_correlation(sj), tol));
  out.add(exact_report("identity.selector_fairness", selector_fairness_residual(sj), {}, tol, "max |P(U=1|G)-1/2|"));
  if (sj.conditional_product)
    out.add(exact_report("identity.holdout_population", conditional_product_holdout_residual(sj), {}, tol));
}

struct ShiftedParams {
  double C = 1.0, eta = 0.125;
};

inline ShiftedParams parse_shifted(const YAML::Node& n) {
  ShiftedParams p;
  if (!n) return p;
  yamlx::require_map(n, "shifted");
  yamlx::allow_keys(n, {"C", "eta"}, "shifted");
  p.C = yamlx::get<double>(n, "C", p.C);
  p.eta = yamlx::get<double>(n, "eta", p.eta);
  if (!shifted_rademacher_feasible(p.C, p.eta))
    throw ConfigError("(C, eta) violates e^{2 eta} + e^{-2 eta (C+1)} <= 2", yamlx::line_of(n));
  return p;
}

/// Every supersample bound that applies to the world; the rest are recorded as not applicable.
inline void supersample_bounds(ItemOutput& out, const SupersampleJoint& sj, const LearnerSpec& learner,
                               const ShiftedParams& sp, const Tolerances& tol) {
  out.guard("scmi_slow", [&] { return slow_rate_bound(sj, tol); });
  out.guard("two_coordinate", [&] { return two_coordinate_bound(sj, tol); });
  out.guard("bernstein", [&] { return bernstein_bound(sj, best_comparator(sj), BernsteinParams{}, tol); });
  out.guard("shifted_rademacher", [&] { return shifted_rademacher_bound(sj, sp.C, sp.eta, tol); });
  out.guard("stopping", [&] {
    return stopping_bound(sj, PredictableRule::stop_after_first_loss(learner.loss), sp.C, sp.eta, tol);
  });
}

inline void active_checks(ItemOutput& out, const ActiveJoint& aj, const ShiftedParams& sp, const Tolerances& tol) {
  out.add(population_identity_check(aj, 0, tol));
  out.add(active_slow_bound(aj, tol));
  out.add(active_fast_bound(aj, sp.C, sp.eta, tol));
  out.add(query_aware_report(aj, tol));
  out.add(exact_report("active.weighted_range", weighted_loss_range_violation(aj), {}, tol, "p_min L+ within [0,1]"));
}

// ---------------------------------------------------------------------------
// Generators not covered by random_worlds.hpp

struct RandomBatchCase {
  BatchWorld world;
  BatchLearner learner;
  int n = 1;
};

inline RandomBatchCase random_batch_case(std::uint64_t seed, std::uint64_t id) {
  auto rng = CounterRng{seed}.split(0xba7c4, id);
  RandomBatchCase c;
  c.world.num_x = rng.bernoulli(0.5) ? 2 : 3;
  c.world.num_y = 2;
  c.world.pxy = detail::random_distribution(rng, c.world.num_x * 2, 0.2);
  const std::size_t total = std::size_t{1} << c.world.num_x;
  for (std::size_t code = 0; code < total; ++code) {
    if (!rng.bernoulli(0.7)) continue;
    std::vector<int> h(c.world.num_x);
    for (std::size_t x = 0; x < c.world.num_x; ++x) h[x] = static_cast<int>(code >> x & 1u);
    c.world.hypotheses.push_back(std::move(h));
  }
  if (c.world.hypotheses.empty()) c.world.hypotheses.push_back(std::vector<int>(c.world.num_x, 0));
  switch (rng() % 3) {
    case 0: c.learner.kind = BatchLearner::Kind::erm; break;
    case 1: c.learner.kind = BatchLearner::Kind::gibbs; break;
    default: c.learner.kind = BatchLearner::Kind::constant;
  }
  c.learner.eta = 0.5 + 3.0 * rng.uniform();
  c.learner.constant_index = static_cast<std::size_t>(rng() % c.world.hypotheses.size());
  c.n = 1 + static_cast<int>(rng() % (c.world.num_x == 2 ? 3 : 2));
  return c;
}

/// Random nonempty binary class on 3..5 points.
inline BinaryClass random_binary_class(std::uint64_t seed, std::uint64_t id) {
  auto rng = CounterRng{seed}.split(0xc1a55, id);
  const auto m = static_cast<std::size_t>(3 + rng() % 3);
  auto full = BinaryClass::full(m);
  BinaryClass c{m, {}};
  const double keep = 0.1 + 0.6 * rng.uniform();
  for (auto& f : full.functions)
    if (rng.bernoulli(keep)) c.functions.push_back(f);
  if (c.functions.empty()) c.functions.push_back(full.functions[static_cast<std::size_t>(rng() % full.functions.size())]);
  return c;
}

inline std::string class_description(const BinaryClass& c) {
  std::string s;
  for (const auto& f : c.functions) {
    if (!s.empty()) s += ' ';
    for (int v : f) s += static_cast<char>('0' + v);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Stock configs (mirrored in examples_cfg/)

inline std::string stock_config(const std::string& kind) {
  if (kind == "identities")
    return R"(experiment: identities
seed: 1
out: out/identities
# Random worlds per family; --seeds overrides both counts.
random_worlds: {exchangeable: 200, non_exchangeable: 200, max_horizon: 4}
active_worlds: 3
bandit_exact: {arms: [0.9, 0.5], horizon: 2}
# Negative control: any bias other than 0.5 breaks the fair selector.
# debug: {selector_bias: 0.7}
worlds:
  - name: coin_memorizer
    atoms: 2
    rows: {iid: [0.5, 0.5]}
    learner: {kind: memorize_last}
    horizon: 3
  - name: skewed_rows
    atoms: 3
    rows:
      key: by_round
      tables:
        - [0.10, 0.05, 0.15, 0.20, 0.05, 0.05, 0.10, 0.20, 0.10]
        - [0.30, 0.00, 0.10, 0.05, 0.20, 0.05, 0.00, 0.10, 0.20]
    learner: {kind: memorize_last}
    horizon: 2
  - name: gibbs_three
    atoms: 3
    rows: {iid: [0.5, 0.3, 0.2]}
    learner:
      kind: gibbs
      eta: 1.5
      prior: [0.5, 0.5]
      loss: [[0, 1, 1], [1, 0, 0.5]]
    horizon: 3
  - name: stop_after_loss
    atoms: 2
    rows: {iid: [0.7, 0.3]}
    learner: {kind: memorize_last, weight: stop_after_loss}
    horizon: 3
)";
  if (kind == "sweep")
    return R"(experiment: sweep
seed: 2024
out: out/sweep
# Worlds per supersample family (exchangeable and non-exchangeable).
seeds: 200
max_horizon: 4
active_worlds: 50
batch_worlds: 20
selector_joints: 10000
shifted: {C: 1, eta: 0.125}
# replay: [x0017, a0003]
)";
  if (kind == "online")
    return R"(experiment: online
seed: 3
out: out/online
horizon: 3
instances: [constant_loss, thresholds, full_class]
worlds:
  - name: gibbs_three
    atoms: 3
    rows: {iid: [0.5, 0.3, 0.2]}
    learner:
      kind: gibbs
      eta: 1.5
      prior: [0.5, 0.5]
      loss: [[0, 1, 1], [1, 0, 0.5]]
classes:
  - {name: singleton, domain: 3, functions: [[0, 1, 1]], expect: 0}
  - {name: full_4, full: 4, expect: 4}
  - {name: thresholds_3, thresholds: 3, expect: 2}
random_classes: 50
)";
  if (kind == "active")
    return R"(experiment: active
seed: 4
out: out/active
shifted: {C: 1, eta: 0.125}
random_worlds: 0
worlds:
  - name: erm_constant
    pxy: [0.35, 0.15, 0.10, 0.40]
    learner: {kind: erm, class: full}
    rule: {kind: constant, p: 0.5}
    horizon: 2
  - name: gibbs_uncertainty
    pxy: [0.25, 0.25, 0.05, 0.45]
    learner: {kind: gibbs, class: full, eta: 2}
    rule: {kind: uncertainty, p_min: 0.25}
    horizon: 2
  - name: memorize_constant
    pxy: [0.40, 0.10, 0.20, 0.30]
    learner: {kind: memorize, class: full, initial_state: 1}
    rule: {kind: constant, p: 0.75}
    horizon: 2
)";
  if (kind == "bandit")
    return R"(experiment: bandit
seed: 7
out: out/bandit
arms: [0.9, 0.5]
horizon: 10000
seeds: 1000
schedule: default
ablation: uniform
exact: {horizon: 3}
slope_window: [0.35, 0.65]
ablation_min_slope: 0.85
)";
  throw UsageError("no stock config for '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Suites

namespace detail {

inline std::vector<NamedWorld> parse_worlds(const YAML::Node& n) {
  std::vector<NamedWorld> out;
  if (!n) return out;
  if (!n.IsSequence()) throw ConfigError("worlds must be a list", yamlx::line_of(n));
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(parse_world(n[i], "world" + std::to_string(i)));
  return out;
}

inline std::string padded(std::uint64_t i) {
  auto s = std::to_string(i);
  return std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

}  // namespace detail

inline SuiteResult cmd_verify_identities(const ExperimentConfig& cfg) {
  const auto& root = cfg.root;
  const auto& st = cfg.settings;
  const auto tol = st.tol;
  EnumerationOptions eo;
  if (const auto dbg = root["debug"]) {
    yamlx::require_map(dbg, "debug");
    yamlx::allow_keys(dbg, {"selector_bias"}, "debug");
    eo.selector_bias = yamlx::get<double>(dbg, "selector_bias", 0.5);
    if (!(eo.selector_bias >= 0.0 && eo.selector_bias <= 1.0))
      throw ConfigError("selector_bias must lie in [0, 1]", yamlx::line_of(dbg));
  }
  std::size_t n_ex = 200, n_nonex = 200;
  RandomWorldOptions rwo;
  if (const auto rw = root["random_worlds"]) {
    yamlx::require_map(rw, "random_worlds");
    yamlx::allow_keys(rw, {"exchangeable", "non_exchangeable", "max_horizon"}, "random_worlds");
    n_ex = yamlx::get<std::size_t>(rw, "exchangeable", n_ex);
    n_nonex = yamlx::get<std::size_t>(rw, "non_exchangeable", n_nonex);
    rwo.max_horizon = yamlx::get<int>(rw, "max_horizon", rwo.max_horizon);
  }
  if (st.seeds > 0) n_ex = n_nonex = st.seeds;
  if (st.horizon > 0) rwo.max_horizon = st.horizon;
  if (rwo.max_horizon < 1 || rwo.max_horizon > 4)
    throw ConfigError("random world horizon must lie in [1, 4]", yamlx::line_of(root["random_worlds"]));
  const auto worlds = detail::parse_worlds(root["worlds"]);
  const auto n_active = yamlx::get<std::size_t>(root, "active_worlds", 3);

  std::vector<WorkItem> items;
  for (const auto& w : worlds)
    items.push_back({"world:" + w.name, [w, eo, tol](ItemOutput& out) {
                       identity_checks(out, enumerate_joint(w.world, w.learner, w.horizon, eo), tol);
                     }});
  for (int fam = 0; fam < 2; ++fam) {
    const auto count = fam == 0 ? n_ex : n_nonex;
    auto opt = rwo;
    opt.exchangeable = fam == 0;
    for (std::uint64_t id = 0; id < count; ++id)
      items.push_back({(fam == 0 ? "x" : "n") + detail::padded(id), [=, seed = st.seed](ItemOutput& out) {
                         const auto rw = random_world(seed, id, opt);
                         identity_checks(out, enumerate_joint(rw.world, rw.learner, rw.horizon, eo), tol);
                       }});
  }
  for (std::uint64_t id = 0; id < n_active; ++id)
    items.push_back({"a" + detail::padded(id), [=, seed = st.seed](ItemOutput& out) {
                       const auto a = random_active_world(seed, id);
                       out.add(population_identity_check(run_iwal_exact(a.world, a.rule, a.learner, a.n), 0, tol));
                     }});
  if (const auto bx = root["bandit_exact"]; bx && !(bx.IsScalar() && !bx.as<bool>())) {
    yamlx::require_map(bx, "bandit_exact");
    yamlx::allow_keys(bx, {"arms", "horizon", "schedule"}, "bandit_exact");
    const auto env = bx["arms"] ? parse_arms(bx["arms"]) : BanditEnv::bernoulli({0.9, 0.5});
    const auto sched = parse_schedule(bx["schedule"], env);
    const int T = yamlx::get<int>(bx, "horizon", 2);
    items.push_back({"bandit_exact", [=](ItemOutput& out) {
                       const auto eb = enumerate_bandit(env, sched, T);
                       for (int t = 1; t <= T; ++t)
                         for (auto& r : exact_bandit_checks(eb, t, tol)) {
                           const auto& nm = r.name;
                           if (nm == "bandit.decomposition" || nm == "bandit.virtual_selected" ||
                               nm == "bandit.virtual_ghost" || nm == "bandit.row_swap" ||
                               nm.starts_with("bandit.row_swap_local"))
                             out.add(std::move(r));
                         }
                     }});
  }
  SuiteResult res;
  res.suite = "identities";
  run_items(res, items, st.parallel);
  return res;
}

inline SuiteResult cmd_sweep(const ExperimentConfig& cfg) {
  const auto& root = cfg.root;
  const auto& st = cfg.settings;
  const auto tol = st.tol;
  const std::uint64_t seed = st.seed;
  const std::size_t n_worlds = st.seeds > 0 ? st.seeds : 200;
  RandomWorldOptions rwo;
  rwo.max_horizon = st.horizon > 0 ? st.horizon : yamlx::get<int>(root, "max_horizon", 4);
  if (rwo.max_horizon < 1 || rwo.max_horizon > 4) throw ConfigError("max_horizon must lie in [1, 4]", yamlx::line_of(root["max_horizon"]));
  const auto n_active = yamlx::get<std::size_t>(root, "active_worlds", 50);
  const auto n_batch = yamlx::get<std::size_t>(root, "batch_worlds", 20);
  const auto n_joints = yamlx::get<std::size_t>(root, "selector_joints", 10000);
  const auto sp = parse_shifted(root["shifted"]);

  struct Entry {
    std::string id;
    char family;
    std::uint64_t index;
  };
  std::vector<Entry> entries;
  auto add_family = [&](char fam, std::size_t count) {
    for (std::uint64_t i = 0; i < count; ++i) entries.push_back({std::string(1, fam) + detail::padded(i), fam, i});
  };
  add_family('x', n_worlds);
  add_family('n', n_worlds);
  add_family('b', n_batch);
  add_family('a', n_active);
  add_family('j', n_joints);
  if (const auto rp = root["replay"]) {
    const auto ids = yamlx::as<std::vector<std::string>>(rp, "replay");
    std::set<std::string> want(ids.begin(), ids.end());
    std::vector<Entry> kept;
    for (const auto& e : entries)
      if (want.erase(e.id)) kept.push_back(e);
    if (!want.empty()) throw ConfigError("replay id not in this sweep: " + *want.begin(), yamlx::line_of(rp));
    entries = std::move(kept);
  }

  // Worlds are generated up front so they can be persisted; checks then run in parallel.
  std::ostringstream index;
  index << "id,family,seed,index,horizon,atoms,states,exchangeable,file\n";
  SuiteResult res;
  res.suite = "sweep";
  std::vector<WorkItem> items;
  for (const auto& e : entries) {
    switch (e.family) {
      case 'x':
      case 'n': {
        auto opt = rwo;
        opt.exchangeable = e.family == 'x';
        const auto rw = random_world(seed, e.index, opt);
        const NamedWorld nw{e.id, rw.world, rw.learner, rw.horizon};
        const auto file = "worlds/" + e.id + ".yaml";
        res.files.emplace_back(file, world_yaml(nw));
        index << e.id << ',' << (opt.exchangeable ? "exchangeable" : "non_exchangeable") << ',' << seed << ',' << e.index
              << ',' << rw.horizon << ',' << rw.world.space.size() << ',' << rw.learner.num_states << ','
              << (opt.exchangeable ? 1 : 0) << ',' << file << '\n';
        items.push_back({e.id, [nw, sp, tol](ItemOutput& out) {
                           const auto sj = enumerate_joint(nw.world, nw.learner, nw.horizon);
                           identity_checks(out, sj, tol);
                           supersample_bounds(out, sj, nw.learner, sp, tol);
                         }});
        break;
      }
      case 'b': {
        const auto bc = random_batch_case(seed, e.index);
        index << e.id << ",batch," << seed << ',' << e.index << ',' << bc.n << ',' << bc.world.num_atoms() << ','
              << bc.world.hypotheses.size() << ",1,\n";
        items.push_back({e.id, [bc, tol](ItemOutput& out) {
                           out.guard("batch", [&] { return batch_ecmi_bound(enumerate_batch(bc.world, bc.learner, bc.n), tol); });
                         }});
        break;
      }
      case 'a': {
        const auto ra = random_active_world(seed, e.index);
        const NamedActiveWorld aw{e.id, ra.world, ra.rule, ra.learner, ra.n};
        const auto file = "worlds/" + e.id + ".yaml";
        res.files.emplace_back(file, active_world_yaml(aw));
        index << e.id << ",active," << seed << ',' << e.index << ',' << ra.n << ',' << ra.world.num_atoms() << ','
              << ra.learner.num_states() << ",1," << file << '\n';
        items.push_back({e.id, [aw, sp, tol](ItemOutput& out) {
                           active_checks(out, run_iwal_exact(aw.world, aw.rule, aw.learner, aw.horizon), sp, tol);
                         }});
        break;
      }
      default: {
        const double b = 0.5 * double(1 + e.index % 4);
        index << e.id << ",selector_joint," << seed << ',' << e.index << ",1,,,,\n";
        items.push_back({e.id, [seed, idx = e.index, b, tol](ItemOutput& out) {
                           out.add(selector_square_check(random_selector_joint(seed, idx, b), "X", "U", Names{"G"}, b, tol,
                                                         "selector_square"));
                         }});
      }
    }
  }
  res.files.insert(res.files.begin(), {"worlds.csv", index.str()});
  run_items(res, items, st.parallel);
  return res;
}

inline SuiteResult cmd_online(const ExperimentConfig& cfg) {
  const auto& root = cfg.root;
  const auto& st = cfg.settings;
  const auto tol = st.tol;
  const int n = st.horizon > 0 ? st.horizon : 3;
  const int max_depth = yamlx::get<int>(root, "max_depth", 12);
  std::vector<std::string> names{"constant_loss", "thresholds", "full_class"};
  if (root["instances"]) names = yamlx::as<std::vector<std::string>>(root["instances"], "instances");
  std::vector<WorkItem> items;
  for (const auto& nm : names) {
    PatternInstance inst;
    if (nm == "constant_loss") inst = constant_loss_instance(3, n);
    else if (nm == "thresholds") inst = threshold_instance(3, n);
    else if (nm == "full_class") inst = full_class_instance(n);
    else throw ConfigError("unknown instance '" + nm + "'", yamlx::line_of(root["instances"]));
    items.push_back({"instance:" + nm, [inst, tol, max_depth](ItemOutput& out) {
                       out.add(run_online(inst.world, inst.learner, inst.n, tol));
                       out.add(verify_pattern_scmi(inst.world, inst.learner, inst.cls, inst.n, tol, max_depth));
                     }});
  }
  for (auto w : detail::parse_worlds(root["worlds"])) {
    if (st.horizon > 0) w.horizon = st.horizon;
    items.push_back({"world:" + w.name, [w, tol](ItemOutput& out) {
                       out.guard("online", [&] { return run_online(w.world, w.learner, w.horizon, tol); });
                     }});
  }

  auto class_checks = [max_depth, tol](ItemOutput& out, const BinaryClass& c, std::optional<int> expect) {
    const int ld = littlestone_dimension(c, max_depth);
    const int vc = vc_dimension(c);
    const std::string note = "class=" + class_description(c);
    if (expect) out.add(identity_report("littlestone.expected", ld, *expect, tol, note));
    out.add(exact_report("littlestone.vc_le_ldim", vc, {{"ldim", double(ld)}}, tol, note));
    out.add(exact_report("littlestone.ldim_le_log_size", ld, {{"floor_log2_size", std::floor(std::log2(double(c.functions.size())))}},
                         tol, note));
  };
  if (const auto cls = root["classes"]) {
    if (!cls.IsSequence()) throw ConfigError("classes must be a list", yamlx::line_of(cls));
    for (const auto& cn : cls) {
      yamlx::require_map(cn, "class");
      yamlx::allow_keys(cn, {"name", "domain", "functions", "full", "thresholds", "csv", "expect"}, "class");
      const auto name = yamlx::require<std::string>(cn, "name");
      BinaryClass c;
      if (cn["full"]) c = BinaryClass::full(yamlx::as<std::size_t>(cn["full"], "full"));
      else if (cn["thresholds"]) c = BinaryClass::thresholds(yamlx::as<std::size_t>(cn["thresholds"], "thresholds"));
      else if (cn["csv"]) {
        const auto path = yamlx::as<std::string>(cn["csv"], "csv");
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read class file " + path, yamlx::line_of(cn["csv"]));
        c = yamlx::at(cn, [&] { return BinaryClass::from_csv(in); });
      } else {
        c.domain_size = yamlx::require<std::size_t>(cn, "domain");
        c.functions = yamlx::require<FunctionTable>(cn, "functions");
      }
      yamlx::at(cn, [&] {
        c.validate();
        if (c.functions.empty()) throw std::invalid_argument("binary class is empty");
        return 0;
      });
      std::optional<int> expect;
      if (cn["expect"]) expect = yamlx::as<int>(cn["expect"], "expect");
      items.push_back({"class:" + name, [c, expect, class_checks](ItemOutput& out) { class_checks(out, c, expect); }});
    }
  }
  const std::size_t n_random = st.seeds > 0 ? st.seeds : yamlx::get<std::size_t>(root, "random_classes", 50);
  for (std::uint64_t id = 0; id < n_random; ++id)
    items.push_back({"c" + detail::padded(id), [=, seed = st.seed](ItemOutput& out) {
                       class_checks(out, random_binary_class(seed, id), std::nullopt);
                     }});
  SuiteResult res;
  res.suite = "online";
  run_items(res, items, st.parallel);
  return res;
}

inline SuiteResult cmd_active(const ExperimentConfig& cfg) {
  const auto& root = cfg.root;
  const auto& st = cfg.settings;
  const auto tol = st.tol;
  const auto sp = parse_shifted(root["shifted"]);
  std::vector<NamedActiveWorld> worlds;
  if (const auto wn = root["worlds"]) {
    if (!wn.IsSequence()) throw ConfigError("worlds must be a list", yamlx::line_of(wn));
    for (std::size_t i = 0; i < wn.size(); ++i) worlds.push_back(parse_active_world(wn[i], "active" + std::to_string(i)));
  }
  const std::size_t n_random = st.seeds > 0 ? st.seeds : yamlx::get<std::size_t>(root, "random_worlds", 0);
  for (std::uint64_t id = 0; id < n_random; ++id) {
    const auto ra = random_active_world(st.seed, id);
    worlds.push_back({"a" + detail::padded(id), ra.world, ra.rule, ra.learner, ra.n});
  }
  SuiteResult res;
  res.suite = "active";
  std::vector<WorkItem> items;
  for (auto w : worlds) {
    if (st.horizon > 0) w.horizon = st.horizon;
    res.files.emplace_back("worlds/" + w.name + ".yaml", active_world_yaml(w));
    items.push_back({"world:" + w.name, [w, sp, tol](ItemOutput& out) {
                       active_checks(out, run_iwal_exact(w.world, w.rule, w.learner, w.horizon), sp, tol);
                     }});
  }
  run_items(res, items, st.parallel);
  return res;
}

inline std::string regret_csv(const std::vector<RegretCurve>& curves) {
  std::ostringstream os;
  os << "schedule,t,cumulative_regret,std_error\n";
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.t.size(); ++i)
      os << c.schedule << ',' << c.t[i] << ',' << format_number(c.mean[i]) << ',' << format_number(c.se[i]) << '\n';
  return os.str();
}

inline SuiteResult cmd_bandit(const ExperimentConfig& cfg) {
  const auto& root = cfg.root;
  const auto& st = cfg.settings;
  const auto tol = st.tol;
  const auto env = root["arms"] ? parse_arms(root["arms"]) : BanditEnv::bernoulli({0.9, 0.5});
  const auto sched = parse_schedule(root["schedule"], env);
  const int T = st.horizon > 0 ? st.horizon : 10000;
  const std::size_t seeds = st.seeds > 0 ? st.seeds : 1000;
  const int grid = yamlx::get<int>(root, "grid_points", 60);
  if (grid < 2) throw ConfigError("grid_points must be at least 2", yamlx::line_of(root["grid_points"]));
  yamlx::at(root, [&] {
    sched.validate(env.arms(), T);
    return 0;
  });
  std::optional<Schedule> ablation;
  if (const auto ab = root["ablation"]; ab && !(ab.IsScalar() && ab.as<std::string>() == "none")) {
    ablation = parse_schedule(ab, env);
    if (ablation->name == sched.name) ablation->name += "_ablation";
    yamlx::at(ab, [&] {
      ablation->validate(env.arms(), T);
      return 0;
    });
  }
  std::optional<std::pair<double, double>> window;
  if (const auto sw = root["slope_window"]) {
    const auto v = yamlx::as<std::vector<double>>(sw, "slope_window");
    if (v.size() != 2 || !(v[0] <= v[1])) throw ConfigError("slope_window must be [lo, hi]", yamlx::line_of(sw));
    window = std::pair{v[0], v[1]};
  }
  std::optional<double> ablation_min;
  if (root["ablation_min_slope"]) ablation_min = yamlx::as<double>(root["ablation_min_slope"], "ablation_min_slope");

  SuiteResult res;
  res.suite = "bandit";
  if (const auto ex = root["exact"]; ex && !(ex.IsScalar() && !ex.as<bool>())) {
    yamlx::require_map(ex, "exact");
    yamlx::allow_keys(ex, {"horizon"}, "exact");
    const int Te = yamlx::get<int>(ex, "horizon", 3);
    const auto eb = yamlx::at(ex, [&] { return enumerate_bandit(env, sched, Te); });
    std::vector<WorkItem> items;
    for (int t = 1; t <= Te; ++t)
      items.push_back({"exact", [&eb, t, tol](ItemOutput& out) { out.add(exact_bandit_checks(eb, t, tol)); }});
    run_items(res, items, st.parallel);
  }

  const int lo = std::max(1, T / 10);
  EnsembleOptions eo;
  eo.checkpoints = regret_checkpoints(T, grid);
  eo.parallel = st.parallel;
  const auto ens = run_ensemble(env, sched, T, seeds, st.seed, eo);
  const auto logged = log_grid(T, grid);
  for (int t : logged)
    for (auto& r : one_step_bound_check(ens, t, ScmiMode::logk_cap, tol)) {
      res.reports.push_back(std::move(r));
      res.groups.push_back("monte_carlo");
    }
  auto push = [&](BoundSet set, const std::string& group) {
    for (auto& r : set) {
      res.reports.push_back(std::move(r));
      res.groups.push_back(group);
    }
  };
  push(ordinary_mi_bound_check(ens, T, tol), "monte_carlo");
  push(pathwise_checks(ens, tol), "monte_carlo");

  std::vector<RegretCurve> curves{regret_curve(ens, lo)};
  if (ablation) {
    EnsembleOptions ao = eo;
    ao.martingale = false;
    curves.push_back(regret_curve(run_ensemble(env, *ablation, T, seeds, st.seed, ao), lo));
  }
  for (const auto& c : curves) {
    double drop = 0.0;
    for (std::size_t i = 1; i < c.mean.size(); ++i) drop = std::max(drop, c.mean[i - 1] - c.mean[i]);
    const std::string note = "schedule=" + c.schedule;
    BoundSet set{exact_report("bandit.regret_monotone", drop, {}, tol, note)};
    res.notes.push_back("regret slope (" + c.schedule + ", t in [" + std::to_string(c.fit_from) + ", " +
                        std::to_string(c.fit_to) + "]): " + format_number(c.slope));
    push(std::move(set), "regret");
  }
  if (window) {
    const auto& c = curves.front();
    const std::string note = "log-log fit on [" + std::to_string(c.fit_from) + ", " + std::to_string(c.fit_to) + "]";
    push({exact_report("bandit.regret_slope.lower", window->first, {{"slope", c.slope}}, Tolerances{0.0, tol.sigmas}, note),
          exact_report("bandit.regret_slope.upper", c.slope, {{"hi", window->second}}, Tolerances{0.0, tol.sigmas}, note)},
         "regret");
  }
  if (ablation && ablation_min) {
    const auto& c = curves.back();
    push({exact_report("bandit.ablation_slope", *ablation_min, {{"slope", c.slope}}, Tolerances{0.0, tol.sigmas},
                       "schedule=" + c.schedule)},
         "regret");
  }
  res.files.emplace_back("regret.csv", regret_csv(curves));
  return res;
}

/// Dispatches on the config kind and fills in timing, counts and the digest.
inline SuiteResult run_suite(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult res;
  if (cfg.kind == "identities") res = cmd_verify_identities(cfg);
  else if (cfg.kind == "sweep") res = cmd_sweep(cfg);
  else if (cfg.kind == "online") res = cmd_online(cfg);
  else if (cfg.kind == "active") res = cmd_active(cfg);
  else if (cfg.kind == "bandit") res = cmd_bandit(cfg);
  else throw UsageError("unknown experiment kind '" + cfg.kind + "'");
  res.counts = count_verdicts(res.reports);
  res.digest = config_digest(cfg);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace sscmi
