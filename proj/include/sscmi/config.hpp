#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "sscmi/active.hpp"
#include "sscmi/bandit.hpp"
#include "sscmi/bounds.hpp"
#include "sscmi/online.hpp"
#include "sscmi/supersample.hpp"
#include "sscmi/util.hpp"

namespace sscmi {

/// Malformed or inconsistent experiment config; `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Command-line misuse, including an empty config.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace yamlx {

inline int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

template <class T>
T as(const YAML::Node& n, const std::string& what) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(what + ": unexpected value", line_of(n));
  }
}

template <class T>
T get(const YAML::Node& map, const std::string& key, T fallback) {
  const auto n = map[key];
  return n ? as<T>(n, key) : fallback;
}

template <class T>
T require(const YAML::Node& map, const std::string& key) {
  const auto n = map[key];
  if (!n) throw ConfigError("missing key '" + key + "'", line_of(map));
  return as<T>(n, key);
}

inline void require_map(const YAML::Node& n, const std::string& what) {
  if (!n.IsMap()) throw ConfigError(what + " must be a mapping", line_of(n));
}

inline void allow_keys(const YAML::Node& map, const std::vector<std::string>& keys, const std::string& where) {
  for (const auto& kv : map) {
    const auto k = kv.first.as<std::string>();
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ConfigError("unknown key '" + k + "' in " + where, line_of(kv.first));
  }
}

/// Runs `f`, re-raising library validation errors against the node's line.
template <class F>
auto at(const YAML::Node& n, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), line_of(n));
  }
}

}  // namespace yamlx

// ---------------------------------------------------------------------------
// Experiment config

struct Settings {
  std::uint64_t seed = 0;
  std::size_t seeds = 0;  // 0: suite default
  int horizon = 0;        // 0: suite default
  std::string out = "out";
  Tolerances tol;
  unsigned parallel = 0;  // 0: hardware concurrency
};

/// Values taken from the command line; each one beats the config and the environment.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;
  std::optional<int> horizon;
  std::optional<std::string> out;
  std::optional<double> tolerance;
  std::optional<unsigned> parallel;
};

struct ExperimentConfig {
  std::string kind;  // identities | sweep | online | active | bandit
  Settings settings;
  YAML::Node root;
  std::string source;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"identities", "sweep", "online", "active", "bandit"};
  return k;
}

inline std::string kind_of_verb(const std::string& verb) { return verb == "verify-identities" ? "identities" : verb; }

inline const std::vector<std::string>& common_keys() {
  static const std::vector<std::string> k{"experiment", "seed", "seeds", "horizon", "out", "tolerance", "sigmas", "parallel"};
  return k;
}

inline std::vector<std::string> suite_keys(const std::string& kind) {
  std::vector<std::string> k = common_keys();
  std::vector<std::string> extra;
  if (kind == "identities") extra = {"worlds", "random_worlds", "active_worlds", "bandit_exact", "debug"};
  else if (kind == "sweep") extra = {"max_horizon", "active_worlds", "batch_worlds", "selector_joints", "shifted", "replay"};
  else if (kind == "online") extra = {"instances", "worlds", "classes", "random_classes", "max_depth"};
  else if (kind == "active") extra = {"worlds", "random_worlds", "shifted"};
  else if (kind == "bandit") extra = {"arms", "schedule", "ablation", "exact", "slope_window", "ablation_min_slope", "grid_points"};
  k.insert(k.end(), extra.begin(), extra.end());
  return k;
}

inline ExperimentConfig load_config_text(const std::string& text, const std::string& source = "<config>") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.msg, e.mark.is_null() ? 0 : e.mark.line + 1);
  }
  if (!root || root.IsNull()) throw UsageError("empty config: " + source);
  yamlx::require_map(root, "config");
  ExperimentConfig cfg;
  cfg.root = root;
  cfg.source = source;
  cfg.kind = yamlx::require<std::string>(root, "experiment");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), cfg.kind) == kinds.end())
    throw ConfigError("unknown experiment kind '" + cfg.kind + "'", yamlx::line_of(root["experiment"]));
  yamlx::allow_keys(root, suite_keys(cfg.kind), "experiment '" + cfg.kind + "'");
  auto& s = cfg.settings;
  s.seed = yamlx::get<std::uint64_t>(root, "seed", 0);
  const auto seeds = yamlx::get<long long>(root, "seeds", 0);
  if (seeds < 0) throw ConfigError("seeds must be nonnegative", yamlx::line_of(root["seeds"]));
  s.seeds = static_cast<std::size_t>(seeds);
  s.horizon = yamlx::get<int>(root, "horizon", 0);
  if (s.horizon < 0) throw ConfigError("horizon must be nonnegative", yamlx::line_of(root["horizon"]));
  s.out = yamlx::get<std::string>(root, "out", "out/" + cfg.kind);
  s.tol.exact = yamlx::get<double>(root, "tolerance", s.tol.exact);
  if (!(s.tol.exact >= 0.0)) throw ConfigError("tolerance must be nonnegative", yamlx::line_of(root["tolerance"]));
  s.tol.sigmas = yamlx::get<double>(root, "sigmas", s.tol.sigmas);
  if (!(s.tol.sigmas > 0.0)) throw ConfigError("sigmas must be positive", yamlx::line_of(root["sigmas"]));
  const auto par = yamlx::get<int>(root, "parallel", 0);
  if (par < 0) throw ConfigError("parallel must be nonnegative", yamlx::line_of(root["parallel"]));
  s.parallel = static_cast<unsigned>(par);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str(), path);
}

/// SSCMI_OUT and SSCMI_PARALLEL; nothing else is read from the environment.
inline void apply_environment(ExperimentConfig& cfg) {
  if (const char* out = std::getenv("SSCMI_OUT"); out && *out) cfg.settings.out = out;
  if (const char* par = std::getenv("SSCMI_PARALLEL"); par && *par) {
    try {
      const int p = std::stoi(par);
      if (p < 0) throw std::invalid_argument("negative");
      cfg.settings.parallel = static_cast<unsigned>(p);
    } catch (const std::exception&) {
      throw UsageError(std::string("SSCMI_PARALLEL is not a nonnegative integer: ") + par);
    }
  }
}

inline void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  auto& s = cfg.settings;
  if (o.seed) s.seed = *o.seed;
  if (o.seeds) s.seeds = *o.seeds;
  if (o.horizon) {
    if (*o.horizon < 0) throw UsageError("--horizon must be nonnegative");
    s.horizon = *o.horizon;
  }
  if (o.out) s.out = *o.out;
  if (o.tolerance) {
    if (!(*o.tolerance >= 0.0)) throw UsageError("--tolerance must be nonnegative");
    s.tol.exact = *o.tolerance;
  }
  if (o.parallel) s.parallel = *o.parallel;
}

/// Hash of everything that determines the results: the config body and the effective
/// seed, seeds, horizon and tolerances. Output path and thread count are excluded.
inline std::string config_digest(const ExperimentConfig& cfg) {
  auto body = YAML::Clone(cfg.root);
  body.remove("out");
  body.remove("parallel");
  YAML::Emitter em;
  em << body;
  const auto& s = cfg.settings;
  std::ostringstream os;
  os << cfg.kind << '\n' << em.c_str() << "\nseed=" << s.seed << " seeds=" << s.seeds << " horizon=" << s.horizon
     << " tolerance=" << format_number(s.tol.exact) << " sigmas=" << format_number(s.tol.sigmas);
  return hex64(fnv1a64(os.str()));
}

// ---------------------------------------------------------------------------
// Supersample worlds

struct NamedWorld {
  std::string name;
  WorldSpec world;
  LearnerSpec learner;
  int horizon = 1;
};

namespace detail {

inline RowKernel::Key parse_row_key(const YAML::Node& n) {
  const auto k = yamlx::as<std::string>(n, "rows.key");
  if (k == "fixed") return RowKernel::Key::fixed;
  if (k == "by_round") return RowKernel::Key::by_round;
  if (k == "by_last_selected") return RowKernel::Key::by_last_selected;
  throw ConfigError("rows.key must be fixed, by_round or by_last_selected", yamlx::line_of(n));
}

inline const char* row_key_name(RowKernel::Key k) {
  switch (k) {
    case RowKernel::Key::fixed: return "fixed";
    case RowKernel::Key::by_round: return "by_round";
    case RowKernel::Key::by_last_selected: return "by_last_selected";
  }
  return "?";
}

inline WeightRule parse_weight(const YAML::Node& n) {
  if (n.IsScalar()) {
    if (n.as<std::string>() == "stop_after_loss") return StopAfterLoss{};
    return ConstantWeight{yamlx::as<double>(n, "weight")};
  }
  yamlx::require_map(n, "weight");
  yamlx::allow_keys(n, {"state"}, "weight");
  return StateWeight{yamlx::require<std::vector<double>>(n, "state")};
}

}  // namespace detail

/// Schema:
///   name, horizon, atoms (count or label list),
///   rows: {key, iid | tables, exchangeable, conditional_product},
///   retained: [Z, W, U],
///   learner: {kind: memorize_last | constant | markov | gibbs, loss, initial_state,
///             dist | transitions | eta + prior, weight}
inline NamedWorld parse_world(const YAML::Node& n, const std::string& fallback_name = "world") {
  yamlx::require_map(n, "world");
  yamlx::allow_keys(n, {"name", "horizon", "atoms", "rows", "retained", "learner"}, "world");
  NamedWorld w;
  w.name = yamlx::get<std::string>(n, "name", fallback_name);
  w.horizon = yamlx::get<int>(n, "horizon", 1);
  if (w.horizon < 1) throw ConfigError("world horizon must be at least 1", yamlx::line_of(n["horizon"]));

  const auto atoms = n["atoms"];
  if (!atoms) throw ConfigError("world '" + w.name + "' needs atoms", yamlx::line_of(n));
  if (atoms.IsSequence()) w.world.space.atoms = yamlx::as<std::vector<std::string>>(atoms, "atoms");
  else w.world.space = OutcomeSpace::numbered(yamlx::as<std::size_t>(atoms, "atoms"));
  const auto m = w.world.space.size();

  const auto rows = n["rows"];
  if (!rows) throw ConfigError("world '" + w.name + "' needs rows", yamlx::line_of(n));
  yamlx::require_map(rows, "rows");
  yamlx::allow_keys(rows, {"key", "iid", "tables", "exchangeable", "conditional_product"}, "rows");
  auto& rk = w.world.rows;
  if (rows["iid"]) {
    const auto marg = yamlx::as<std::vector<double>>(rows["iid"], "rows.iid");
    if (marg.size() != m) throw ConfigError("rows.iid needs one probability per atom", yamlx::line_of(rows["iid"]));
    rk = RowKernel::iid(marg);
  } else if (rows["tables"]) {
    rk.tables = yamlx::as<std::vector<std::vector<double>>>(rows["tables"], "rows.tables");
  } else {
    throw ConfigError("rows needs iid or tables", yamlx::line_of(rows));
  }
  if (rows["key"]) rk.key = detail::parse_row_key(rows["key"]);
  rk.exchangeable = yamlx::get<bool>(rows, "exchangeable", rk.exchangeable);
  rk.conditional_product = yamlx::get<bool>(rows, "conditional_product", rk.conditional_product);
  yamlx::at(rows, [&] {
    rk.validate(m);
    return 0;
  });

  if (const auto ret = n["retained"]) {
    w.world.retained.clear();
    for (const auto& r : ret) {
      const auto v = yamlx::as<std::string>(r, "retained");
      if (v == "Z") w.world.retained.push_back(Retained::Z);
      else if (v == "W") w.world.retained.push_back(Retained::W);
      else if (v == "U") w.world.retained.push_back(Retained::U);
      else throw ConfigError("retained entries are Z, W or U", yamlx::line_of(r));
    }
  }

  const auto ln = n["learner"];
  if (!ln) throw ConfigError("world '" + w.name + "' needs a learner", yamlx::line_of(n));
  yamlx::require_map(ln, "learner");
  yamlx::allow_keys(ln, {"kind", "loss", "initial_state", "dist", "transitions", "eta", "prior", "weight"}, "learner");
  const auto kind = yamlx::require<std::string>(ln, "kind");
  auto& l = w.learner;
  if (kind == "memorize_last") {
    l = LearnerSpec::memorize_last(m);
  } else {
    const auto loss = yamlx::require<std::vector<std::vector<double>>>(ln, "loss");
    if (kind == "constant") {
      l = LearnerSpec::constant(loss, yamlx::require<std::vector<double>>(ln, "dist"));
    } else if (kind == "markov") {
      l.num_states = loss.size();
      l.loss = loss;
      l.update = MarkovUpdate{yamlx::require<std::vector<std::vector<std::vector<double>>>>(ln, "transitions")};
    } else if (kind == "gibbs") {
      l.num_states = loss.size();
      l.loss = loss;
      l.update = GibbsUpdate{yamlx::get<double>(ln, "eta", 1.0), yamlx::require<std::vector<double>>(ln, "prior")};
    } else {
      throw ConfigError("learner kind must be memorize_last, constant, markov or gibbs", yamlx::line_of(ln["kind"]));
    }
  }
  l.initial_state = yamlx::get<int>(ln, "initial_state", 0);
  if (ln["weight"]) l.weight = detail::parse_weight(ln["weight"]);
  yamlx::at(n, [&] {
    w.world.validate();
    return 0;
  });
  yamlx::at(ln, [&] {
    w.learner.validate(w.world);
    return 0;
  });
  return w;
}

inline void emit_world(YAML::Emitter& em, const NamedWorld& w) {
  em << YAML::BeginMap;
  em << YAML::Key << "name" << YAML::Value << w.name;
  em << YAML::Key << "horizon" << YAML::Value << w.horizon;
  em << YAML::Key << "atoms" << YAML::Value << YAML::Flow << w.world.space.atoms;
  em << YAML::Key << "rows" << YAML::Value << YAML::BeginMap;
  em << YAML::Key << "key" << YAML::Value << detail::row_key_name(w.world.rows.key);
  em << YAML::Key << "tables" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : w.world.rows.tables) em << YAML::Flow << t;
  em << YAML::EndSeq;
  em << YAML::Key << "exchangeable" << YAML::Value << w.world.rows.exchangeable;
  em << YAML::Key << "conditional_product" << YAML::Value << w.world.rows.conditional_product;
  em << YAML::EndMap;
  em << YAML::Key << "retained" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto r : w.world.retained) em << to_string(r);
  em << YAML::EndSeq;
  const auto& l = w.learner;
  em << YAML::Key << "learner" << YAML::Value << YAML::BeginMap;
  if (const auto* mk = std::get_if<MarkovUpdate>(&l.update)) {
    em << YAML::Key << "kind" << YAML::Value << "markov";
    em << YAML::Key << "loss" << YAML::Value << YAML::BeginSeq;
    for (const auto& row : l.loss) em << YAML::Flow << row;
    em << YAML::EndSeq;
    em << YAML::Key << "transitions" << YAML::Value << YAML::BeginSeq;
    for (const auto& block : mk->table) {
      em << YAML::Flow << YAML::BeginSeq;
      for (const auto& d : block) em << d;
      em << YAML::EndSeq;
    }
    em << YAML::EndSeq;
  } else {
    const auto& g = std::get<GibbsUpdate>(l.update);
    em << YAML::Key << "kind" << YAML::Value << "gibbs";
    em << YAML::Key << "loss" << YAML::Value << YAML::BeginSeq;
    for (const auto& row : l.loss) em << YAML::Flow << row;
    em << YAML::EndSeq;
    em << YAML::Key << "eta" << YAML::Value << g.eta;
    em << YAML::Key << "prior" << YAML::Value << YAML::Flow << g.prior;
  }
  em << YAML::Key << "initial_state" << YAML::Value << l.initial_state;
  em << YAML::Key << "weight" << YAML::Value;
  std::visit(
      [&](const auto& wt) {
        using T = std::decay_t<decltype(wt)>;
        if constexpr (std::is_same_v<T, ConstantWeight>) em << wt.q;
        else if constexpr (std::is_same_v<T, StateWeight>)
          em << YAML::BeginMap << YAML::Key << "state" << YAML::Value << YAML::Flow << wt.q << YAML::EndMap;
        else em << "stop_after_loss";
      },
      l.weight);
  em << YAML::EndMap;
  em << YAML::EndMap;
}

inline std::string world_yaml(const NamedWorld& w) {
  YAML::Emitter em;
  em.SetDoublePrecision(17);
  emit_world(em, w);
  return std::string(em.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Active-learning worlds

struct NamedActiveWorld {
  std::string name;
  ActiveWorld world;
  QueryRule rule;
  ActiveLearner learner;
  int horizon = 1;
};

/// Schema:
///   name, horizon, num_x, num_y, pxy, coin_grid,
///   learner: {kind: erm | gibbs | memorize | constant, class: full | [[...]], prior, eta, initial_state},
///   rule: {kind: constant, p} | {kind: uncertainty, p_min} | {kind: table, p_min, table, name}
inline NamedActiveWorld parse_active_world(const YAML::Node& n, const std::string& fallback_name = "active") {
  yamlx::require_map(n, "active world");
  yamlx::allow_keys(n, {"name", "horizon", "num_x", "num_y", "pxy", "coin_grid", "learner", "rule"}, "active world");
  NamedActiveWorld a;
  a.name = yamlx::get<std::string>(n, "name", fallback_name);
  a.horizon = yamlx::get<int>(n, "horizon", 1);
  if (a.horizon < 1) throw ConfigError("active horizon must be at least 1", yamlx::line_of(n["horizon"]));
  a.world.num_x = yamlx::get<std::size_t>(n, "num_x", 2);
  a.world.num_y = yamlx::get<std::size_t>(n, "num_y", 2);
  a.world.pxy = yamlx::require<std::vector<double>>(n, "pxy");
  a.world.coin_grid = yamlx::get<int>(n, "coin_grid", 8);
  yamlx::at(n, [&] {
    a.world.validate();
    return 0;
  });

  const auto ln = n["learner"];
  if (!ln) throw ConfigError("active world '" + a.name + "' needs a learner", yamlx::line_of(n));
  yamlx::require_map(ln, "learner");
  yamlx::allow_keys(ln, {"kind", "class", "prior", "eta", "initial_state"}, "learner");
  const auto kind = yamlx::require<std::string>(ln, "kind");
  ActiveLearner::Kind k;
  if (kind == "erm") k = ActiveLearner::Kind::erm;
  else if (kind == "gibbs") k = ActiveLearner::Kind::gibbs;
  else if (kind == "memorize") k = ActiveLearner::Kind::memorize;
  else if (kind == "constant") k = ActiveLearner::Kind::constant;
  else throw ConfigError("active learner kind must be erm, gibbs, memorize or constant", yamlx::line_of(ln["kind"]));
  const auto cls = ln["class"];
  if (!cls || (cls.IsScalar() && cls.as<std::string>() == "full")) {
    a.learner = ActiveLearner::full_class(a.world, k);
  } else {
    a.learner.kind = k;
    a.learner.hypotheses = yamlx::as<FunctionTable>(cls, "class");
    a.learner.prior.assign(a.learner.hypotheses.size(), 1.0 / double(std::max<std::size_t>(1, a.learner.hypotheses.size())));
  }
  if (ln["prior"]) a.learner.prior = yamlx::as<std::vector<double>>(ln["prior"], "prior");
  a.learner.eta = yamlx::get<double>(ln, "eta", 1.0);
  a.learner.initial_state = yamlx::get<int>(ln, "initial_state", 0);
  yamlx::at(ln, [&] {
    a.learner.validate(a.world);
    return 0;
  });

  const auto rn = n["rule"];
  if (!rn) throw ConfigError("active world '" + a.name + "' needs a query rule", yamlx::line_of(n));
  yamlx::require_map(rn, "rule");
  yamlx::allow_keys(rn, {"kind", "name", "p", "p_min", "table"}, "rule");
  const auto rk = yamlx::require<std::string>(rn, "kind");
  const auto H = a.learner.num_states();
  if (rk == "constant") a.rule = QueryRule::constant(yamlx::require<double>(rn, "p"), H, a.world.num_x);
  else if (rk == "uncertainty")
    a.rule = QueryRule::uncertainty(a.learner.hypotheses, a.world.num_y, yamlx::require<double>(rn, "p_min"));
  else if (rk == "table")
    a.rule = QueryRule{yamlx::get<std::string>(rn, "name", "table"), yamlx::require<double>(rn, "p_min"),
                       yamlx::require<std::vector<std::vector<double>>>(rn, "table")};
  else throw ConfigError("rule kind must be constant, uncertainty or table", yamlx::line_of(rn["kind"]));
  yamlx::at(rn, [&] {
    a.rule.validate(H, a.world.num_x, a.world.coin_grid);
    return 0;
  });
  return a;
}

inline std::string active_world_yaml(const NamedActiveWorld& a) {
  const char* kinds[] = {"erm", "gibbs", "memorize", "constant"};
  YAML::Emitter em;
  em.SetDoublePrecision(17);
  em << YAML::BeginMap;
  em << YAML::Key << "name" << YAML::Value << a.name;
  em << YAML::Key << "horizon" << YAML::Value << a.horizon;
  em << YAML::Key << "num_x" << YAML::Value << a.world.num_x;
  em << YAML::Key << "num_y" << YAML::Value << a.world.num_y;
  em << YAML::Key << "pxy" << YAML::Value << YAML::Flow << a.world.pxy;
  em << YAML::Key << "coin_grid" << YAML::Value << a.world.coin_grid;
  em << YAML::Key << "learner" << YAML::Value << YAML::BeginMap;
  em << YAML::Key << "kind" << YAML::Value << kinds[static_cast<int>(a.learner.kind)];
  em << YAML::Key << "class" << YAML::Value << YAML::BeginSeq;
  for (const auto& h : a.learner.hypotheses) em << YAML::Flow << h;
  em << YAML::EndSeq;
  em << YAML::Key << "prior" << YAML::Value << YAML::Flow << a.learner.prior;
  em << YAML::Key << "eta" << YAML::Value << a.learner.eta;
  em << YAML::Key << "initial_state" << YAML::Value << a.learner.initial_state;
  em << YAML::EndMap;
  em << YAML::Key << "rule" << YAML::Value << YAML::BeginMap;
  em << YAML::Key << "kind" << YAML::Value << "table";
  em << YAML::Key << "name" << YAML::Value << a.rule.name;
  em << YAML::Key << "p_min" << YAML::Value << a.rule.p_min;
  em << YAML::Key << "table" << YAML::Value << YAML::BeginSeq;
  for (const auto& row : a.rule.table) em << YAML::Flow << row;
  em << YAML::EndSeq;
  em << YAML::EndMap;
  em << YAML::EndMap;
  return std::string(em.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Bandit environments and schedules

/// `arms`: list of Bernoulli means, or of {values, probs} reward laws.
inline BanditEnv parse_arms(const YAML::Node& n) {
  if (!n.IsSequence()) throw ConfigError("arms must be a list", yamlx::line_of(n));
  std::vector<RewardLaw> laws;
  for (const auto& a : n) {
    if (a.IsScalar()) {
      laws.push_back(RewardLaw::bernoulli(yamlx::as<double>(a, "arm mean")));
    } else {
      yamlx::require_map(a, "arm");
      yamlx::allow_keys(a, {"values", "probs"}, "arm");
      laws.push_back({yamlx::require<std::vector<double>>(a, "values"), yamlx::require<std::vector<double>>(a, "probs")});
    }
  }
  return yamlx::at(n, [&] { return BanditEnv(std::move(laws)); });
}

/// `default` | `uniform` | {epsilon, gamma}.
inline Schedule parse_schedule(const YAML::Node& n, const BanditEnv& env) {
  if (!n || (n.IsScalar() && n.as<std::string>() == "default")) return Schedule::standard(env.arms(), env.delta_min());
  if (n.IsScalar() && n.as<std::string>() == "uniform") return Schedule::uniform(env.arms());
  if (n.IsMap()) {
    yamlx::allow_keys(n, {"epsilon", "gamma"}, "schedule");
    return Schedule::constant(yamlx::require<double>(n, "epsilon"), yamlx::require<double>(n, "gamma"));
  }
  throw ConfigError("schedule must be default, uniform or {epsilon, gamma}", yamlx::line_of(n));
}

}  // namespace sscmi
