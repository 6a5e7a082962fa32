// sscmi_lab: run verification suites from a YAML config.
//
//   sscmi_lab <verb> [--config FILE] [--seed N] [--seeds N] [--horizon N]
//             [--out DIR] [--tolerance X] [--parallel N] [--print-config]
//
// verbs: verify-identities, sweep, online, active, bandit.
// Exit status: 0 all hold, 1 violation, 2 usage/config error, 3 inconclusive only.

#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "sscmi/harness.hpp"

namespace {

struct Flags {
  std::string config;
  sscmi::Overrides over;
  bool print_config = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "YAML experiment config (default: built-in stock config)");
  cmd->add_option("--seed", f.over.seed, "base seed");
  cmd->add_option("--seeds", f.over.seeds, "number of seeds or random instances");
  cmd->add_option("--horizon", f.over.horizon, "horizon (rounds)");
  cmd->add_option("--out", f.over.out, "output directory");
  cmd->add_option("--tolerance", f.over.tolerance, "exact-check tolerance");
  cmd->add_option("--parallel", f.over.parallel, "worker threads (0: all cores)");
  cmd->add_flag("--print-config", f.print_config, "print the config that would run and exit");
}

int run(const std::string& verb, const Flags& f) {
  const auto kind = sscmi::kind_of_verb(verb);
  std::string text;
  sscmi::ExperimentConfig cfg;
  if (f.config.empty()) {
    text = sscmi::stock_config(kind);
    cfg = sscmi::load_config_text(text, "stock:" + kind);
  } else {
    cfg = sscmi::load_config(f.config);
  }
  if (cfg.kind != kind)
    throw sscmi::ConfigError("config is for experiment '" + cfg.kind + "', not '" + kind + "'",
                             sscmi::yamlx::line_of(cfg.root["experiment"]));
  sscmi::apply_environment(cfg);
  sscmi::apply_overrides(cfg, f.over);
  if (f.print_config) {
    YAML::Emitter em;
    em << cfg.root;
    std::cout << em.c_str() << '\n';
    return sscmi::exit_ok;
  }
  const auto res = sscmi::run_suite(cfg);
  sscmi::write_outputs(res, cfg.settings.out);
  std::cout << sscmi::summary_text(res) << "outputs: " << cfg.settings.out << '\n';
  return res.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential supersample CMI verification lab"};
  app.require_subcommand(1);
  Flags flags;
  std::string verb;
  for (const char* v : {"verify-identities", "sweep", "online", "active", "bandit"}) {
    auto* cmd = app.add_subcommand(v, std::string("run the ") + v + " suite");
    add_flags(cmd, flags);
    cmd->callback([&verb, v] { verb = v; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sscmi::exit_usage;
  }
  try {
    return run(verb, flags);
  } catch (const sscmi::ConfigError& e) {
    std::cerr << (flags.config.empty() ? std::string("config") : flags.config) << ": " << e.what() << '\n';
  } catch (const sscmi::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
  } catch (const std::length_error& e) {
    std::cerr << "enumeration cap: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return sscmi::exit_usage;
}
