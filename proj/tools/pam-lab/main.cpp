#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pamlab/harness.hpp"
#include "pamlab/parallel.hpp"

using namespace pamlab;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  bool zero_noise = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "experiment config file")->required()->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "master seed (overrides the config)");
  app->add_option("--workers", c.workers, "worker threads (default: PAM_LAB_WORKERS or 1)")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "output directory (overrides output.dir)");
  app->add_flag("--zero-noise", c.zero_noise, "drop the noise (diagnostic)");
}

ExperimentConfig build(const Common& c, const std::string& kind) {
  ConfigMap m = ConfigMap::load(c.config);
  if (!kind.empty()) {
    if (m.has("kind"))
      require(m.get_string("kind") == kind, ErrorKind::ConfigInvalid,
              "config kind '" + m.get_string("kind") + "' does not match command '" + kind + "'");
    m.set("kind", kind);
  }
  if (c.seed_set) m.set("seed", std::to_string(c.seed));
  if (c.zero_noise) m.set("zero_noise", "true");
  if (!c.out.empty()) m.set("output.dir", c.out);
  if (c.workers > 0) m.set("workers", std::to_string(c.workers));
  return ExperimentConfig::from_map(m);
}

void print_record(const RunRecord& r, const std::string& dir) {
  std::cout << r.kind << "  hash " << r.config_hash << "  seed " << r.seed << "  -> " << dir << '\n';
  for (const auto& [n, v] : r.headlines) std::cout << "  " << n << " = " << format_double(v) << '\n';
  std::cout << "  headline digest " << r.headline_digest() << '\n';
}

int report(const Error& e) {
  nlohmann::ordered_json j{{"error", std::string(to_string(e.kind()))}, {"cause", error_cause(e)}, {"message", e.what()}};
  std::cerr << j.dump() << '\n';
  return exit_code(e.kind());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pam-lab: experiments for the parabolic Anderson model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  std::vector<Common> commons(experiment_kind_names().size() + 1);
  std::vector<CLI::App*> subs;
  const auto kinds = experiment_kind_names();
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    auto* s = app.add_subcommand(kinds[i], "run one " + kinds[i] + " experiment");
    add_common(s, commons[i]);
    subs.push_back(s);
  }
  Common& sc = commons.back();
  std::string axis;
  std::vector<std::string> values;
  auto* sw = app.add_subcommand("sweep", "run a config over a list of values of one key");
  add_common(sw, sc);
  sw->add_option("--axis", axis, "config key to vary, e.g. m or covariance.epsilon")->required();
  sw->add_option("--values", values, "values, comma separated")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (std::size_t i = 0; i < commons.size(); ++i) {
    CLI::App* s = i < subs.size() ? subs[i] : sw;
    commons[i].seed_set = s->count("--seed") > 0;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      const auto cfg = build(commons[i], kinds[i]);
      const auto rec = run(cfg);
      print_record(rec, cfg.output_dir);
      return 0;
    }
    const auto base = build(sc, "");
    const auto res = sweep(base, axis, values);
    for (const auto& r : res.records) print_record(r, "");
    std::cout << "table " << res.table << '\n';
    if (res.moment_growth)
      std::cout << "moment growth p = " << format_double(res.moment_growth->p) << " (target "
                << format_double(res.moment_growth->target_p) << ")\n";
    return 0;
  } catch (const Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    nlohmann::ordered_json j{{"error", "ModuleError"}, {"cause", "Unknown"}, {"message", e.what()}};
    std::cerr << j.dump() << '\n';
    return 4;
  }
}
