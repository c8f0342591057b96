// holstein_lab: batch front end for the Holstein experiments.
//
//   holstein_lab run CONFIG [--set key=value]... [--tolerance check=value]... [--output DIR]
//   holstein_lab verify [CONFIG] [--set ...] [--tolerance ...] [--output DIR]
//   holstein_lab defaults
//   holstein_lab hash CONFIG [--set ...]
//
// Exit codes: 0 ok, 2 config error, 3 compute error or failed verification.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "holstein/config.hpp"
#include "holstein/experiments.hpp"

namespace {

using holstein::json;

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::string> tolerances;
  std::string output;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--set", c.sets, "Override a config value, key.path=value")->take_all();
  cmd->add_option("--tolerance", c.tolerances, "Override a verify tolerance, check=value")->take_all();
  cmd->add_option("--output,-o", c.output, "Output directory (overrides output.dir)");
}

json load(const Common& c, bool verify_defaults) {
  json doc = c.config_path.empty() ? holstein::default_config() : holstein::read_json_file(c.config_path);
  if (verify_defaults) {
    if (!doc.is_object()) throw holstein::Error(holstein::ErrorCode::ConfigInvalid, "config: expected an object");
    doc["experiment"] = json{{"kind", "verify"}};
  }
  for (const auto& s : c.sets) holstein::apply_override(doc, s);
  for (const auto& t : c.tolerances) holstein::apply_override(doc, "experiment.tolerances." + t);
  if (!c.output.empty()) holstein::apply_override(doc, "output.dir=" + json(c.output).dump());
  return doc;
}

int run(const Common& c, bool verify) {
  json normalized;
  holstein::ExperimentConfig cfg;
  try {
    cfg = holstein::parse_config(load(c, verify && c.config_path.empty()), &normalized);
  } catch (const holstein::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return holstein::exit_code_for(e.code());
  }
  if (verify && cfg.kind != "verify") {
    std::cerr << "config error: experiment.kind: verify requires kind \"verify\"\n";
    return holstein::kExitConfig;
  }
  const auto out = holstein::run_experiment(cfg, normalized);
  if (cfg.kind == "verify" && out.summary["results"].contains("checks")) {
    for (const auto& chk : out.summary["results"]["checks"]) {
      std::cout << (chk["skipped"].get<bool>() ? "SKIP " : chk["pass"].get<bool>() ? "PASS " : "FAIL ")
                << chk["check"].get<std::string>() << "  measured=" << holstein::format_double(chk["measured"].get<double>())
                << "  tolerance=" << holstein::format_double(chk["tolerance"].get<double>()) << "\n";
    }
  }
  const auto& diag = out.summary["diagnostics"];
  if (diag.contains("error"))
    std::cerr << diag["error"]["code"].get<std::string>() << ": " << diag["error"]["message"].get<std::string>() << "\n";
  std::cout << "kind=" << cfg.kind << " exit=" << out.exit_code << " hash=" << out.summary["config_hash"].get<std::string>()
            << " summary=" << (std::filesystem::path(cfg.output_dir) / "summary.json").string() << "\n";
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the disordered Holstein model"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run_cmd->add_option("config", run_opts.config_path, "Config file")->required();
  add_common(run_cmd, run_opts);

  Common verify_opts;
  auto* verify_cmd = app.add_subcommand("verify", "Run the exact-identity suite (built-in defaults when no config)");
  verify_cmd->add_option("config", verify_opts.config_path, "Config file with experiment.kind = verify");
  add_common(verify_cmd, verify_opts);

  auto* defaults_cmd = app.add_subcommand("defaults", "Print the default configuration");

  Common hash_opts;
  auto* hash_cmd = app.add_subcommand("hash", "Print the normalized config and its hash");
  hash_cmd->add_option("config", hash_opts.config_path, "Config file")->required();
  hash_cmd->add_option("--set", hash_opts.sets, "Override a config value")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : holstein::kExitConfig;
  }

  try {
    if (*run_cmd) return run(run_opts, false);
    if (*verify_cmd) return run(verify_opts, true);
    if (*defaults_cmd) {
      std::cout << holstein::default_config().dump(2) << "\n";
      return 0;
    }
    if (*hash_cmd) {
      json normalized;
      try {
        holstein::parse_config(load(hash_opts, false), &normalized);
      } catch (const holstein::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return holstein::exit_code_for(e.code());
      }
      std::cout << holstein::config_hash(normalized) << "\n" << normalized.dump(2) << "\n";
      return 0;
    }
  } catch (const holstein::Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << "\n";
    return holstein::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return holstein::kExitCompute;
  }
  return 0;
}
