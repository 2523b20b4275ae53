// rwlab: command-line harness for the random-walk experiments.
//
// Exit codes: 0 success, 2 config error, 3 runtime error, 4 acceptance failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rwlab/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitAcceptance = 4;

int exit_code_for(rwlab::Errc code) {
  return code == rwlab::Errc::ConfigInvalid || code == rwlab::Errc::InvalidSpec ? kExitConfig : kExitRuntime;
}

std::string read_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) rwlab::fail(rwlab::Errc::ConfigInvalid, "cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-walk cover, late-point and lamplighter experiments"};
  app.set_version_flag("--version", std::string(rwlab::kToolVersion));

  std::string config_path, out_dir = "rwlab_out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool check = false;
  std::vector<int> only;

  app.add_flag("--check", check, "Run the acceptance suite");
  app.add_option("--only", only, "With --check: run only these criteria")->check(CLI::Range(1, 11));
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Master seed (overrides the config)");
    cmd->add_option("--out", out_dir, "Output directory");
    cmd->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));
  };
  add_common(&app);

  const std::vector<std::pair<std::string, std::string>> kinds{
      {"gen", "Generate a graph and write its edge list"},
      {"cover", "Monte Carlo cover times"},
      {"late", "Late-set sizes across alpha"},
      {"distinguish", "Zero-count power and exponential-moment bound across alpha"},
      {"excursion", "Excursion decomposition, hitting prediction, occupation and partition"},
      {"lamplighter", "Lamplighter TV curves and the cutoff probe"},
      {"oracle", "Exact mixing times, Green's function and hitting times"}};
  std::vector<CLI::App*> experiment_cmds;
  for (const auto& [name, help] : kinds) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    add_common(cmd);
    experiment_cmds.push_back(cmd);
  }
  std::string record_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a record and check bit-exact agreement");
  replay_cmd->add_option("record", record_path, "record.json to replay")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--config", config_path, "Config that must match the recorded one");
  add_common(replay_cmd);
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (check) {
      rwlab::SuiteOptions opt;
      opt.out_dir = out_dir;
      if (seed) opt.seed = *seed;
      if (threads) opt.threads = *threads;
      opt.only = only;
      return rwlab::run_acceptance_suite(opt, std::cout) == 0 ? 0 : kExitAcceptance;
    }
    if (replay_cmd->parsed()) {
      rwlab::ReplayOptions opt;
      opt.seed = seed;
      opt.threads = threads;
      opt.out_dir = out_dir;
      if (!config_path.empty()) opt.config_text = read_text(config_path);
      const auto report = rwlab::replay(rwlab::load_record(record_path), opt, std::cout);
      std::cout << "replay: " << report.fields_compared << " fields bit-exact\n";
      return 0;
    }
    for (auto* cmd : experiment_cmds) {
      if (!cmd->parsed()) continue;
      auto cfg = rwlab::load_config(config_path, cmd->get_name());
      if (seed) cfg.seed = *seed;
      if (threads) cfg.threads = *threads;
      const auto rec = rwlab::run(cfg, out_dir, std::cout);
      std::cout << rec.kind << ": record written to " << (std::filesystem::path(out_dir) / "record.json").string()
                << '\n';
      return 0;
    }
    std::cerr << app.help();
    return kExitConfig;
  } catch (const rwlab::Error& e) {
    std::cerr << "rwlab: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rwlab: " << e.what() << '\n';
    return kExitRuntime;
  }
}
