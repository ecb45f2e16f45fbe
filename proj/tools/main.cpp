// Command-line front end: one subcommand per experiment kind plus
// `compare` for ranking finished runs. Exit codes: 0 success, 1 config
// error, 2 runtime abort.

#include <CLI11.hpp>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cfgflow/config.hpp"
#include "cfgflow/errors.hpp"
#include "cfgflow/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string seed_list;
  std::string out_dir = "runs/out";
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")->required();
  cmd->add_option("--seed", args.seed_list, "comma-separated seed list (overrides run.seeds)");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) seeds.push_back(std::stoull(part));
  }
  if (seeds.empty()) throw cfgflow::ConfigError("--seed: empty seed list");
  return seeds;
}

int run_kind(cfgflow::ExperimentKind kind, const CommonArgs& args) {
  cfgflow::RunConfig cfg;
  try {
    cfg = cfgflow::parse_config_file(args.config_path);
    if (cfg.kind != kind) {
      throw cfgflow::ConfigError("config declares experiment.kind = " +
                                 cfgflow::kind_name(cfg.kind) + ", but the subcommand is " +
                                 cfgflow::kind_name(kind));
    }
    if (!args.seed_list.empty()) cfg.run.seeds = parse_seed_list(args.seed_list);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    cfgflow::RunResult result = cfgflow::run_experiment(cfg, args.out_dir, args.quiet);
    for (const auto& err : result.errors) std::cerr << err << "\n";
    if (!args.quiet) {
      std::cout << "run " << result.run_id << " -> " << args.out_dir << " ("
                << result.outputs.size() << " files)\n";
    }
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "runtime abort: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"annealed functional-gradient GAN laboratory"};
  app.require_subcommand(1);

  struct SubSpec {
    cfgflow::ExperimentKind kind;
    const char* name;
    const char* help;
  };
  static const SubSpec kSubs[] = {
      {cfgflow::ExperimentKind::flow, "flow", "analytic-discriminator particle flow"},
      {cfgflow::ExperimentKind::train_cfg, "train-cfg", "composite-gradient training"},
      {cfgflow::ExperimentKind::train_gan, "train-gan", "cts/nts/nats adversarial training"},
      {cfgflow::ExperimentKind::sample_langevin, "sample-langevin",
       "plain or annealed dynamics sampling"},
      {cfgflow::ExperimentKind::eval, "eval", "metrics for an existing samples dump"},
      {cfgflow::ExperimentKind::dump_field, "dump-field", "discriminator gradient field dump"},
      {cfgflow::ExperimentKind::grad_check, "grad-check", "finite-difference gradient audit"},
  };

  std::vector<std::pair<cfgflow::ExperimentKind, CommonArgs>> runs;
  runs.reserve(std::size(kSubs));
  for (const auto& sub : kSubs) {
    runs.emplace_back(sub.kind, CommonArgs{});
    CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
    add_common(cmd, runs.back().second);
  }

  // compare
  std::vector<std::string> compare_dirs;
  std::string compare_metric = "frechet";
  std::string compare_agg = "median";
  CLI::App* cmp = app.add_subcommand("compare", "rank finished runs by a metric");
  cmp->add_option("dirs", compare_dirs, "run output directories")->required();
  cmp->add_option("--metric", compare_metric,
                  "frechet | kl | modes_covered | quality_fraction | score_gap");
  cmp->add_option("--agg", compare_agg, "median | min | mean");

  CLI11_PARSE(app, argc, argv);

  if (cmp->parsed()) {
    try {
      cfgflow::CompareTable table =
          cfgflow::compare_runs(compare_dirs, compare_metric, compare_agg);
      std::cout << cfgflow::format_table(table);
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "compare failed: " << e.what() << "\n";
      return 2;
    }
  }

  for (std::size_t i = 0; i < std::size(kSubs); ++i) {
    if (app.get_subcommands().front()->get_name() == kSubs[i].name) {
      return run_kind(runs[i].first, runs[i].second);
    }
  }
  std::cerr << "no subcommand\n";
  return 1;
}
