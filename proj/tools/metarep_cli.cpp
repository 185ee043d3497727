// metarep: run, validate and summarize meta-representation bandit experiments.

#include <charconv>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "metarep/config.hpp"
#include "metarep/errors.hpp"
#include "metarep/experiment.hpp"

namespace {

constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;

std::pair<int, std::string> split_dim_path(const std::string& arg) {
  const auto colon = arg.find(':');
  int d = 0;
  if (colon == std::string::npos ||
      std::from_chars(arg.data(), arg.data() + colon, d).ptr != arg.data() + colon || d < 1) {
    throw metarep::ConfigError("--in expects <d>:<path>, got '" + arg + "'");
  }
  return {d, arg.substr(colon + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-representation learning for linear contextual bandits"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  int seeds = 0;
  int workers = 0;
  bool dump_traces = false;
  auto* run = app.add_subcommand("run", "Run the full experiment and write one CSV row per policy run");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--seeds", seeds, "Override experiment.n_seeds")->check(CLI::PositiveNumber);
  run->add_option("--workers", workers, "Override experiment.workers")->check(CLI::PositiveNumber);
  run->add_option("--out", out_path, "Override experiment.output_path");
  run->add_flag("--dump-traces", dump_traces, "Also write per-round traces to <out>.traces.csv");

  auto* validate = app.add_subcommand("validate", "Check a config file and print it with defaults filled in");
  validate->add_option("--config", config_path, "Experiment config file")->required();

  std::vector<std::string> inputs;
  int n_test = 8;
  auto* summarize = app.add_subcommand("summarize", "Regret scaling summary over run CSVs");
  summarize->add_option("--in", inputs, "Run CSV tagged with its ambient dimension, as <d>:<path>")
      ->required();
  summarize->add_option("--out", out_path, "Summary CSV")->required();
  summarize->add_option("--n-test", n_test, "Test horizon N used by the runs (labels the n column)")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const metarep::ExperimentConfig config = metarep::load_config(config_path);
      std::cout << metarep::serialize_config(config);
      return 0;
    }
    if (*run) {
      metarep::ExperimentConfig config = metarep::load_config(config_path);
      if (seeds > 0) config.n_seeds = seeds;
      if (workers > 0) config.workers = workers;
      if (!out_path.empty()) config.output_path = out_path;
      config.validate();
      const auto result = metarep::run_experiment(config, {config.workers, dump_traces});
      metarep::emit_csv(result.records, config.output_path);
      if (dump_traces) metarep::emit_traces_csv(result.traces, config.output_path + ".traces.csv");
      std::cerr << "wrote " << result.records.size() << " records to " << config.output_path << "\n";
      return 0;
    }
    if (*summarize) {
      std::vector<std::pair<int, std::vector<metarep::RunRecord>>> runs;
      for (const std::string& arg : inputs) {
        auto [d, path] = split_dim_path(arg);
        runs.emplace_back(d, metarep::parse_csv(path));
      }
      const auto summary = metarep::scaling_summary(metarep::regret_table(runs, n_test));
      metarep::emit_summary_csv(summary, out_path);
      return 0;
    }
  } catch (const metarep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const metarep::InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return 0;
}
