#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metarep/environment.hpp"

namespace metarep {

enum class LambdaMode { schedule, fixed, grid };
enum class MethodSelection { rank_agnostic, rank_r, both };
enum class BehaviorPolicy { uniform, greedy };

struct LambdaParams {
  std::optional<double> scale_c;  // unset means 0.5 * noise_sigma
  double confidence_x = 0.0;      // set to log(1/0.05) by default_config()
  std::vector<double> values;     // explicit lambdas for fixed / grid modes
};

/// Scale multiples of noise_sigma used by grid mode when no explicit values are given.
inline const std::vector<double> kDefaultGridMultiples{0.1, 0.5, 1.0, 2.0};

struct ExperimentConfig {
  EnvironmentSpec environment;
  int n_tr = 400;
  int n_test = 400;
  int n_seeds = 20;
  std::uint64_t base_seed = 1;
  LambdaMode lambda_mode = LambdaMode::schedule;
  LambdaParams lambda;
  MethodSelection representation_method = MethodSelection::rank_agnostic;
  std::vector<std::string> policies{"meta", "oracle", "ambient"};
  BehaviorPolicy behavior_policy = BehaviorPolicy::uniform;
  bool corollary_check = true;
  std::string output_path = "results.csv";
  int workers = 1;
  int max_iters = 20000;
  double solver_tol = 1e-6;
  double rel_rank_tol = 1e-6;

  double effective_scale_c() const;
  /// Regularization levels for this run, in the order they are fitted.
  std::vector<double> lambdas() const;
  /// Throws ConfigError naming the violated constraint.
  void validate() const;

  bool operator==(const ExperimentConfig& other) const;
};

ExperimentConfig default_config();

/// Parses the sectioned key = value format. Unknown keys and invalid values
/// raise ConfigError naming the key; the result is validated.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config: writes every field explicitly.
std::string serialize_config(const ExperimentConfig& config);

bool same_matrix(const Matrix& a, const Matrix& b);

}  // namespace metarep
