#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "metarep/config.hpp"
#include "metarep/diagnostics.hpp"
#include "metarep/mtl_estimator.hpp"

namespace metarep {

/// Fractions of the test horizon at which cumulative regret is recorded.
inline constexpr std::array<int, 4> kCheckpointDivisors{8, 4, 2, 1};

/// Number of test rounds at each checkpoint: N/8, N/4, N/2, N (integer division).
std::array<int, 4> checkpoint_rounds(int n_test);

struct RunRecord {
  std::uint64_t seed = 0;
  std::string policy;  // meta | oracle | ambient
  std::string method;  // rank_agnostic | rank_r (suffixed @lambda in grid mode), true_b, identity
  std::array<double, 4> checkpoint_regret{};
  double frob_error = 0.0;
  double op_error = 0.0;
  double sigma_r_w = 0.0;
  double subspace_gap = 0.0;
  long estimated_rank = 0;
  double min_eig_final = 0.0;
  bool converged = false;

  bool operator==(const RunRecord&) const = default;
};

/// Per-round output of one policy run, kept only when traces are requested.
struct TraceRecord {
  std::uint64_t seed = 0;
  std::string policy;
  std::string method;
  std::vector<double> instantaneous;
  std::vector<double> cumulative;
  std::vector<double> estimation_error;
  std::vector<double> min_eig_projected;
};

struct ExperimentResult {
  std::vector<RunRecord> records;  // sorted by seed, then policy, then method
  std::vector<TraceRecord> traces;
};

struct RunOptions {
  int workers = 1;
  bool keep_traces = false;
};

/// Full pipeline for every replicate: task draw, logged training phase,
/// trace-norm fit, representation extraction, test-phase policies and
/// diagnostics. Replicate i uses seed base_seed + i.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Output of the training phase of a single replicate, exposed for tests and diagnostics.
struct ReplicateFit {
  TaskSet tasks;
  double lambda = 0.0;
  SolverReport report;
  DiagnosticsReport diagnostics;
};

/// Trains one replicate with a single lambda (the first of config.lambdas()).
ReplicateFit fit_replicate(const ExperimentConfig& config, std::uint64_t seed);

inline const std::vector<std::string> kCsvColumns{
    "seed",     "policy",     "method",       "regret_n8",      "regret_n4",
    "regret_n2", "regret_n",  "frob_error",   "op_error",       "sigma_r_w",
    "subspace_gap", "estimated_rank", "min_eig_final", "converged"};

void emit_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path);
std::string to_csv(const std::vector<RunRecord>& records);
std::vector<RunRecord> parse_csv(const std::filesystem::path& path);

void emit_traces_csv(const std::vector<TraceRecord>& traces, const std::filesystem::path& path);

/// Builds the scaling table from run records; each input carries the ambient
/// dimension it was produced with.
RegretTable regret_table(const std::vector<std::pair<int, std::vector<RunRecord>>>& runs,
                         int n_test);

void emit_summary_csv(const ScalingSummary& summary, const std::filesystem::path& path);

}  // namespace metarep
