#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "metarep/config.hpp"
#include "metarep/errors.hpp"
#include "metarep/experiment.hpp"

using namespace metarep;

namespace {

const std::string kMinimal = "[environment]\nd = 8\nr = 2\nT = 6\nK = 5\n";

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("metarep_test_" + name);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

ExperimentConfig small_config() {
  ExperimentConfig c = parse_config(kMinimal);
  c.n_tr = 60;
  c.n_test = 40;
  c.n_seeds = 2;
  c.environment.noise_sigma = 0.3;
  return c;
}

}  // namespace

TEST_CASE("minimal config gets every default") {
  const ExperimentConfig c = parse_config(kMinimal);
  CHECK(c.environment.d == 8);
  CHECK(c.environment.K == 5);
  CHECK(c.environment.arm_covariances.size() == 5);
  CHECK(same_matrix(c.environment.arm_covariances[4], Matrix::Identity(8, 8)));
  CHECK(c.environment.noise_sigma == 0.5);
  CHECK(c.environment.arm_model == ArmModel::gaussian);
  CHECK(c.n_tr == 400);
  CHECK(c.n_test == 400);
  CHECK(c.n_seeds == 20);
  CHECK(c.lambda_mode == LambdaMode::schedule);
  CHECK(c.effective_scale_c() == 0.25);
  CHECK(c.lambda.confidence_x == doctest::Approx(std::log(20.0)));
  CHECK(c.policies == std::vector<std::string>{"meta", "oracle", "ambient"});
  CHECK(c.behavior_policy == BehaviorPolicy::uniform);
}

TEST_CASE("config errors name the key or constraint") {
  CHECK(error_of(kMinimal + "dimension = 3\n").find("environment.dimension") != std::string::npos);
  CHECK(error_of(kMinimal + "[extra]\nx = 1\n").find("extra") != std::string::npos);
  CHECK(error_of("[environment]\nd = 8\nr = 2\nT = 6\n").find("environment.K") != std::string::npos);
  CHECK(error_of(kMinimal + "noise_sigma = abc\n").find("environment.noise_sigma") != std::string::npos);
  CHECK(error_of(kMinimal + "[experiment]\nn_tr = 50\nn_test = 100\n").find("n_test <= n_tr") !=
        std::string::npos);
  CHECK(error_of(kMinimal + "[experiment]\nn_tr = 50\nn_test = 100\ncorollary_check = false\n").empty());
  CHECK(error_of(kMinimal + "[experiment]\npolicies = meta, ucb\n").find("ucb") != std::string::npos);
  CHECK(error_of(kMinimal + "[lambda]\nmode = fixed\n").find("lambda.values") != std::string::npos);
  CHECK(error_of(kMinimal + "noise_sigma = 0\n").find("scale_c") != std::string::npos);
  CHECK(error_of("[environment]\nd = 3\nr = 3\nT = 6\nK = 5\n").find("r must be smaller than d") !=
        std::string::npos);
  CHECK(error_of(kMinimal + "arm_covariance = diag 1 2\n").find("arm_covariance") != std::string::npos);
  CHECK(error_of(kMinimal + "arm_covariance_7 = identity\n").find("arm index") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/metarep.ini"), ConfigError);
}

TEST_CASE("config serialization round-trips") {
  const std::string text = kMinimal +
                           "noise_sigma = 0.3\n"
                           "arm_covariance = diag 4 1 1 1 1 1 1 0.5\n"
                           "arm_covariance_2 = scaled 2.5\n"
                           "arm_model = uniform_sphere\n"
                           "[experiment]\nn_tr = 123\nn_test = 45\nbase_seed = 17\n"
                           "policies = oracle, meta\nrepresentation_method = both\n"
                           "behavior_policy = greedy\nworkers = 3\n"
                           "[lambda]\nmode = grid\nvalues = 0.1, 0.01, 0.05\nscale_c = 0.125\n"
                           "[solver]\ntol = 1e-7\nmax_iters = 500\n";
  const ExperimentConfig first = parse_config(text);
  const std::string serialized = serialize_config(first);
  const ExperimentConfig second = parse_config(serialized);
  CHECK(first == second);
  CHECK(serialize_config(second) == serialized);
  CHECK(second.environment.arm_covariances[2](3, 3) == 2.5);
  CHECK(second.environment.arm_covariances[0](0, 0) == 4.0);

  ExperimentConfig full = parse_config(kMinimal);
  full.environment.arm_covariances[1](0, 1) = full.environment.arm_covariances[1](1, 0) = 0.1 / 3.0;
  CHECK(parse_config(serialize_config(full)) == full);

  const ExperimentConfig defaults = parse_config(kMinimal);
  CHECK(parse_config(serialize_config(defaults)) == defaults);
}

TEST_CASE("lambda modes") {
  ExperimentConfig c = parse_config(kMinimal);
  CHECK(c.lambdas().size() == 1);
  CHECK(c.lambdas()[0] == doctest::Approx(0.25 * std::sqrt((6.0 + 8.0) / 400.0)));
  c.lambda_mode = LambdaMode::grid;
  const auto grid = c.lambdas();
  REQUIRE(grid.size() == 4);
  CHECK(grid[0] > grid[3]);
  CHECK(grid[0] / grid[3] == doctest::Approx(20.0));
  c.lambda_mode = LambdaMode::fixed;
  c.lambda.values = {0.02};
  CHECK(c.lambdas() == std::vector<double>{0.02});
}

TEST_CASE("csv emission and parse-back") {
  const auto path = temp_path("records.csv");
  emit_csv({}, path);
  CHECK(read_file(path) ==
        "seed,policy,method,regret_n8,regret_n4,regret_n2,regret_n,frob_error,op_error,"
        "sigma_r_w,subspace_gap,estimated_rank,min_eig_final,converged\n");
  CHECK(parse_csv(path).empty());

  std::vector<RunRecord> records(3);
  for (std::size_t i = 0; i < records.size(); ++i) {
    RunRecord& r = records[i];
    r.seed = 10 + i;
    r.policy = i == 0 ? "meta" : i == 1 ? "oracle" : "ambient";
    r.method = i == 0 ? "rank_agnostic" : i == 1 ? "true_b" : "identity";
    r.checkpoint_regret = {0.1 / 3.0, 1.0 / 7.0, 2.5, 1e-17 + i};
    r.frob_error = 0.123456789012345678;
    r.op_error = 1e-300;
    r.sigma_r_w = 2.0 / 3.0;
    r.subspace_gap = 0.0;
    r.estimated_rank = static_cast<long>(i + 1);
    r.min_eig_final = 0.5;
    r.converged = i != 1;
  }
  emit_csv(records, path);
  const std::string text = read_file(path);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(parse_csv(path) == records);
  std::filesystem::remove(path);

  CHECK_THROWS(emit_csv(records, "/nonexistent-dir/x.csv"));
}

TEST_CASE("checkpoint rounds") {
  CHECK(checkpoint_rounds(400) == std::array<int, 4>{50, 100, 200, 400});
  CHECK(checkpoint_rounds(10) == std::array<int, 4>{1, 2, 5, 10});
  CHECK(checkpoint_rounds(0) == std::array<int, 4>{0, 0, 0, 0});
}

TEST_CASE("run_experiment is deterministic and independent of worker count") {
  ExperimentConfig c = small_config();
  c.representation_method = MethodSelection::both;
  const auto a = run_experiment(c, {1, false});
  const auto b = run_experiment(c, {3, false});
  CHECK(to_csv(a.records) == to_csv(b.records));
  // 2 seeds x (2 meta methods + oracle + ambient)
  REQUIRE(a.records.size() == 8);
  for (std::size_t i = 1; i < a.records.size(); ++i) {
    const auto& p = a.records[i - 1];
    const auto& q = a.records[i];
    CHECK(std::tie(p.seed, p.policy, p.method) < std::tie(q.seed, q.policy, q.method));
  }
  for (const RunRecord& r : a.records) {
    for (std::size_t k = 1; k < 4; ++k) CHECK(r.checkpoint_regret[k] >= r.checkpoint_regret[k - 1] - 1e-12);
    CHECK(r.converged);
  }
}

TEST_CASE("seed isolation: the policy set does not change other draws") {
  ExperimentConfig all = small_config();
  ExperimentConfig only_oracle = all;
  only_oracle.policies = {"oracle"};
  const auto full = run_experiment(all);
  const auto partial = run_experiment(only_oracle);
  REQUIRE(partial.records.size() == 2);
  for (const RunRecord& r : partial.records) {
    const auto match = std::find_if(full.records.begin(), full.records.end(), [&](const RunRecord& f) {
      return f.seed == r.seed && f.policy == "oracle";
    });
    REQUIRE(match != full.records.end());
    CHECK(*match == r);
  }
  // Shifting the base seed by one reuses the second replicate unchanged.
  ExperimentConfig shifted = all;
  shifted.base_seed = all.base_seed + 1;
  shifted.n_seeds = 1;
  const auto one = run_experiment(shifted);
  std::vector<RunRecord> tail(full.records.begin() + 3, full.records.end());
  CHECK(one.records == tail);
}

TEST_CASE("noiseless rank-one oracle stops accumulating regret after identification") {
  ExperimentConfig c = parse_config(
      "[environment]\nd = 5\nr = 1\nT = 3\nK = 4\nnoise_sigma = 0\n"
      "[experiment]\nn_tr = 40\nn_test = 40\nn_seeds = 3\npolicies = oracle\n"
      "[lambda]\nmode = fixed\nvalues = 1e-4\n");
  for (const RunRecord& r : run_experiment(c).records) {
    CHECK(r.checkpoint_regret[3] == doctest::Approx(r.checkpoint_regret[0]).epsilon(1e-12));
  }
}

TEST_CASE("grid mode fits every lambda and labels the meta records") {
  ExperimentConfig c = small_config();
  c.n_seeds = 1;
  c.lambda_mode = LambdaMode::grid;
  c.policies = {"meta"};
  const auto result = run_experiment(c, {1, true});
  CHECK(result.records.size() == 4);
  for (const RunRecord& r : result.records) CHECK(r.method.rfind("rank_agnostic@", 0) == 0);
  REQUIRE(result.traces.size() == 4);
  CHECK(result.traces[0].instantaneous.size() == 40);
  CHECK(result.traces[0].min_eig_projected.size() == 40);

  const auto path = temp_path("traces.csv");
  emit_traces_csv(result.traces, path);
  const std::string text = read_file(path);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 4 * 40);
  std::filesystem::remove(path);
}

TEST_CASE("regret table feeds the scaling summary") {
  ExperimentConfig c = small_config();
  c.n_seeds = 2;
  c.policies = {"ambient", "oracle"};
  const auto low = run_experiment(c).records;
  c.environment = EnvironmentSpec::isotropic(16, 2, 6, 5, 0.3);
  const auto high = run_experiment(c).records;
  const RegretTable table = regret_table({{8, low}, {16, high}}, c.n_test);
  CHECK(table.size() == 2 * 2 * 2 * 4);
  const ScalingSummary summary = scaling_summary(table);
  CHECK(summary.policies.size() == 2);
  CHECK(summary.rows.size() == 2 * 2 * 4);

  const auto path = temp_path("summary.csv");
  emit_summary_csv(summary, path);
  const std::string text = read_file(path);
  CHECK(text.rfind("policy,d,n,mean_regret,std_regret,count,slope,d_ratio\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 16);
  std::filesystem::remove(path);
}
