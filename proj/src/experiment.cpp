#include "metarep/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "metarep/errors.hpp"
#include "metarep/mtl_estimator.hpp"
#include "metarep/policies.hpp"
#include "metarep/representation.hpp"

namespace metarep {

namespace {

// Stream tags. Each replicate seed owns all of these; the test-phase streams
// are shared by every policy so regret comparisons are paired.
enum StreamTag : std::uint64_t {
  kTaskStream = 1,
  kTrainDecisions = 2,
  kTrainNoise = 3,
  kTrainChoices = 4,
  kTestDecisions = 5,
  kTestNoise = 6,
  kTestChoices = 7,
};

struct PolicyOutcome {
  std::string policy;
  std::string method;
  PolicyRun run;
};

std::vector<InteractionLog> record_training(const ExperimentConfig& config, const TaskSet& tasks,
                                            std::uint64_t seed) {
  const EnvironmentSpec& spec = config.environment;
  std::vector<InteractionLog> logs;
  logs.reserve(static_cast<std::size_t>(spec.T));
  for (int t = 0; t < spec.T; ++t) {
    const auto idx = static_cast<std::uint64_t>(t);
    TaskEnvironment env(spec, tasks.task_matrix.col(t), make_stream(seed, kTrainDecisions, idx),
                        make_stream(seed, kTrainNoise, idx));
    Rng choices = make_stream(seed, kTrainChoices, idx);
    const auto rounds = static_cast<std::size_t>(config.n_tr);
    InteractionLog log = config.behavior_policy == BehaviorPolicy::uniform
                             ? run_behavior_uniform(env, rounds, choices)
                             : run_ambient_greedy(env, rounds, choices).log;
    log.task_index = static_cast<std::size_t>(t);
    logs.push_back(std::move(log));
  }
  return logs;
}

DiagnosticsReport fit_diagnostics(const TaskSet& tasks, const Matrix& w_hat, int r,
                                  double rel_rank_tol) {
  DiagnosticsReport report;
  const Matrix diff = w_hat - tasks.task_matrix;
  report.frob_error = diff.norm();
  report.op_error = operator_norm(diff);
  report.sigma_r_w = singular_value(tasks.task_matrix, r);
  const SvdFactors est = svd(w_hat);
  report.subspace_gap =
      subspace_distance(Representation(est.left_vectors.leftCols(r)), tasks.representation);
  report.estimated_rank = numerical_rank(w_hat, rel_rank_tol);
  return report;
}

RepresentationEstimate estimate_representation(const Matrix& w_hat, RepresentationMethod method,
                                               int r, double rel_rank_tol, std::uint64_t seed) {
  try {
    return method == RepresentationMethod::rank_agnostic ? extract_rank_agnostic(w_hat, rel_rank_tol)
                                                         : extract_rank_r(w_hat, r, rel_rank_tol);
  } catch (const DegenerateInput&) {
    spdlog::warn("seed {}: trace-norm estimate is zero, using a rank-0 representation", seed);
  } catch (const RankDeficient&) {
    spdlog::warn("seed {}: trace-norm estimate has rank below r, using its numerical range", seed);
    if (!w_hat.isZero(0.0)) {
      RepresentationEstimate est = extract_rank_agnostic(w_hat, rel_rank_tol);
      est.method = method;
      return est;
    }
  }
  RepresentationEstimate est;
  est.basis = Representation::empty(w_hat.rows());
  est.method = method;
  est.estimated_rank = 0;
  return est;
}

std::vector<double> min_eig_trace(const PolicyRun& run) {
  const Representation& basis = run.final_state.basis();
  const Eigen::Index r = basis.rank();
  std::vector<double> out;
  out.reserve(run.log.records.size());
  Matrix gram = Matrix::Zero(r, r);
  for (std::size_t n = 0; n < run.log.records.size(); ++n) {
    const Vector p = basis.columns().transpose() * run.log.records[n].chosen_arm();
    gram.noalias() += p * p.transpose();
    if (r == 0) {
      out.push_back(0.0);
      continue;
    }
    const double smallest = Eigen::SelfAdjointEigenSolver<Matrix>(gram / static_cast<double>(n + 1),
                                                                  Eigen::EigenvaluesOnly)
                                .eigenvalues()(0);
    out.push_back(std::max(smallest, 0.0));
  }
  return out;
}

RunRecord make_record(std::uint64_t seed, const PolicyOutcome& outcome,
                      const DiagnosticsReport& diagnostics, bool converged, int n_test) {
  RunRecord rec;
  rec.seed = seed;
  rec.policy = outcome.policy;
  rec.method = outcome.method;
  const auto rounds = checkpoint_rounds(n_test);
  const auto& cumulative = outcome.run.regret.cumulative;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    rec.checkpoint_regret[i] =
        rounds[i] == 0 ? 0.0 : cumulative[static_cast<std::size_t>(rounds[i] - 1)];
  }
  rec.frob_error = diagnostics.frob_error;
  rec.op_error = diagnostics.op_error;
  rec.sigma_r_w = diagnostics.sigma_r_w;
  rec.subspace_gap = diagnostics.subspace_gap;
  rec.estimated_rank = static_cast<long>(outcome.run.final_state.basis().rank());
  std::vector<Vector> arms;
  arms.reserve(outcome.run.log.records.size());
  for (const auto& record : outcome.run.log.records) arms.push_back(record.chosen_arm());
  rec.min_eig_final = arms.empty() ? 0.0 : min_eig_projected(outcome.run.final_state.basis(), arms);
  rec.converged = converged;
  return rec;
}

struct ReplicateOutput {
  std::vector<RunRecord> records;
  std::vector<TraceRecord> traces;
};

ReplicateOutput run_replicate(const ExperimentConfig& config, std::uint64_t seed, bool keep_traces) {
  const EnvironmentSpec& spec = config.environment;
  Rng task_stream = make_stream(seed, kTaskStream);
  const TaskSet tasks = sample_task_set(spec, task_stream);

  MtlProblem problem = [&] {
    const std::vector<InteractionLog> logs = record_training(config, tasks, seed);
    return MtlProblem::from_logs(logs, config.lambdas().front());
  }();

  const auto test_env = [&] {
    return TaskEnvironment(spec, tasks.test_parameter(), make_stream(seed, kTestDecisions),
                           make_stream(seed, kTestNoise));
  };
  const auto n_rounds = static_cast<std::size_t>(config.n_test);
  const auto wants = [&](const char* name) {
    return std::find(config.policies.begin(), config.policies.end(), name) != config.policies.end();
  };

  std::vector<RepresentationMethod> methods;
  if (config.representation_method != MethodSelection::rank_r) {
    methods.push_back(RepresentationMethod::rank_agnostic);
  }
  if (config.representation_method != MethodSelection::rank_agnostic) {
    methods.push_back(RepresentationMethod::rank_r_truncated);
  }

  std::vector<std::pair<PolicyOutcome, std::pair<DiagnosticsReport, bool>>> outcomes;
  const std::vector<double> lambdas = config.lambdas();
  std::optional<Matrix> warm;
  DiagnosticsReport first_diagnostics;
  bool first_converged = false;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    problem = problem.with_lambda(lambdas[li]);
    SolverReport fit = fit_trace_norm(problem, config.max_iters, config.solver_tol, warm);
    if (!fit.converged) {
      spdlog::warn("seed {}: trace-norm solver stopped after {} iterations (kkt residual {:.3g})",
                   seed, fit.iterations, fit.kkt_residual);
    }
    const DiagnosticsReport diagnostics =
        fit_diagnostics(tasks, fit.solution, spec.r, config.rel_rank_tol);
    if (li == 0) {
      first_diagnostics = diagnostics;
      first_converged = fit.converged;
    }
    if (wants("meta")) {
      for (RepresentationMethod method : methods) {
        const RepresentationEstimate est =
            estimate_representation(fit.solution, method, spec.r, config.rel_rank_tol, seed);
        TaskEnvironment env = test_env();
        Rng choices = make_stream(seed, kTestChoices);
        std::string label(to_string(method));
        if (config.lambda_mode == LambdaMode::grid) {
          std::ostringstream os;
          os << label << '@' << std::setprecision(6) << lambdas[li];
          label = os.str();
        }
        outcomes.push_back({{"meta", label, run_meta_greedy(env, est, n_rounds, choices)},
                            {diagnostics, fit.converged}});
      }
    }
    warm = std::move(fit.solution);
  }
  if (wants("oracle")) {
    TaskEnvironment env = test_env();
    Rng choices = make_stream(seed, kTestChoices);
    outcomes.push_back({{"oracle", "true_b",
                         run_oracle_greedy(env, tasks.representation, n_rounds, choices)},
                        {first_diagnostics, first_converged}});
  }
  if (wants("ambient")) {
    TaskEnvironment env = test_env();
    Rng choices = make_stream(seed, kTestChoices);
    outcomes.push_back({{"ambient", "identity", run_ambient_greedy(env, n_rounds, choices)},
                        {first_diagnostics, first_converged}});
  }

  ReplicateOutput out;
  for (const auto& [outcome, diag] : outcomes) {
    out.records.push_back(make_record(seed, outcome, diag.first, diag.second, config.n_test));
    if (keep_traces) {
      out.traces.push_back({seed, outcome.policy, outcome.method, outcome.run.regret.instantaneous,
                            outcome.run.regret.cumulative, outcome.run.estimation_error,
                            min_eig_trace(outcome.run)});
    }
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    if (s == "nan") return std::nan("");
    throw std::runtime_error("cannot parse '" + s + "' as a number");
  }
  return v;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace

std::array<int, 4> checkpoint_rounds(int n_test) {
  std::array<int, 4> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = n_test / kCheckpointDivisors[i];
  return out;
}

ReplicateFit fit_replicate(const ExperimentConfig& config, std::uint64_t seed) {
  Rng task_stream = make_stream(seed, kTaskStream);
  ReplicateFit fit;
  fit.tasks = sample_task_set(config.environment, task_stream);
  fit.lambda = config.lambdas().front();
  const MtlProblem problem =
      MtlProblem::from_logs(record_training(config, fit.tasks, seed), fit.lambda);
  fit.report = fit_trace_norm(problem, config.max_iters, config.solver_tol);
  fit.diagnostics =
      fit_diagnostics(fit.tasks, fit.report.solution, config.environment.r, config.rel_rank_tol);
  return fit;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.n_seeds);
  std::vector<ReplicateOutput> outputs(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const std::uint64_t seed = config.base_seed + i;
      try {
        outputs[i] = run_replicate(config, seed, options.keep_traces);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("replicate seed " + std::to_string(config.base_seed + i) + ": " +
                               e.what());
    }
  }

  ExperimentResult result;
  for (auto& out : outputs) {
    std::move(out.records.begin(), out.records.end(), std::back_inserter(result.records));
    std::move(out.traces.begin(), out.traces.end(), std::back_inserter(result.traces));
  }
  const auto order = [](const auto& a, const auto& b) {
    return std::tie(a.seed, a.policy, a.method) < std::tie(b.seed, b.policy, b.method);
  };
  std::stable_sort(result.records.begin(), result.records.end(), order);
  std::stable_sort(result.traces.begin(), result.traces.end(), order);
  return result;
}

std::string to_csv(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) os << (i ? "," : "") << kCsvColumns[i];
  os << "\n";
  for (const RunRecord& r : records) {
    os << r.seed << ',' << r.policy << ',' << r.method;
    for (double v : r.checkpoint_regret) os << ',' << format_double(v);
    os << ',' << format_double(r.frob_error) << ',' << format_double(r.op_error) << ','
       << format_double(r.sigma_r_w) << ',' << format_double(r.subspace_gap) << ','
       << r.estimated_rank << ',' << format_double(r.min_eig_final) << ','
       << (r.converged ? "true" : "false") << "\n";
  }
  return os.str();
}

void emit_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
  write_file(path, to_csv(records));
}

std::vector<RunRecord> parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != kCsvColumns) {
    throw std::runtime_error("'" + path.string() + "' does not start with the run-record header");
  }
  std::vector<RunRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != kCsvColumns.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(kCsvColumns.size()) + " columns");
    }
    try {
      RunRecord r;
      r.seed = std::stoull(cells[0]);
      r.policy = cells[1];
      r.method = cells[2];
      for (std::size_t i = 0; i < 4; ++i) r.checkpoint_regret[i] = parse_double(cells[3 + i]);
      r.frob_error = parse_double(cells[7]);
      r.op_error = parse_double(cells[8]);
      r.sigma_r_w = parse_double(cells[9]);
      r.subspace_gap = parse_double(cells[10]);
      r.estimated_rank = std::stol(cells[11]);
      r.min_eig_final = parse_double(cells[12]);
      if (cells[13] != "true" && cells[13] != "false") throw std::runtime_error("bad converged flag");
      r.converged = cells[13] == "true";
      records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void emit_traces_csv(const std::vector<TraceRecord>& traces, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "seed,policy,method,round,instantaneous,cumulative,estimation_error,min_eig_projected\n";
  for (const TraceRecord& t : traces) {
    for (std::size_t n = 0; n < t.instantaneous.size(); ++n) {
      os << t.seed << ',' << t.policy << ',' << t.method << ',' << (n + 1) << ','
         << format_double(t.instantaneous[n]) << ',' << format_double(t.cumulative[n]) << ','
         << format_double(t.estimation_error[n]) << ',' << format_double(t.min_eig_projected[n])
         << "\n";
    }
  }
  write_file(path, os.str());
}

RegretTable regret_table(const std::vector<std::pair<int, std::vector<RunRecord>>>& runs,
                         int n_test) {
  const auto rounds = checkpoint_rounds(n_test);
  RegretTable table;
  for (const auto& [d, records] : runs) {
    for (const RunRecord& r : records) {
      const std::string policy = r.policy == "meta" ? "meta/" + r.method : r.policy;
      for (std::size_t i = 0; i < rounds.size(); ++i) {
        if (rounds[i] == 0) continue;
        table[{policy, d, rounds[i], r.seed}] = r.checkpoint_regret[i];
      }
    }
  }
  return table;
}

void emit_summary_csv(const ScalingSummary& summary, const std::filesystem::path& path) {
  std::map<std::string, const PolicyScaling*> by_policy;
  for (const auto& p : summary.policies) by_policy[p.policy] = &p;
  std::ostringstream os;
  os << "policy,d,n,mean_regret,std_regret,count,slope,d_ratio\n";
  for (const ScalingRow& row : summary.rows) {
    const PolicyScaling* p = by_policy.at(row.policy);
    os << row.policy << ',' << row.d << ',' << row.n << ',' << format_double(row.mean) << ','
       << format_double(row.stddev) << ',' << row.count << ','
       << format_double(p->slope_by_d.at(row.d)) << ',' << format_double(p->d_ratio) << "\n";
  }
  write_file(path, os.str());
}

}  // namespace metarep
