#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "metarep/environment.hpp"
#include "metarep/linalg.hpp"

namespace metarep {

/// Multi-task least squares with a nuclear-norm penalty:
///
///   F(W) = 1/(T n) sum_t ||X_t^T w_t - y_t||^2 + lambda ||W||_*
///
/// X_t is d x n (columns are the chosen arms of task t), y_t has length n.
class MtlProblem {
 public:
  MtlProblem(std::vector<Matrix> designs, std::vector<Vector> rewards, double lambda);

  static MtlProblem from_logs(const std::vector<InteractionLog>& logs, double lambda);

  int dimension() const noexcept { return d_; }
  int num_tasks() const noexcept { return static_cast<int>(designs_.size()); }
  int samples_per_task() const noexcept { return n_; }
  double lambda() const noexcept { return lambda_; }
  MtlProblem with_lambda(double lambda) const;

  const Matrix& design(int t) const { return designs_[static_cast<std::size_t>(t)]; }
  const Vector& rewards(int t) const { return rewards_[static_cast<std::size_t>(t)]; }

  double loss(const Eigen::Ref<const Matrix>& w) const;
  double objective(const Eigen::Ref<const Matrix>& w) const;
  /// Column t equals 2/(T n) X_t (X_t^T w_t - y_t).
  Matrix gradient(const Eigen::Ref<const Matrix>& w) const;
  /// 2/(T n) max_t lambda_max(X_t X_t^T).
  double lipschitz() const noexcept { return lipschitz_; }

 private:
  std::vector<Matrix> designs_;
  std::vector<Vector> rewards_;
  std::vector<Matrix> grams_;    // X_t X_t^T
  std::vector<Vector> moments_;  // X_t y_t
  double lambda_;
  double lipschitz_ = 0.0;
  int d_ = 0;
  int n_ = 0;
};

struct SolverReport {
  Matrix solution;
  std::vector<double> objective_trace;
  int iterations = 0;
  double kkt_residual = 0.0;
  bool converged = false;
};

/// lambda = C * max((T+d)/n, (x + log 2n)/n, sqrt((T+d)/n), sqrt((x + log 2n)/n)).
double lambda_schedule(int T, int d, int n_tr, double confidence_x, double scale_c);

inline double default_confidence_x() { return std::log(1.0 / 0.05); }

/// Accelerated proximal gradient with function-value restart. Starts from
/// warm_start when given, otherwise from zero. Converged means
/// kkt_residual <= tol; the loop also stops (unconverged) once the iterate
/// has not moved beyond rounding for 100 iterations.
SolverReport fit_trace_norm(const MtlProblem& problem, int max_iters, double tol,
                            const std::optional<Matrix>& warm_start = std::nullopt);

/// Stationarity defect of 0 in grad F(W) + lambda d||W||_*: the larger of the
/// on-support mismatch ||G + lambda U V^T||_F (restricted to the row/column
/// spaces of W) and max(0, ||P_perp G Q_perp||_op - lambda).
double kkt_residual(const Eigen::Ref<const Matrix>& w, const MtlProblem& problem);

}  // namespace metarep
