#include "metarep/mtl_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "metarep/errors.hpp"

namespace metarep {

namespace {

// Singular values at or below this fraction of sigma_max are treated as zero
// when splitting W into its support and the orthogonal complement.
constexpr double kSupportTol = 1e-12;

constexpr double kStallRelChange = 4.0 * std::numeric_limits<double>::epsilon();
constexpr int kStallIterations = 100;

double kkt_from_factors(const SvdFactors& f, const Matrix& grad, double lambda) {
  const double smax = f.singular_values.size() ? f.singular_values(0) : 0.0;
  Eigen::Index k = 0;
  while (k < f.singular_values.size() && f.singular_values(k) > kSupportTol * smax &&
         f.singular_values(k) > 0.0) {
    ++k;
  }
  const Matrix u = f.left_vectors.leftCols(k);
  const Matrix v = f.right_vectors.leftCols(k);
  const Matrix p_perp = Matrix::Identity(grad.rows(), grad.rows()) - u * u.transpose();
  const Matrix q_perp = Matrix::Identity(grad.cols(), grad.cols()) - v * v.transpose();

  const Matrix off = p_perp * grad * q_perp;
  const Matrix on = grad + lambda * u * v.transpose() - off;
  const double off_defect = std::max(0.0, (off.size() ? operator_norm(off) : 0.0) - lambda);
  return std::max(on.norm(), off_defect);
}

}  // namespace

MtlProblem::MtlProblem(std::vector<Matrix> designs, std::vector<Vector> rewards, double lambda)
    : designs_(std::move(designs)), rewards_(std::move(rewards)), lambda_(lambda) {
  if (designs_.empty()) throw InvalidInput("MtlProblem: no tasks");
  if (designs_.size() != rewards_.size()) {
    throw InvalidInput("MtlProblem: designs and rewards differ in task count");
  }
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
    throw InvalidInput("MtlProblem: lambda must be finite and non-negative");
  }
  d_ = static_cast<int>(designs_.front().rows());
  n_ = static_cast<int>(designs_.front().cols());
  if (d_ < 1 || n_ < 1) throw InvalidInput("MtlProblem: empty design");
  const double scale = 2.0 / (static_cast<double>(designs_.size()) * n_);
  for (std::size_t t = 0; t < designs_.size(); ++t) {
    const Matrix& x = designs_[t];
    if (x.rows() != d_ || x.cols() != n_ || rewards_[t].size() != n_) {
      throw InvalidInput("MtlProblem: task " + std::to_string(t) + " has inconsistent dimensions");
    }
    require_finite(x, "MtlProblem design");
    require_finite(rewards_[t], "MtlProblem rewards");
    Matrix gram = x * x.transpose();
    const double top = Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .maxCoeff();
    lipschitz_ = std::max(lipschitz_, scale * top);
    moments_.push_back(x * rewards_[t]);
    grams_.push_back(std::move(gram));
  }
}

MtlProblem MtlProblem::from_logs(const std::vector<InteractionLog>& logs, double lambda) {
  std::vector<Matrix> designs;
  std::vector<Vector> rewards;
  designs.reserve(logs.size());
  rewards.reserve(logs.size());
  for (const InteractionLog& log : logs) {
    designs.push_back(log.design_matrix());
    rewards.push_back(log.rewards());
  }
  return MtlProblem(std::move(designs), std::move(rewards), lambda);
}

MtlProblem MtlProblem::with_lambda(double lambda) const {
  MtlProblem copy = *this;
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("MtlProblem: lambda must be finite and non-negative");
  }
  copy.lambda_ = lambda;
  return copy;
}

double MtlProblem::loss(const Eigen::Ref<const Matrix>& w) const {
  if (w.rows() != d_ || w.cols() != num_tasks()) throw InvalidArgument("loss: W must be d x T");
  double total = 0.0;
  for (int t = 0; t < num_tasks(); ++t) {
    total += (design(t).transpose() * w.col(t) - rewards(t)).squaredNorm();
  }
  return total / (static_cast<double>(num_tasks()) * n_);
}

double MtlProblem::objective(const Eigen::Ref<const Matrix>& w) const {
  return loss(w) + lambda_ * nuclear_norm(w);
}

Matrix MtlProblem::gradient(const Eigen::Ref<const Matrix>& w) const {
  if (w.rows() != d_ || w.cols() != num_tasks()) {
    throw InvalidArgument("gradient: W must be d x T");
  }
  const double scale = 2.0 / (static_cast<double>(num_tasks()) * n_);
  Matrix g(d_, num_tasks());
  for (int t = 0; t < num_tasks(); ++t) {
    const auto ts = static_cast<std::size_t>(t);
    g.col(t) = scale * (grams_[ts] * w.col(t) - moments_[ts]);
  }
  return g;
}

double lambda_schedule(int T, int d, int n_tr, double confidence_x, double scale_c) {
  if (T < 1 || d < 1 || n_tr < 1) throw InvalidArgument("lambda_schedule: counts must be positive");
  if (!(scale_c > 0.0) || !std::isfinite(scale_c)) {
    throw InvalidArgument("lambda_schedule: scale_c must be positive");
  }
  const double n = n_tr;
  const double dims = (static_cast<double>(T) + d) / n;
  const double conf = (confidence_x + std::log(2.0 * n)) / n;
  const double value = std::max({dims, conf, std::sqrt(dims), std::sqrt(std::max(conf, 0.0))});
  return scale_c * value;
}

SolverReport fit_trace_norm(const MtlProblem& problem, int max_iters, double tol,
                            const std::optional<Matrix>& warm_start) {
  if (!(tol > 0.0)) throw InvalidArgument("fit_trace_norm: tol must be positive");
  if (max_iters < 1) throw InvalidArgument("fit_trace_norm: max_iters must be positive");
  const int d = problem.dimension();
  const int T = problem.num_tasks();
  const double lambda = problem.lambda();

  SolverReport report;
  Matrix w = warm_start ? *warm_start : Matrix::Zero(d, T);
  if (w.rows() != d || w.cols() != T) throw InvalidArgument("fit_trace_norm: bad warm start shape");

  const double lip = problem.lipschitz();
  if (lip == 0.0) {
    // All designs are zero: the loss is constant and W = 0 is optimal.
    report.solution = Matrix::Zero(d, T);
    report.objective_trace.push_back(problem.objective(report.solution));
    report.kkt_residual = kkt_residual(report.solution, problem);
    report.converged = true;
    return report;
  }
  const double step = 1.0 / lip;

  double f_prev = problem.objective(w);
  if (!std::isfinite(f_prev)) throw SolverDiverged("fit_trace_norm: non-finite initial objective");
  report.objective_trace.push_back(f_prev);

  Matrix z = w;
  double momentum = 1.0;
  int stalled = 0;
  for (int it = 1; it <= max_iters; ++it) {
    SvdFactors factors = svt_factors(z - step * problem.gradient(z), lambda * step);
    Matrix w_next = factors.singular_values.size() ? factors.reconstruct() : Matrix::Zero(d, T);
    double f_next = problem.objective(w_next);

    if (!(f_next <= f_prev)) {
      // Restart: plain proximal gradient step from the last iterate, which
      // cannot increase the objective.
      momentum = 1.0;
      factors = svt_factors(w - step * problem.gradient(w), lambda * step);
      w_next = factors.singular_values.size() ? factors.reconstruct() : Matrix::Zero(d, T);
      f_next = problem.objective(w_next);
      if (f_next > f_prev + kStallRelChange * std::abs(f_prev)) {
        // A proximal gradient step cannot increase F beyond rounding; keep the old point.
        w_next = w;
        f_next = f_prev;
        factors = svd(w);
      }
    }
    if (!std::isfinite(f_next)) {
      throw SolverDiverged("fit_trace_norm: objective became non-finite at iteration " +
                           std::to_string(it));
    }

    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    z = w_next + ((momentum - 1.0) / next_momentum) * (w_next - w);
    momentum = next_momentum;

    const double moved = (w_next - w).norm();
    stalled = moved <= kStallRelChange * (1.0 + w.norm()) ? stalled + 1 : 0;
    w = std::move(w_next);
    f_prev = f_next;
    report.objective_trace.push_back(f_next);
    report.iterations = it;

    report.kkt_residual = kkt_from_factors(factors, problem.gradient(w), lambda);
    if (report.kkt_residual <= tol) {
      report.converged = true;
      break;
    }
    // The iterate no longer moves beyond rounding; report as not converged.
    if (stalled >= kStallIterations) break;
  }
  report.solution = std::move(w);
  return report;
}

double kkt_residual(const Eigen::Ref<const Matrix>& w, const MtlProblem& problem) {
  if (w.rows() != problem.dimension() || w.cols() != problem.num_tasks()) {
    throw InvalidArgument("kkt_residual: W must be d x T");
  }
  return kkt_from_factors(svd(w), problem.gradient(w), problem.lambda());
}

}  // namespace metarep
