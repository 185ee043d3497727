#include "metarep/diagnostics.hpp"

#include <cmath>
#include <set>

#include "metarep/errors.hpp"

namespace metarep {

double min_eig_projected(const Representation& basis, const std::vector<Vector>& arms) {
  if (arms.empty()) throw InvalidArgument("min_eig_projected: need at least one arm");
  const Eigen::Index r = basis.rank();
  if (r == 0) return 0.0;
  Matrix gram = Matrix::Zero(r, r);
  for (const Vector& x : arms) {
    if (x.size() != basis.ambient_dim()) throw InvalidArgument("min_eig_projected: arm dimension");
    const Vector p = basis.columns().transpose() * x;
    gram.noalias() += p * p.transpose();
  }
  gram /= static_cast<double>(arms.size());
  const double smallest =
      Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return std::max(smallest, 0.0);
}

PerturbationCheck perturbation_check(const Eigen::Ref<const Matrix>& w_hat,
                                     const Eigen::Ref<const Matrix>& w_true, Eigen::Index r) {
  if (w_hat.rows() != w_true.rows() || w_hat.cols() != w_true.cols()) {
    throw InvalidArgument("perturbation_check: shape mismatch");
  }
  if (r < 1 || r > std::min(w_true.rows(), w_true.cols())) {
    throw InvalidArgument("perturbation_check: r out of range");
  }
  const SvdFactors truth = svd(w_true);
  const double sigma_r = truth.singular_values(r - 1);
  if (sigma_r == 0.0) throw DegenerateInput("perturbation_check: sigma_r(W) is zero");
  const SvdFactors est = svd(w_hat);
  PerturbationCheck out;
  out.lhs = subspace_distance(Representation(est.left_vectors.leftCols(r)),
                              Representation(truth.left_vectors.leftCols(r)));
  out.rhs = operator_norm(w_hat - w_true) / sigma_r;
  out.holds = out.lhs <= out.rhs + 1e-9;
  return out;
}

double transfer_regret(const RegretTrace& trace) {
  return trace.cumulative.empty() ? 0.0 : trace.cumulative.back();
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("log_log_slope: need at least two paired points");
  }
  const auto n = static_cast<Eigen::Index>(x.size());
  Vector lx(n), ly(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) {
      throw InvalidArgument("log_log_slope: values must be positive");
    }
    lx(i) = std::log(x[k]);
    ly(i) = std::log(y[k]);
  }
  const Vector cx = lx.array() - lx.mean();
  const double denom = cx.squaredNorm();
  if (denom == 0.0) throw InvalidArgument("log_log_slope: x values are all equal");
  return cx.dot(ly.array().matrix() - Vector::Constant(n, ly.mean())) / denom;
}

ScalingSummary scaling_summary(const RegretTable& regrets) {
  // (policy, d, n) -> values over seeds
  std::map<std::tuple<std::string, int, int>, std::vector<double>> groups;
  for (const auto& [key, value] : regrets) {
    groups[{key.policy, key.d, key.n}].push_back(value);
  }

  ScalingSummary summary;
  std::map<std::string, std::map<int, std::map<int, double>>> means;  // policy -> d -> n -> mean
  for (const auto& [key, values] : groups) {
    const auto& [policy, d, n] = key;
    ScalingRow row{policy, d, n, 0.0, 0.0, values.size()};
    for (double v : values) row.mean += v;
    row.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - row.mean) * (v - row.mean);
      row.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    means[policy][d][n] = row.mean;
    summary.rows.push_back(row);
  }

  for (const auto& [policy, by_d] : means) {
    if (by_d.size() < 2) {
      throw InvalidArgument("scaling_summary: policy '" + policy + "' needs at least two values of d");
    }
    PolicyScaling scaling{policy, {}, 0.0};
    for (const auto& [d, by_n] : by_d) {
      if (by_n.size() < 2) {
        throw InvalidArgument("scaling_summary: policy '" + policy +
                              "' needs at least two values of N at d=" + std::to_string(d));
      }
      std::vector<double> xs, ys;
      for (const auto& [n, mean] : by_n) {
        xs.push_back(n);
        ys.push_back(mean);
      }
      // Zero regret (an all-optimal run) has no logarithm; report the slope as NaN.
      bool positive = true;
      for (double y : ys) positive = positive && y > 0.0;
      scaling.slope_by_d[d] = positive ? log_log_slope(xs, ys) : std::nan("");
    }
    const auto& lo = by_d.begin()->second;
    const auto& hi = by_d.rbegin()->second;
    const int n_common = std::min(lo.rbegin()->first, hi.rbegin()->first);
    const auto lo_it = lo.find(n_common);
    const auto hi_it = hi.find(n_common);
    scaling.d_ratio = (lo_it != lo.end() && hi_it != hi.end() && lo_it->second > 0.0)
                          ? hi_it->second / lo_it->second
                          : std::nan("");
    summary.policies.push_back(std::move(scaling));
  }
  return summary;
}

}  // namespace metarep
