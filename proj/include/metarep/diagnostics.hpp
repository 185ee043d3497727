#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "metarep/linalg.hpp"
#include "metarep/policies.hpp"

namespace metarep {

struct DiagnosticsReport {
  double frob_error = 0.0;   // ||W_hat - W||_F
  double op_error = 0.0;     // ||W_hat - W||_op
  double sigma_r_w = 0.0;    // sigma_r(W)
  double subspace_gap = 0.0; // ||P_hat_{<=r} - P||_op
  std::vector<double> min_eig_projected_trace;
  Eigen::Index estimated_rank = 0;
  std::vector<double> estimation_error_trace;
};

/// Smallest eigenvalue of B^T ((1/n) sum x x^T) B, clamped at zero.
double min_eig_projected(const Representation& basis, const std::vector<Vector>& arms);

struct PerturbationCheck {
  double lhs = 0.0;  // subspace distance of the rank-r ranges
  double rhs = 0.0;  // ||W_hat - W||_op / sigma_r(W)
  bool holds = false;
};

/// Compares the top-r left subspaces of w_hat and w_true against the
/// Wedin-type bound ||W_hat - W||_op / sigma_r(W). Throws DegenerateInput when
/// sigma_r(w_true) = 0.
PerturbationCheck perturbation_check(const Eigen::Ref<const Matrix>& w_hat,
                                     const Eigen::Ref<const Matrix>& w_true, Eigen::Index r);

double transfer_regret(const RegretTrace& trace);

struct RegretKey {
  std::string policy;
  int d = 0;
  int n = 0;
  std::uint64_t seed = 0;

  auto operator<=>(const RegretKey&) const = default;
};

using RegretTable = std::map<RegretKey, double>;

struct ScalingRow {
  std::string policy;
  int d = 0;
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over seeds
  std::size_t count = 0;
};

struct PolicyScaling {
  std::string policy;
  std::map<int, double> slope_by_d;  // least-squares slope of log(mean regret) vs log N
  double d_ratio = 0.0;              // mean at the largest d over mean at the smallest d, largest N
};

struct ScalingSummary {
  std::vector<ScalingRow> rows;
  std::vector<PolicyScaling> policies;
};

/// Requires at least two N values and two d values per policy.
ScalingSummary scaling_summary(const RegretTable& regrets);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace metarep
