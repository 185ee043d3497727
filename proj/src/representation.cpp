#include "metarep/representation.hpp"

#include <string>

#include "metarep/errors.hpp"

namespace metarep {

std::string_view to_string(RepresentationMethod method) {
  switch (method) {
    case RepresentationMethod::rank_agnostic:
      return "rank_agnostic";
    case RepresentationMethod::rank_r_truncated:
      return "rank_r";
  }
  return "unknown";
}

RepresentationEstimate extract_rank_agnostic(const Eigen::Ref<const Matrix>& w_hat,
                                             double rel_rank_tol) {
  RepresentationEstimate est;
  est.basis = orthonormal_range(w_hat, rel_rank_tol);
  est.method = RepresentationMethod::rank_agnostic;
  est.estimated_rank = est.basis.rank();
  est.source_singular_values = svd(w_hat).singular_values;
  return est;
}

RepresentationEstimate extract_rank_r(const Eigen::Ref<const Matrix>& w_hat, Eigen::Index r,
                                      double rel_rank_tol) {
  if (r < 1 || r > std::min(w_hat.rows(), w_hat.cols())) {
    throw InvalidArgument("extract_rank_r: r must lie in [1, min(rows, cols)]");
  }
  const SvdFactors f = svd(w_hat);
  const double smax = f.singular_values(0);
  if (smax == 0.0 || f.singular_values(r - 1) <= rel_rank_tol * smax) {
    throw RankDeficient("extract_rank_r: matrix has fewer than " + std::to_string(r) +
                        " independent directions");
  }
  RepresentationEstimate est;
  est.basis = Representation(f.left_vectors.leftCols(r));
  est.method = RepresentationMethod::rank_r_truncated;
  est.estimated_rank = r;
  est.source_singular_values = f.singular_values;
  return est;
}

double estimation_error(const Representation& b_est, const Eigen::Ref<const Vector>& alpha_hat,
                        const Representation& b_true, const Eigen::Ref<const Vector>& alpha_true) {
  if (b_est.ambient_dim() != b_true.ambient_dim() || alpha_hat.size() != b_est.rank() ||
      alpha_true.size() != b_true.rank()) {
    throw InvalidArgument("estimation_error: dimension mismatch");
  }
  return (b_est.columns() * alpha_hat - b_true.columns() * alpha_true).norm();
}

}  // namespace metarep
