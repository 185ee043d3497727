#pragma once

#include <Eigen/Dense>

namespace metarep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultRelRankTol = 1e-6;

/// Thin SVD with singular values sorted non-increasing. Left singular vectors
/// are sign-normalized: the first nonzero entry of each column is positive.
struct SvdFactors {
  Matrix left_vectors;
  Vector singular_values;
  Matrix right_vectors;

  Matrix reconstruct() const;
};

/// d x r matrix with orthonormal columns. Construction checks B^T B = I.
class Representation {
 public:
  Representation() = default;
  explicit Representation(Matrix columns, double orthonormality_tol = 1e-10);

  /// Identity basis of R^d.
  static Representation identity(Eigen::Index d);
  /// A d x 0 basis, used for the zero-rank fallback.
  static Representation empty(Eigen::Index d);

  const Matrix& columns() const noexcept { return columns_; }
  Eigen::Index ambient_dim() const noexcept { return columns_.rows(); }
  Eigen::Index rank() const noexcept { return columns_.cols(); }

  /// Orthogonal projector B B^T.
  Matrix projector() const { return columns_ * columns_.transpose(); }

  bool operator==(const Representation&) const = default;

 private:
  Matrix columns_;
};

/// Throws InvalidInput if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& m, const char* what);

SvdFactors svd(const Eigen::Ref<const Matrix>& m);

/// Proximal operator of tau * nuclear norm: soft-thresholds the singular values.
Matrix svt(const Eigen::Ref<const Matrix>& m, double tau);

/// Same as svt but also returns the factors of the result (zeroed triplets dropped).
SvdFactors svt_factors(const Eigen::Ref<const Matrix>& m, double tau);

/// Best rank-r approximation in Frobenius norm. Requires 1 <= r <= min(rows, cols).
Matrix truncate_rank(const Eigen::Ref<const Matrix>& m, Eigen::Index r);

/// Number of singular values strictly above rel_rank_tol * sigma_max.
Eigen::Index numerical_rank(const Eigen::Ref<const Matrix>& m,
                            double rel_rank_tol = kDefaultRelRankTol);

/// Left singular vectors whose singular values exceed rel_rank_tol * sigma_max.
/// Throws DegenerateInput for an all-zero matrix.
Representation orthonormal_range(const Eigen::Ref<const Matrix>& m,
                                 double rel_rank_tol = kDefaultRelRankTol);

/// ||B1 B1^T - B2 B2^T||_op.
double subspace_distance(const Representation& b1, const Representation& b2);

double nuclear_norm(const Eigen::Ref<const Matrix>& m);

/// Largest singular value.
double operator_norm(const Eigen::Ref<const Matrix>& m);

/// The k-th largest singular value (1-based); zero if k exceeds min(rows, cols).
double singular_value(const Eigen::Ref<const Matrix>& m, Eigen::Index k);

}  // namespace metarep
