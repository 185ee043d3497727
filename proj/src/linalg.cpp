#include "metarep/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metarep/errors.hpp"

namespace metarep {

Matrix SvdFactors::reconstruct() const {
  return left_vectors * singular_values.asDiagonal() * right_vectors.transpose();
}

Representation::Representation(Matrix columns, double orthonormality_tol)
    : columns_(std::move(columns)) {
  require_finite(columns_, "representation");
  if (columns_.cols() > columns_.rows()) {
    throw InvalidInput("representation has more columns than rows");
  }
  const Matrix gram = columns_.transpose() * columns_;
  const double defect =
      (gram - Matrix::Identity(columns_.cols(), columns_.cols())).norm();
  if (defect > orthonormality_tol) {
    throw InvalidInput("representation columns are not orthonormal (||B^T B - I||_F = " +
                       std::to_string(defect) + ")");
  }
}

Representation Representation::identity(Eigen::Index d) {
  return Representation(Matrix::Identity(d, d));
}

Representation Representation::empty(Eigen::Index d) { return Representation(Matrix(d, 0)); }

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entry");
  }
}

SvdFactors svd(const Eigen::Ref<const Matrix>& m) {
  require_finite(m, "svd");
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdFactors f{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  for (Eigen::Index j = 0; j < f.left_vectors.cols(); ++j) {
    auto u = f.left_vectors.col(j);
    const double scale = u.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (std::abs(u(i)) > 1e-12 * scale) {
        if (u(i) < 0.0) {
          u = -u;
          f.right_vectors.col(j) = -f.right_vectors.col(j);
        }
        break;
      }
    }
  }
  return f;
}

SvdFactors svt_factors(const Eigen::Ref<const Matrix>& m, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) {
    throw InvalidArgument("svt: tau must be a finite non-negative number");
  }
  SvdFactors f = svd(m);
  Eigen::Index keep = 0;
  while (keep < f.singular_values.size() && f.singular_values(keep) > tau) ++keep;
  return {f.left_vectors.leftCols(keep),
          (f.singular_values.head(keep).array() - tau).matrix(),
          f.right_vectors.leftCols(keep)};
}

Matrix svt(const Eigen::Ref<const Matrix>& m, double tau) {
  if (tau == 0.0) {
    require_finite(m, "svt");
    return m;
  }
  const SvdFactors f = svt_factors(m, tau);
  if (f.singular_values.size() == 0) return Matrix::Zero(m.rows(), m.cols());
  return f.reconstruct();
}

Matrix truncate_rank(const Eigen::Ref<const Matrix>& m, Eigen::Index r) {
  if (r < 1 || r > std::min(m.rows(), m.cols())) {
    throw InvalidArgument("truncate_rank: r must lie in [1, min(rows, cols)]");
  }
  const SvdFactors f = svd(m);
  return f.left_vectors.leftCols(r) * f.singular_values.head(r).asDiagonal() *
         f.right_vectors.leftCols(r).transpose();
}

Eigen::Index numerical_rank(const Eigen::Ref<const Matrix>& m, double rel_rank_tol) {
  const SvdFactors f = svd(m);
  if (f.singular_values.size() == 0 || f.singular_values(0) == 0.0) return 0;
  const double cut = rel_rank_tol * f.singular_values(0);
  return (f.singular_values.array() > cut).count();
}

Representation orthonormal_range(const Eigen::Ref<const Matrix>& m, double rel_rank_tol) {
  if (!(rel_rank_tol > 0.0 && rel_rank_tol < 1.0)) {
    throw InvalidArgument("orthonormal_range: rel_rank_tol must lie in (0, 1)");
  }
  const SvdFactors f = svd(m);
  if (f.singular_values.size() == 0 || f.singular_values(0) == 0.0) {
    throw DegenerateInput("orthonormal_range: matrix is zero");
  }
  const double cut = rel_rank_tol * f.singular_values(0);
  const Eigen::Index rank = (f.singular_values.array() > cut).count();
  return Representation(f.left_vectors.leftCols(rank));
}

double subspace_distance(const Representation& b1, const Representation& b2) {
  if (b1.ambient_dim() != b2.ambient_dim()) {
    throw InvalidArgument("subspace_distance: row counts differ");
  }
  const Matrix diff = b1.projector() - b2.projector();
  if (diff.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(diff, Eigen::EigenvaluesOnly);
  const double d = eig.eigenvalues().cwiseAbs().maxCoeff();
  return std::min(d, 1.0);
}

double nuclear_norm(const Eigen::Ref<const Matrix>& m) {
  require_finite(m, "nuclear_norm");
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues().sum();
}

double operator_norm(const Eigen::Ref<const Matrix>& m) { return singular_value(m, 1); }

double singular_value(const Eigen::Ref<const Matrix>& m, Eigen::Index k) {
  require_finite(m, "singular_value");
  if (k < 1) throw InvalidArgument("singular_value: k is 1-based");
  if (k > std::min(m.rows(), m.cols())) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(k - 1);
}

}  // namespace metarep
