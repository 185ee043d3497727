#pragma once

#include <string_view>

#include "metarep/linalg.hpp"

namespace metarep {

enum class RepresentationMethod { rank_agnostic, rank_r_truncated };

std::string_view to_string(RepresentationMethod method);

struct RepresentationEstimate {
  Representation basis;
  RepresentationMethod method = RepresentationMethod::rank_agnostic;
  Eigen::Index estimated_rank = 0;
  Vector source_singular_values;
};

/// Range of w_hat at its numerical rank; no knowledge of the true rank is used.
RepresentationEstimate extract_rank_agnostic(const Eigen::Ref<const Matrix>& w_hat,
                                             double rel_rank_tol = kDefaultRelRankTol);

/// Top-r left singular vectors of w_hat (the range of its closest rank-r matrix).
/// Throws RankDeficient when w_hat has fewer than r directions above rel_rank_tol.
RepresentationEstimate extract_rank_r(const Eigen::Ref<const Matrix>& w_hat, Eigen::Index r,
                                      double rel_rank_tol = kDefaultRelRankTol);

/// ||B_est alpha_hat - B_true alpha_true||.
double estimation_error(const Representation& b_est, const Eigen::Ref<const Vector>& alpha_hat,
                        const Representation& b_true, const Eigen::Ref<const Vector>& alpha_true);

}  // namespace metarep
