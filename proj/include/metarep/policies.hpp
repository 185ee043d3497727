#pragma once

#include <cstddef>
#include <vector>

#include "metarep/environment.hpp"
#include "metarep/linalg.hpp"
#include "metarep/representation.hpp"

namespace metarep {

/// Least-squares state of a greedy policy acting through a fixed basis B.
/// Accumulates gram = sum (B^T x)(B^T x)^T and moment = sum (B^T x) y.
class PolicyState {
 public:
  explicit PolicyState(Representation basis);

  void observe(const Eigen::Ref<const Vector>& arm, double reward);

  const Representation& basis() const noexcept { return basis_; }
  const Matrix& gram() const noexcept { return gram_; }
  const Vector& moment() const noexcept { return moment_; }
  std::size_t round() const noexcept { return round_; }

 private:
  Representation basis_;
  Matrix gram_;
  Vector moment_;
  std::size_t round_ = 0;
};

/// Minimum-norm solution of gram * alpha = moment. Eigenvalues at or below
/// 1e-10 * max(1, lambda_max) are treated as zero.
Vector estimate_alpha(const PolicyState& state);

/// Index of the arm maximizing <x, direction>; ties go to the lowest index.
std::size_t select_arm(const DecisionSet& decision_set, const Eigen::Ref<const Vector>& direction);

struct RegretTrace {
  std::vector<double> instantaneous;
  std::vector<double> cumulative;

  void push(double gap) {
    instantaneous.push_back(gap);
    cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + gap);
  }
  std::size_t size() const noexcept { return instantaneous.size(); }
};

/// Regret of playing `chosen` in `set` against the true parameter.
double instantaneous_regret(const DecisionSet& set, std::size_t chosen,
                            const Eigen::Ref<const Vector>& true_parameter);

struct PolicyRun {
  InteractionLog log;
  RegretTrace regret;
  /// ||B alpha_hat_n - w|| for the estimate used to choose the arm of round n.
  std::vector<double> estimation_error;
  PolicyState final_state;
};

/// Greedy policy through `basis`: uniform random first round, then argmax of
/// <x, B alpha_hat> with alpha_hat refit on all past rounds.
PolicyRun run_greedy(TaskEnvironment& env, const Representation& basis, std::size_t n_rounds,
                     Rng& rng);

/// Meta-represented greedy policy. A zero-rank estimate falls back to the
/// ambient policy and logs a warning.
PolicyRun run_meta_greedy(TaskEnvironment& env, const RepresentationEstimate& representation,
                          std::size_t n_rounds, Rng& rng);

PolicyRun run_oracle_greedy(TaskEnvironment& env, const Representation& true_b,
                            std::size_t n_rounds, Rng& rng);

PolicyRun run_ambient_greedy(TaskEnvironment& env, std::size_t n_rounds, Rng& rng);

/// Uniform random recorder for the training phase.
InteractionLog run_behavior_uniform(TaskEnvironment& env, std::size_t n_rounds, Rng& rng);

}  // namespace metarep
