#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "metarep/linalg.hpp"

namespace metarep {

/// Every stochastic routine takes an explicit stream; there is no global RNG.
using Rng = std::mt19937_64;

/// Stream for (seed, tag, index). Distinct tags/indices give independent streams.
Rng make_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0);

enum class ArmModel { gaussian, uniform_sphere };

struct EnvironmentSpec {
  int d = 0;
  int r = 0;
  int T = 0;
  int K = 0;
  std::vector<Matrix> arm_covariances;  // K symmetric PSD d x d matrices
  double noise_sigma = 0.5;
  double task_norm_bound = 1.0;
  double alpha_scale = 1.0;
  ArmModel arm_model = ArmModel::gaussian;

  /// Spec with Sigma_k = I for every arm.
  static EnvironmentSpec isotropic(int d, int r, int T, int K, double noise_sigma = 0.5);

  /// Throws InvalidSpec naming the violated constraint.
  void validate() const;

  bool operator==(const EnvironmentSpec&) const = default;
};

struct TaskSet {
  Representation representation;  // B, d x r
  Matrix coefficients;             // A_T, r x T
  Vector test_alpha;               // alpha_{T+1}
  Matrix task_matrix;              // W = B A_T

  Vector test_parameter() const { return representation.columns() * test_alpha; }
};

struct DecisionSet {
  std::vector<Vector> arms;

  std::size_t size() const noexcept { return arms.size(); }
};

struct InteractionRecord {
  DecisionSet decision_set;
  std::size_t chosen_index = 0;
  double reward = 0.0;

  const Vector& chosen_arm() const { return decision_set.arms[chosen_index]; }
};

struct InteractionLog {
  std::size_t task_index = 0;
  std::vector<InteractionRecord> records;

  /// d x n matrix whose columns are the chosen arms.
  Matrix design_matrix() const;
  Vector rewards() const;
};

Representation sample_representation(int d, int r, Rng& rng);

TaskSet sample_task_set(const EnvironmentSpec& spec, Rng& rng);

/// Draws x_k = Sigma_k^{1/2} z_k. Holds the precomputed square roots so the
/// per-round cost is K matrix-vector products.
class ArmSampler {
 public:
  explicit ArmSampler(const EnvironmentSpec& spec);

  DecisionSet sample(Rng& rng) const;

 private:
  std::vector<Matrix> roots_;
  ArmModel model_;
  int d_;
};

DecisionSet sample_decision_set(const EnvironmentSpec& spec, Rng& rng);

/// <arm, w> + eta with eta ~ N(0, sigma^2).
double reward_draw(const Eigen::Ref<const Vector>& arm, const Eigen::Ref<const Vector>& w,
                   double sigma, Rng& rng);

/// One bandit task: fixed parameter w, its own decision-set stream and noise stream.
class TaskEnvironment {
 public:
  TaskEnvironment(const EnvironmentSpec& spec, Vector parameter, Rng decision_stream,
                  Rng noise_stream);

  DecisionSet next_decision_set() { return sampler_.sample(decisions_); }
  double pull(const Eigen::Ref<const Vector>& arm) {
    return reward_draw(arm, parameter_, sigma_, noise_);
  }

  const Vector& parameter() const noexcept { return parameter_; }
  int dimension() const noexcept { return static_cast<int>(parameter_.size()); }
  double noise_sigma() const noexcept { return sigma_; }

 private:
  ArmSampler sampler_;
  Vector parameter_;
  double sigma_;
  Rng decisions_;
  Rng noise_;
};

}  // namespace metarep
