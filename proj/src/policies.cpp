#include "metarep/policies.hpp"

#include <algorithm>
#include <random>

#include <spdlog/spdlog.h>

#include "metarep/errors.hpp"

namespace metarep {

namespace {

constexpr double kEigenFloor = 1e-10;

std::size_t uniform_index(std::size_t k, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  return pick(rng);
}

}  // namespace

PolicyState::PolicyState(Representation basis)
    : basis_(std::move(basis)),
      gram_(Matrix::Zero(basis_.rank(), basis_.rank())),
      moment_(Vector::Zero(basis_.rank())) {}

void PolicyState::observe(const Eigen::Ref<const Vector>& arm, double reward) {
  if (arm.size() != basis_.ambient_dim()) throw InvalidArgument("observe: arm has wrong dimension");
  const Vector projected = basis_.columns().transpose() * arm;
  gram_.noalias() += projected * projected.transpose();
  moment_ += reward * projected;
  ++round_;
}

Vector estimate_alpha(const PolicyState& state) {
  const Eigen::Index r = state.gram().rows();
  if (r == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(state.gram());
  const Vector& values = eig.eigenvalues();
  const double floor = kEigenFloor * std::max(1.0, values.maxCoeff());
  const Vector coords = eig.eigenvectors().transpose() * state.moment();
  Vector scaled = Vector::Zero(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (values(i) > floor) scaled(i) = coords(i) / values(i);
  }
  return eig.eigenvectors() * scaled;
}

std::size_t select_arm(const DecisionSet& decision_set, const Eigen::Ref<const Vector>& direction) {
  if (decision_set.arms.empty()) throw InvalidArgument("select_arm: empty decision set");
  std::size_t best = 0;
  double best_value = decision_set.arms[0].dot(direction);
  for (std::size_t k = 1; k < decision_set.arms.size(); ++k) {
    const double value = decision_set.arms[k].dot(direction);
    if (value > best_value) {
      best_value = value;
      best = k;
    }
  }
  return best;
}

double instantaneous_regret(const DecisionSet& set, std::size_t chosen,
                            const Eigen::Ref<const Vector>& true_parameter) {
  const std::size_t best = select_arm(set, true_parameter);
  return (set.arms[best] - set.arms[chosen]).dot(true_parameter);
}

PolicyRun run_greedy(TaskEnvironment& env, const Representation& basis, std::size_t n_rounds,
                     Rng& rng) {
  if (basis.ambient_dim() != env.dimension()) {
    throw InvalidArgument("run_greedy: basis rows must equal the environment dimension");
  }
  PolicyRun run{{}, {}, {}, PolicyState(basis)};
  run.log.records.reserve(n_rounds);
  const Vector& truth = env.parameter();
  for (std::size_t n = 0; n < n_rounds; ++n) {
    DecisionSet set = env.next_decision_set();
    Vector direction;
    std::size_t chosen = 0;
    if (n == 0) {
      direction = Vector::Zero(env.dimension());
      chosen = uniform_index(set.size(), rng);
    } else {
      direction = basis.columns() * estimate_alpha(run.final_state);
      chosen = select_arm(set, direction);
    }
    run.estimation_error.push_back((direction - truth).norm());
    const double reward = env.pull(set.arms[chosen]);
    run.regret.push(instantaneous_regret(set, chosen, truth));
    run.final_state.observe(set.arms[chosen], reward);
    run.log.records.push_back({std::move(set), chosen, reward});
  }
  return run;
}

PolicyRun run_meta_greedy(TaskEnvironment& env, const RepresentationEstimate& representation,
                          std::size_t n_rounds, Rng& rng) {
  if (representation.basis.rank() == 0) {
    spdlog::warn("meta greedy: representation estimate has rank 0, falling back to ambient greedy");
    return run_ambient_greedy(env, n_rounds, rng);
  }
  return run_greedy(env, representation.basis, n_rounds, rng);
}

PolicyRun run_oracle_greedy(TaskEnvironment& env, const Representation& true_b,
                            std::size_t n_rounds, Rng& rng) {
  return run_greedy(env, true_b, n_rounds, rng);
}

PolicyRun run_ambient_greedy(TaskEnvironment& env, std::size_t n_rounds, Rng& rng) {
  return run_greedy(env, Representation::identity(env.dimension()), n_rounds, rng);
}

InteractionLog run_behavior_uniform(TaskEnvironment& env, std::size_t n_rounds, Rng& rng) {
  InteractionLog log;
  log.records.reserve(n_rounds);
  for (std::size_t n = 0; n < n_rounds; ++n) {
    DecisionSet set = env.next_decision_set();
    const std::size_t chosen = uniform_index(set.size(), rng);
    const double reward = env.pull(set.arms[chosen]);
    log.records.push_back({std::move(set), chosen, reward});
  }
  return log;
}

}  // namespace metarep
