#include "metarep/environment.hpp"

#include <cmath>
#include <string>

#include "metarep/errors.hpp"

namespace metarep {

namespace {

constexpr double kPsdTolerance = 1e-10;
constexpr double kConditionGuard = 0.05;
constexpr int kMaxTaskDraws = 1000;

Vector standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

Vector uniform_on_sphere(Eigen::Index n, double radius, Rng& rng) {
  Vector z = standard_normal(n, rng);
  double norm = z.norm();
  while (norm == 0.0) {
    z = standard_normal(n, rng);
    norm = z.norm();
  }
  return z * (radius / norm);
}

Matrix psd_square_root(const Matrix& sigma, int k) {
  const std::string which = "arm covariance " + std::to_string(k);
  if (!sigma.allFinite()) throw InvalidSpec(which + " has non-finite entries");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + sigma.norm())) {
    throw InvalidSpec(which + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  if (eig.info() != Eigen::Success) throw InvalidSpec(which + ": eigendecomposition failed");
  const Vector& values = eig.eigenvalues();
  if (values.size() > 0 && values.minCoeff() < -kPsdTolerance) {
    throw InvalidSpec(which + " is not positive semidefinite");
  }
  const Vector roots = values.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

EnvironmentSpec EnvironmentSpec::isotropic(int d, int r, int T, int K, double noise_sigma) {
  EnvironmentSpec spec;
  spec.d = d;
  spec.r = r;
  spec.T = T;
  spec.K = K;
  spec.noise_sigma = noise_sigma;
  spec.arm_covariances.assign(static_cast<std::size_t>(std::max(K, 0)),
                              Matrix::Identity(std::max(d, 0), std::max(d, 0)));
  return spec;
}

void EnvironmentSpec::validate() const {
  if (r < 1) throw InvalidSpec("r must be at least 1");
  if (r >= d) throw InvalidSpec("r must be smaller than d");
  if (T < r) throw InvalidSpec("T must be at least r so that W can have rank r");
  if (K < 2) throw InvalidSpec("K must be at least 2");
  if (static_cast<int>(arm_covariances.size()) != K) {
    throw InvalidSpec("arm_covariances must hold exactly K matrices");
  }
  for (int k = 0; k < K; ++k) {
    const Matrix& s = arm_covariances[static_cast<std::size_t>(k)];
    if (s.rows() != d || s.cols() != d) {
      throw InvalidSpec("arm covariance " + std::to_string(k) + " must be d x d");
    }
    psd_square_root(s, k);
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw InvalidSpec("noise_sigma must be non-negative");
  }
  if (!(task_norm_bound > 0.0) || !std::isfinite(task_norm_bound)) {
    throw InvalidSpec("task_norm_bound must be positive");
  }
  if (!(alpha_scale > 0.0) || !std::isfinite(alpha_scale)) {
    throw InvalidSpec("alpha_scale must be positive");
  }
}

Matrix InteractionLog::design_matrix() const {
  if (records.empty()) return Matrix();
  Matrix x(records.front().chosen_arm().size(), static_cast<Eigen::Index>(records.size()));
  for (std::size_t n = 0; n < records.size(); ++n) {
    x.col(static_cast<Eigen::Index>(n)) = records[n].chosen_arm();
  }
  return x;
}

Vector InteractionLog::rewards() const {
  Vector y(static_cast<Eigen::Index>(records.size()));
  for (std::size_t n = 0; n < records.size(); ++n) {
    y(static_cast<Eigen::Index>(n)) = records[n].reward;
  }
  return y;
}

Representation sample_representation(int d, int r, Rng& rng) {
  if (r < 1 || r >= d) throw InvalidArgument("sample_representation: need 1 <= r < d");
  Matrix g(d, r);
  for (Eigen::Index j = 0; j < r; ++j) g.col(j) = standard_normal(d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, r);
  return Representation(std::move(q));
}

TaskSet sample_task_set(const EnvironmentSpec& spec, Rng& rng) {
  spec.validate();
  TaskSet tasks;
  tasks.representation = sample_representation(spec.d, spec.r, rng);
  const Matrix& b = tasks.representation.columns();

  auto draw_alpha = [&]() {
    Vector alpha = uniform_on_sphere(spec.r, spec.alpha_scale, rng);
    const double norm = (b * alpha).norm();
    if (norm > spec.task_norm_bound) alpha *= spec.task_norm_bound / norm;
    return alpha;
  };

  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxTaskDraws) {
      throw DegenerateInput("sample_task_set: could not draw a well-conditioned task matrix");
    }
    Matrix a(spec.r, spec.T);
    for (int t = 0; t < spec.T; ++t) a.col(t) = draw_alpha();
    const Vector s = Eigen::JacobiSVD<Matrix>(a).singularValues();
    // B is an isometry, so sigma(W) = sigma(A).
    if (s(spec.r - 1) >= kConditionGuard * s(0)) {
      tasks.coefficients = std::move(a);
      break;
    }
  }
  tasks.task_matrix = b * tasks.coefficients;
  tasks.test_alpha = draw_alpha();
  return tasks;
}

ArmSampler::ArmSampler(const EnvironmentSpec& spec) : model_(spec.arm_model), d_(spec.d) {
  roots_.reserve(spec.arm_covariances.size());
  for (std::size_t k = 0; k < spec.arm_covariances.size(); ++k) {
    const Matrix& s = spec.arm_covariances[k];
    if (s.rows() != spec.d || s.cols() != spec.d) {
      throw InvalidSpec("arm covariance " + std::to_string(k) + " must be d x d");
    }
    roots_.push_back(psd_square_root(s, static_cast<int>(k)));
  }
}

DecisionSet ArmSampler::sample(Rng& rng) const {
  DecisionSet set;
  set.arms.reserve(roots_.size());
  for (const Matrix& root : roots_) {
    const Vector z = model_ == ArmModel::gaussian
                         ? standard_normal(d_, rng)
                         : uniform_on_sphere(d_, std::sqrt(static_cast<double>(d_)), rng);
    set.arms.emplace_back(root * z);
  }
  return set;
}

DecisionSet sample_decision_set(const EnvironmentSpec& spec, Rng& rng) {
  return ArmSampler(spec).sample(rng);
}

double reward_draw(const Eigen::Ref<const Vector>& arm, const Eigen::Ref<const Vector>& w,
                   double sigma, Rng& rng) {
  if (arm.size() != w.size()) throw InvalidArgument("reward_draw: dimension mismatch");
  const double mean = arm.dot(w);
  if (sigma == 0.0) return mean;
  std::normal_distribution<double> noise(0.0, sigma);
  return mean + noise(rng);
}

TaskEnvironment::TaskEnvironment(const EnvironmentSpec& spec, Vector parameter,
                                 Rng decision_stream, Rng noise_stream)
    : sampler_(spec),
      parameter_(std::move(parameter)),
      sigma_(spec.noise_sigma),
      decisions_(std::move(decision_stream)),
      noise_(std::move(noise_stream)) {
  if (parameter_.size() != spec.d) throw InvalidArgument("TaskEnvironment: parameter must have length d");
}

}  // namespace metarep
