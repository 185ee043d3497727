#include "metarep/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "metarep/errors.hpp"
#include "metarep/mtl_estimator.hpp"

namespace metarep {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kKnownKeys{
    {"environment",
     {"d", "r", "T", "K", "noise_sigma", "task_norm_bound", "alpha_scale", "arm_model",
      "arm_covariance"}},
    {"experiment",
     {"n_tr", "n_test", "n_seeds", "base_seed", "behavior_policy", "policies",
      "representation_method", "corollary_check", "output_path", "workers"}},
    {"lambda", {"mode", "scale_c", "confidence_x", "values"}},
    {"solver", {"max_iters", "tol", "rel_rank_tol"}},
};

const std::set<std::string> kPolicyNames{"meta", "oracle", "ambient"};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string token;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!token.empty()) out.push_back(std::move(token));
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  if (!token.empty()) out.push_back(std::move(token));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("key '" + key + "': cannot parse '" + text + "' as a number");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError("key '" + key + "': value must be finite");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + text + "'");
}

Matrix parse_covariance(const std::string& key, const std::string& raw, int d) {
  const std::vector<std::string> tokens = split_list(raw);
  if (tokens.empty()) throw ConfigError("key '" + key + "': empty covariance");
  const std::string& kind = tokens.front();
  std::vector<double> values;
  for (std::size_t i = 1; i < tokens.size(); ++i) values.push_back(parse_number<double>(key, tokens[i]));
  if (kind == "identity" && values.empty()) return Matrix::Identity(d, d);
  if (kind == "scaled" && values.size() == 1) return values[0] * Matrix::Identity(d, d);
  if (kind == "diag" && static_cast<int>(values.size()) == d) {
    return Eigen::Map<const Vector>(values.data(), d).asDiagonal();
  }
  if (kind == "full" && static_cast<int>(values.size()) == d * d) {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), d, d);
  }
  throw ConfigError("key '" + key +
                    "': expected 'identity', 'scaled <s>', 'diag <d values>' or 'full <d*d values>'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string format_covariance(const Matrix& m) {
  const auto d = m.rows();
  if (same_matrix(m, Matrix::Identity(d, d))) return "identity";
  std::ostringstream os;
  if (same_matrix(m, Matrix(m.diagonal().asDiagonal()))) {
    os << "diag";
    for (Eigen::Index i = 0; i < d; ++i) os << ' ' << format_double(m(i, i));
    return os.str();
  }
  os << "full";
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) os << ' ' << format_double(m(i, j));
  }
  return os.str();
}

std::string_view to_string(LambdaMode mode) {
  switch (mode) {
    case LambdaMode::schedule: return "schedule";
    case LambdaMode::fixed: return "fixed";
    case LambdaMode::grid: return "grid";
  }
  return "";
}

std::string_view to_string(MethodSelection m) {
  switch (m) {
    case MethodSelection::rank_agnostic: return "rank_agnostic";
    case MethodSelection::rank_r: return "rank_r";
    case MethodSelection::both: return "both";
  }
  return "";
}

std::string_view to_string(BehaviorPolicy b) {
  return b == BehaviorPolicy::uniform ? "uniform" : "greedy";
}

std::string_view to_string(ArmModel m) {
  return m == ArmModel::gaussian ? "gaussian" : "uniform_sphere";
}

}  // namespace

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  const EnvironmentSpec& e = environment;
  const EnvironmentSpec& f = o.environment;
  if (e.d != f.d || e.r != f.r || e.T != f.T || e.K != f.K || e.noise_sigma != f.noise_sigma ||
      e.task_norm_bound != f.task_norm_bound || e.alpha_scale != f.alpha_scale ||
      e.arm_model != f.arm_model || e.arm_covariances.size() != f.arm_covariances.size()) {
    return false;
  }
  for (std::size_t k = 0; k < e.arm_covariances.size(); ++k) {
    if (!same_matrix(e.arm_covariances[k], f.arm_covariances[k])) return false;
  }
  return n_tr == o.n_tr && n_test == o.n_test && n_seeds == o.n_seeds &&
         base_seed == o.base_seed && lambda_mode == o.lambda_mode &&
         lambda.scale_c == o.lambda.scale_c && lambda.confidence_x == o.lambda.confidence_x &&
         lambda.values == o.lambda.values && representation_method == o.representation_method &&
         policies == o.policies && behavior_policy == o.behavior_policy &&
         corollary_check == o.corollary_check && output_path == o.output_path &&
         workers == o.workers && max_iters == o.max_iters && solver_tol == o.solver_tol &&
         rel_rank_tol == o.rel_rank_tol;
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.lambda.confidence_x = default_confidence_x();
  return c;
}

double ExperimentConfig::effective_scale_c() const {
  return lambda.scale_c.value_or(0.5 * environment.noise_sigma);
}

std::vector<double> ExperimentConfig::lambdas() const {
  const EnvironmentSpec& e = environment;
  switch (lambda_mode) {
    case LambdaMode::schedule:
      return {lambda_schedule(e.T, e.d, n_tr, lambda.confidence_x, effective_scale_c())};
    case LambdaMode::fixed:
      return lambda.values;
    case LambdaMode::grid: {
      std::vector<double> out = lambda.values;
      if (out.empty()) {
        for (double m : kDefaultGridMultiples) {
          out.push_back(lambda_schedule(e.T, e.d, n_tr, lambda.confidence_x, m * e.noise_sigma));
        }
      }
      // Largest first so each fit warm-starts from a lower-rank neighbour.
      std::sort(out.begin(), out.end(), std::greater<>());
      return out;
    }
  }
  return {};
}

void ExperimentConfig::validate() const {
  try {
    environment.validate();
  } catch (const InvalidSpec& e) {
    throw ConfigError(std::string("environment: ") + e.what());
  }
  if (n_tr < 1) throw ConfigError("constraint violated: n_tr >= 1");
  if (n_test < 0) throw ConfigError("constraint violated: n_test >= 0");
  if (n_seeds < 1) throw ConfigError("constraint violated: n_seeds >= 1");
  if (workers < 1) throw ConfigError("constraint violated: workers >= 1");
  if (max_iters < 1) throw ConfigError("constraint violated: solver.max_iters >= 1");
  if (!(solver_tol > 0.0)) throw ConfigError("constraint violated: solver.tol > 0");
  if (!(rel_rank_tol > 0.0 && rel_rank_tol < 1.0)) {
    throw ConfigError("constraint violated: solver.rel_rank_tol in (0, 1)");
  }
  if (corollary_check && n_test > n_tr) {
    throw ConfigError("constraint violated: n_test <= n_tr (required when corollary_check = true)");
  }
  if (policies.empty()) throw ConfigError("constraint violated: at least one policy");
  for (const std::string& p : policies) {
    if (!kPolicyNames.contains(p)) throw ConfigError("key 'policies': unknown policy '" + p + "'");
  }
  switch (lambda_mode) {
    case LambdaMode::schedule:
      if (!(effective_scale_c() > 0.0)) {
        throw ConfigError("constraint violated: lambda.scale_c > 0 (defaults to 0.5 * noise_sigma)");
      }
      break;
    case LambdaMode::fixed:
      if (lambda.values.size() != 1) {
        throw ConfigError("constraint violated: lambda.values must hold exactly one value in fixed mode");
      }
      break;
    case LambdaMode::grid:
      if (lambda.values.empty() && !(environment.noise_sigma > 0.0)) {
        throw ConfigError("constraint violated: grid mode without lambda.values needs noise_sigma > 0");
      }
      break;
  }
  for (double v : lambda.values) {
    if (!(v > 0.0)) throw ConfigError("constraint violated: lambda.values must be positive");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  std::map<std::string, std::map<std::string, std::string>> entries;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) {
      throw ConfigError("unknown key '" + section + "' (outside any section)");
    }
    const auto known = kKnownKeys.find(section);
    if (known == kKnownKeys.end()) throw ConfigError("unknown section '" + section + "'");
    for (const auto& [key, value] : body) {
      const bool per_arm = section == "environment" && key.rfind("arm_covariance_", 0) == 0;
      if (!known->second.contains(key) && !per_arm) {
        throw ConfigError("unknown key '" + section + "." + key + "'");
      }
      entries[section][key] = value.data();
    }
  }

  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    const auto s = entries.find(section);
    if (s == entries.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return trim(k->second);
  };
  auto require = [&](const std::string& key) {
    auto v = get("environment", key);
    if (!v) throw ConfigError("missing required key 'environment." + key + "'");
    return parse_number<int>("environment." + key, *v);
  };

  ExperimentConfig c = default_config();
  EnvironmentSpec& env = c.environment;
  env.d = require("d");
  env.r = require("r");
  env.T = require("T");
  env.K = require("K");
  if (env.d < 1 || env.K < 1) throw ConfigError("constraint violated: d >= 1 and K >= 1");
  if (auto v = get("environment", "noise_sigma")) env.noise_sigma = parse_number<double>("environment.noise_sigma", *v);
  if (auto v = get("environment", "task_norm_bound")) env.task_norm_bound = parse_number<double>("environment.task_norm_bound", *v);
  if (auto v = get("environment", "alpha_scale")) env.alpha_scale = parse_number<double>("environment.alpha_scale", *v);
  if (auto v = get("environment", "arm_model")) {
    if (*v == "gaussian") env.arm_model = ArmModel::gaussian;
    else if (*v == "uniform_sphere") env.arm_model = ArmModel::uniform_sphere;
    else throw ConfigError("key 'environment.arm_model': expected gaussian or uniform_sphere");
  }
  Matrix shared = Matrix::Identity(env.d, env.d);
  if (auto v = get("environment", "arm_covariance")) shared = parse_covariance("environment.arm_covariance", *v, env.d);
  env.arm_covariances.assign(static_cast<std::size_t>(env.K), shared);
  if (entries.contains("environment")) {
    for (const auto& [key, value] : entries.at("environment")) {
      if (key.rfind("arm_covariance_", 0) != 0) continue;
      const std::string full = "environment." + key;
      const int k = parse_number<int>(full, key.substr(std::string("arm_covariance_").size()));
      if (k < 0 || k >= env.K) throw ConfigError("key '" + full + "': arm index out of range");
      env.arm_covariances[static_cast<std::size_t>(k)] = parse_covariance(full, value, env.d);
    }
  }

  if (auto v = get("experiment", "n_tr")) c.n_tr = parse_number<int>("experiment.n_tr", *v);
  if (auto v = get("experiment", "n_test")) c.n_test = parse_number<int>("experiment.n_test", *v);
  if (auto v = get("experiment", "n_seeds")) c.n_seeds = parse_number<int>("experiment.n_seeds", *v);
  if (auto v = get("experiment", "base_seed")) c.base_seed = parse_number<std::uint64_t>("experiment.base_seed", *v);
  if (auto v = get("experiment", "workers")) c.workers = parse_number<int>("experiment.workers", *v);
  if (auto v = get("experiment", "corollary_check")) c.corollary_check = parse_bool("experiment.corollary_check", *v);
  if (auto v = get("experiment", "output_path")) c.output_path = *v;
  if (auto v = get("experiment", "behavior_policy")) {
    if (*v == "uniform") c.behavior_policy = BehaviorPolicy::uniform;
    else if (*v == "greedy") c.behavior_policy = BehaviorPolicy::greedy;
    else throw ConfigError("key 'experiment.behavior_policy': expected uniform or greedy");
  }
  if (auto v = get("experiment", "representation_method")) {
    if (*v == "rank_agnostic") c.representation_method = MethodSelection::rank_agnostic;
    else if (*v == "rank_r") c.representation_method = MethodSelection::rank_r;
    else if (*v == "both") c.representation_method = MethodSelection::both;
    else throw ConfigError("key 'experiment.representation_method': expected rank_agnostic, rank_r or both");
  }
  if (auto v = get("experiment", "policies")) c.policies = split_list(*v);

  if (auto v = get("lambda", "mode")) {
    if (*v == "schedule") c.lambda_mode = LambdaMode::schedule;
    else if (*v == "fixed") c.lambda_mode = LambdaMode::fixed;
    else if (*v == "grid") c.lambda_mode = LambdaMode::grid;
    else throw ConfigError("key 'lambda.mode': expected schedule, fixed or grid");
  }
  if (auto v = get("lambda", "scale_c")) c.lambda.scale_c = parse_number<double>("lambda.scale_c", *v);
  if (auto v = get("lambda", "confidence_x")) c.lambda.confidence_x = parse_number<double>("lambda.confidence_x", *v);
  if (auto v = get("lambda", "values")) {
    for (const std::string& token : split_list(*v)) c.lambda.values.push_back(parse_number<double>("lambda.values", token));
  }

  if (auto v = get("solver", "max_iters")) c.max_iters = parse_number<int>("solver.max_iters", *v);
  if (auto v = get("solver", "tol")) c.solver_tol = parse_number<double>("solver.tol", *v);
  if (auto v = get("solver", "rel_rank_tol")) c.rel_rank_tol = parse_number<double>("solver.rel_rank_tol", *v);

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  const EnvironmentSpec& e = c.environment;
  std::ostringstream os;
  os << "[environment]\n"
     << "d = " << e.d << "\n"
     << "r = " << e.r << "\n"
     << "T = " << e.T << "\n"
     << "K = " << e.K << "\n"
     << "noise_sigma = " << format_double(e.noise_sigma) << "\n"
     << "task_norm_bound = " << format_double(e.task_norm_bound) << "\n"
     << "alpha_scale = " << format_double(e.alpha_scale) << "\n"
     << "arm_model = " << to_string(e.arm_model) << "\n";
  const bool all_same =
      std::all_of(e.arm_covariances.begin(), e.arm_covariances.end(),
                  [&](const Matrix& m) { return same_matrix(m, e.arm_covariances.front()); });
  if (!e.arm_covariances.empty() && all_same) {
    os << "arm_covariance = " << format_covariance(e.arm_covariances.front()) << "\n";
  } else {
    for (std::size_t k = 0; k < e.arm_covariances.size(); ++k) {
      os << "arm_covariance_" << k << " = " << format_covariance(e.arm_covariances[k]) << "\n";
    }
  }
  os << "\n[experiment]\n"
     << "n_tr = " << c.n_tr << "\n"
     << "n_test = " << c.n_test << "\n"
     << "n_seeds = " << c.n_seeds << "\n"
     << "base_seed = " << c.base_seed << "\n"
     << "behavior_policy = " << to_string(c.behavior_policy) << "\n"
     << "policies =";
  for (std::size_t i = 0; i < c.policies.size(); ++i) os << (i ? ", " : " ") << c.policies[i];
  os << "\n"
     << "representation_method = " << to_string(c.representation_method) << "\n"
     << "corollary_check = " << (c.corollary_check ? "true" : "false") << "\n"
     << "output_path = " << c.output_path << "\n"
     << "workers = " << c.workers << "\n"
     << "\n[lambda]\n"
     << "mode = " << to_string(c.lambda_mode) << "\n";
  if (c.lambda.scale_c) os << "scale_c = " << format_double(*c.lambda.scale_c) << "\n";
  os << "confidence_x = " << format_double(c.lambda.confidence_x) << "\n";
  if (!c.lambda.values.empty()) {
    os << "values =";
    for (std::size_t i = 0; i < c.lambda.values.size(); ++i) {
      os << (i ? ", " : " ") << format_double(c.lambda.values[i]);
    }
    os << "\n";
  }
  os << "\n[solver]\n"
     << "max_iters = " << c.max_iters << "\n"
     << "tol = " << format_double(c.solver_tol) << "\n"
     << "rel_rank_tol = " << format_double(c.rel_rank_tol) << "\n";
  return os.str();
}

}  // namespace metarep
