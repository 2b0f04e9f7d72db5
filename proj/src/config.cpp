#include "lekf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lekf {

using nlohmann::json;
using harness::ExperimentConfig;

namespace {

// Reads typed keys out of one object and remembers which keys were seen, so
// that leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    if (!root.contains(name)) return;
    obj_ = &root.at(name);
    if (!obj_->is_object()) throw ConfigError("section '" + name + "' must be an object");
  }

  void number(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }

  void integer(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<int>();
    }
  }

  void seed(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void boolean(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "a boolean");
      out = v->get<bool>();
    }
  }

  void string(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }

  void vector3(const char* key, Eigen::Vector3d& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 3) fail(key, "an array of 3 numbers");
      for (int i = 0; i < 3; ++i) {
        if (!(*v)[i].is_number()) fail(key, "an array of 3 numbers");
        out[i] = (*v)[i].get<double>();
      }
    }
  }

  void strings(const char* key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) fail(key, "an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [key, value] : obj_->items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    if (!obj_) return nullptr;
    auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError("'" + name_ + "." + key + "' must be " + what);
  }

  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> seen_;
};

DerivativeMode parse_mode(const std::string& s) {
  if (s == "analytic") return DerivativeMode::Analytic;
  if (s == "finite_difference") return DerivativeMode::FiniteDifference;
  throw ConfigError("filters.derivatives must be 'analytic' or 'finite_difference'");
}

const char* mode_name(DerivativeMode m) {
  return m == DerivativeMode::Analytic ? "analytic" : "finite_difference";
}

CovarianceIntegrator parse_integrator(const std::string& s) {
  if (s == "lie_euler") return CovarianceIntegrator::LieEuler;
  if (s == "euler") return CovarianceIntegrator::Euler;
  if (s == "heun") return CovarianceIntegrator::Heun;
  throw ConfigError("filters.covariance_integrator must be 'lie_euler', 'euler' or 'heun'");
}

const char* integrator_name(CovarianceIntegrator c) {
  switch (c) {
    case CovarianceIntegrator::LieEuler: return "lie_euler";
    case CovarianceIntegrator::Euler: return "euler";
    case CovarianceIntegrator::Heun: return "heun";
  }
  return "?";
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("configuration must be a JSON object");
  static const std::set<std::string> sections = {"trajectory", "noise", "initial_covariance",
                                                 "filters", "output"};
  for (const auto& [key, value] : root.items()) {
    if (!sections.count(key)) throw ConfigError("unknown section '" + key + "'");
  }

  ExperimentConfig cfg;

  Section traj(root, "trajectory");
  auto& t = cfg.trajectory;
  traj.number("duration", t.duration);
  traj.number("imu_rate", t.imu_rate);
  traj.number("gnss_rate", t.gnss_rate);
  traj.number("input_time_constant", t.input_time_constant);
  traj.number("accel_std", t.accel_std);
  traj.number("gyro_std", t.gyro_std);
  traj.boolean("compensate_gravity", t.compensate_gravity);
  traj.integer("trials", cfg.trials);
  traj.seed("master_seed", t.master_seed);
  traj.finish();

  Section noise(root, "noise");
  auto& n = cfg.noise;
  noise.number("sigma_f", n.sigma_f);
  noise.number("sigma_omega", n.sigma_omega);
  noise.number("sigma_bf", n.sigma_bf);
  noise.number("sigma_bomega", n.sigma_bomega);
  noise.number("tau_bf", n.tau_bf);
  noise.number("tau_bomega", n.tau_bomega);
  noise.number("sigma_y", n.sigma_y);
  noise.number("measurement_inflation", n.measurement_inflation);
  noise.vector3("gravity", n.gravity);
  noise.finish();

  Section p0(root, "initial_covariance");
  auto& p = cfg.initial_covariance;
  p0.number("attitude_std", p.attitude);
  p0.number("velocity_std", p.velocity);
  p0.number("position_std", p.position);
  p0.number("accel_bias_std", p.accel_bias);
  p0.number("gyro_bias_std", p.gyro_bias);
  p0.finish();

  Section filters(root, "filters");
  std::vector<std::string> names;
  for (const auto& v : cfg.filters.variants) names.push_back(v.name());
  filters.strings("variants", names);
  std::string mode = mode_name(cfg.filters.derivative_mode);
  filters.string("derivatives", mode);
  filters.number("fd_step", cfg.filters.fd_step);
  std::string integrator = integrator_name(cfg.filters.integrator);
  filters.string("covariance_integrator", integrator);
  filters.finish();
  cfg.filters.variants.clear();
  try {
    for (const auto& s : names) cfg.filters.variants.push_back(harness::Variant::parse(s));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.filters.derivative_mode = parse_mode(mode);
  cfg.filters.integrator = parse_integrator(integrator);

  Section output(root, "output");
  output.string("directory", cfg.output.directory);
  output.integer("workers", cfg.output.workers);
  output.boolean("error_series", cfg.output.error_series);
  output.finish();

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const auto& t = cfg.trajectory;
  const auto& n = cfg.noise;
  const auto& p = cfg.initial_covariance;
  json names = json::array();
  for (const auto& v : cfg.filters.variants) names.push_back(v.name());
  const json root = {
      {"trajectory",
       {{"duration", t.duration},
        {"imu_rate", t.imu_rate},
        {"gnss_rate", t.gnss_rate},
        {"input_time_constant", t.input_time_constant},
        {"accel_std", t.accel_std},
        {"gyro_std", t.gyro_std},
        {"compensate_gravity", t.compensate_gravity},
        {"trials", cfg.trials},
        {"master_seed", t.master_seed}}},
      {"noise",
       {{"sigma_f", n.sigma_f},
        {"sigma_omega", n.sigma_omega},
        {"sigma_bf", n.sigma_bf},
        {"sigma_bomega", n.sigma_bomega},
        {"tau_bf", n.tau_bf},
        {"tau_bomega", n.tau_bomega},
        {"sigma_y", n.sigma_y},
        {"measurement_inflation", n.measurement_inflation},
        {"gravity", {n.gravity.x(), n.gravity.y(), n.gravity.z()}}}},
      {"initial_covariance",
       {{"attitude_std", p.attitude},
        {"velocity_std", p.velocity},
        {"position_std", p.position},
        {"accel_bias_std", p.accel_bias},
        {"gyro_bias_std", p.gyro_bias}}},
      {"filters",
       {{"variants", names},
        {"derivatives", mode_name(cfg.filters.derivative_mode)},
        {"fd_step", cfg.filters.fd_step},
        {"covariance_integrator", integrator_name(cfg.filters.integrator)}}},
      {"output",
       {{"directory", cfg.output.directory},
        {"workers", cfg.output.workers},
        {"error_series", cfg.output.error_series}}},
  };
  return root.dump(2);
}

}  // namespace lekf
