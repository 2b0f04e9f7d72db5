#include "lekf/verify.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lekf/groups.hpp"
#include "lekf/rng.hpp"

namespace lekf::verify {

namespace {

double rel(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

class Tracker {
 public:
  explicit Tracker(std::string prefix) : prefix_(std::move(prefix)) {}

  void record(const std::string& name, double err, double tol) {
    for (auto& c : report_.checks) {
      if (c.name == prefix_ + name) {
        c.worst = std::isnan(err) ? INFINITY : std::max(c.worst, err);
        return;
      }
    }
    report_.checks.push_back({prefix_ + name, std::isnan(err) ? INFINITY : err, tol});
  }

  Report take() { return std::move(report_); }

 private:
  std::string prefix_;
  Report report_;
};

}  // namespace

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
}

std::string Report::to_string() const {
  std::string out;
  for (const auto& c : checks) {
    out += fmt::format("[{}] {:<48} worst {:.3e}  tol {:.1e}\n", c.passed() ? "PASS" : "FAIL",
                       c.name, c.worst, c.tolerance);
  }
  return out;
}

void Report::append(const Report& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

AlgebraVector random_algebra(const LieGroup& group, Rng& rng, double max_norm) {
  AlgebraVector z = rng.normal_vector(group.dim());
  const double norm = z.norm();
  if (norm == 0.0) return z;
  const double r = max_norm * std::uniform_real_distribution<double>(0.0, 1.0)(rng.engine());
  return z * (r / norm);
}

Report group_identities(const LieGroup& group, const std::string& label, int cases,
                        std::uint64_t seed) {
  Rng rng(seed);
  Tracker t(label + ": ");
  const int k = group.dim();
  const Matrix eye = Matrix::Identity(k, k);
  // Keeps rotation angles below pi so that log is the inverse of exp.
  constexpr double kMaxNorm = 2.5;

  for (int i = 0; i < cases; ++i) {
    const AlgebraVector z = random_algebra(group, rng, kMaxNorm);
    const AlgebraVector w = random_algebra(group, rng, kMaxNorm);
    const GroupElement g = group.exp(random_algebra(group, rng, kMaxNorm));
    const GroupElement h = group.exp(random_algebra(group, rng, kMaxNorm));

    t.record("vee(hat(z)) = z", (group.vee(group.hat(z)) - z).norm(), 1e-12);
    const GroupElement ez = group.exp(z);
    t.record("exp on group", group.membership_residual(ez.matrix()), 1e-9);
    t.record("log(exp(z)) = z", (group.log(ez) - z).norm() / std::max(1.0, z.norm()), 1e-9);
    t.record("exp(log(g)) = g", rel(group.exp(group.log(g)).matrix(), g.matrix()), 1e-9);
    t.record("exp = series", rel(ez.matrix(), group.exp_series(z).matrix()), 1e-9);

    const Matrix ad_g = group.Ad(g);
    t.record("Ad(gh) = Ad(g) Ad(h)", rel(group.Ad(group.compose(g, h)), ad_g * group.Ad(h)), 1e-9);
    t.record("Ad(g) = conjugation", rel(ad_g, group.Ad_generic(g)), 1e-9);
    t.record("Ad(g^-1) = Ad(g)^-1", rel(group.Ad(group.inverse(g)) * ad_g, eye), 1e-9);
    t.record("Ad(exp z) = expm(ad z)", rel(group.Ad(ez), expm_series(group.ad(z))), 1e-9);
    t.record("ad(z) w = -ad(w) z", (group.ad(z) * w + group.ad(w) * z).norm(), 1e-10);

    const Matrix jr = group.jac_right(z);
    t.record("Jr = series", rel(jr, group.jac_right_series(z)), 1e-9);
    t.record("Jr Jr^-1 = I", rel(jr * group.jac_right_inv(z), eye), 1e-9);
    t.record("Jr^-1 = series", rel(group.jac_right_inv(z), group.jac_right_inv_series(z)), 1e-8);
    t.record("Ad(exp z) Jr(z) = Jr(-z)", rel(group.Ad(ez) * jr, group.jac_right(-z)), 1e-9);
    t.record("Ad(g) Jr(z) = Jr(Ad(g) z) Ad(g)",
             rel(ad_g * jr, group.jac_right(ad_g * z) * ad_g), 1e-8);

    // Jr is the right derivative of exp: exp(z + e) = exp(z) exp(Jr(z) e).
    const double h_fd = 1e-6;
    const AlgebraVector e = AlgebraVector::Unit(k, i % k);
    const AlgebraVector fd =
        (group.log(group.compose(group.inverse(ez), group.exp(z + h_fd * e))) -
         group.log(group.compose(group.inverse(ez), group.exp(z - h_fd * e)))) /
        (2.0 * h_fd);
    t.record("Jr = d exp (finite difference)", (fd - jr * e).norm(), 1e-7);
  }
  return t.take();
}

Report group_suite(int cases, std::uint64_t seed) {
  Report r;
  r.append(group_identities(*make_so3(), "SO(3)", cases, seed));
  r.append(group_identities(*make_se23(), "SE_2(3)", cases, seed + 1));
  r.append(group_identities(*make_vector_group(3), "R^3", cases, seed + 2));
  r.append(group_identities(*make_navigation_group(), "SE_2(3) x R^3 x R^3", cases, seed + 3));
  return r;
}

GroupElement random_nav_state(Rng& rng) {
  ins::NavState s;
  s.rotation = so3::exp(3.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng.engine()) *
                        rng.normal3().normalized());
  s.velocity = 5.0 * rng.normal3();
  s.position = 10.0 * rng.normal3();
  s.accel_bias = 0.01 * rng.normal3();
  s.gyro_bias = 0.001 * rng.normal3();
  return s.to_element();
}

Report lemma_check(int states, std::uint64_t seed) {
  const ins::InsModel model;
  const LieGroup& group = model.group();
  Rng rng(seed);
  Tracker t("lemma: ");
  FilterConfig fd;
  fd.derivative_mode = DerivativeMode::FiniteDifference;
  FilterConfig an;

  for (int i = 0; i < states; ++i) {
    const GroupElement g = random_nav_state(rng);
    const Vector u = ins::InsInput{2.0 * rng.normal3(), 0.3 * rng.normal3()}.pack();
    const Matrix ad = group.Ad(g);
    const Matrix ad_inv = group.Ad(group.inverse(g));
    const AlgebraVector a = model.drift(g, u);

    const Matrix a_left = system_matrix_left(model, g, u, fd);
    const Matrix a_right = system_matrix_right(model, g, u, fd);
    t.record("A_bar = Ad (A + ad_a) Ad^-1", rel(a_right, ad * (a_left + group.ad(a)) * ad_inv),
             1e-5);
    const Matrix c_left = measurement_matrix_left(model, g, u, fd);
    const Matrix c_right = measurement_matrix_right(model, g, u, fd);
    t.record("C_bar = C Ad^-1", rel(c_right, c_left * ad_inv), 1e-8);

    t.record("analytic d a = finite difference",
             rel(drift_jacobian(model, g, u, an), drift_jacobian(model, g, u, fd)), 1e-5);
    t.record("analytic A_bar = finite difference",
             rel(system_matrix_right(model, g, u, an), a_right), 1e-5);
    t.record("analytic C = finite difference",
             rel(measurement_matrix_left(model, g, u, an), c_left), 1e-8);
  }
  return t.take();
}

Report equivalence_check(const harness::ExperimentConfig& base, int trials) {
  harness::ExperimentConfig cfg = base;
  cfg.filters.variants = {{Side::Left, ResetOrder::Full}, {Side::Right, ResetOrder::Full}};
  const ins::InsModel model(cfg.noise);
  Tracker t("equivalence: ");
  const auto results = harness::run_trials_parallel(cfg, model, trials, cfg.output.workers, false);
  for (const auto& r : results) {
    t.record("max state error L-FO vs R-FO", r.equivalence.max_state_error, 1e-6);
    t.record("max covariance rel. error", r.equivalence.max_cov_rel_error, 1e-6);
    const bool diverged = r.divergence[0].diverged || r.divergence[1].diverged;
    t.record("no divergence", diverged ? 1.0 : 0.0, 0.0);
  }
  return t.take();
}

Report ballistic_check() {
  ins::InsNoiseParams np;
  np.sigma_f = np.sigma_omega = np.sigma_bf = np.sigma_bomega = 0.0;
  const ins::InsModel model(np);
  sim::TrajectoryConfig cfg;
  cfg.duration = 1.0;
  cfg.compensate_gravity = false;
  const long k = cfg.imu_steps();
  sim::InputProfile inputs;
  inputs.accel.assign(k, Eigen::Vector3d::Zero());
  inputs.angular_rate.assign(k, Eigen::Vector3d::Zero());

  Tracker t("ballistic: ");
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    ins::NavState x0;
    x0.rotation = so3::exp(rng.normal3());
    x0.velocity = 5.0 * rng.normal3();
    x0.position = 10.0 * rng.normal3();
    Rng noise(5);
    const sim::TruthRecord truth = sim::simulate_truth(cfg, model, inputs, x0, noise);
    const ins::NavState end = ins::NavState::from_element(truth.states.back());
    const double tf = truth.time.back();
    const Eigen::Vector3d& g = np.gravity;
    t.record("position at 1 s", (end.position - (x0.position + x0.velocity * tf + 0.5 * g * tf * tf)).norm(), 1e-6);
    t.record("velocity at 1 s", (end.velocity - (x0.velocity + g * tf)).norm(), 1e-6);
    t.record("attitude unchanged", (end.rotation - x0.rotation).norm(), 1e-9);
  }
  return t.take();
}

Report bias_variance_check(int trials, std::uint64_t seed) {
  ins::InsNoiseParams np;
  np.tau_bf = 5.0;
  const ins::InsModel model(np);
  sim::TrajectoryConfig cfg;
  cfg.duration = 10.0;
  cfg.imu_rate = 100.0;
  const long k = cfg.imu_steps();
  sim::InputProfile inputs;
  inputs.accel.assign(k, Eigen::Vector3d::Zero());
  inputs.angular_rate.assign(k, Eigen::Vector3d::Zero());

  std::vector<double> sq(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < trials; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i), Stream::ProcessNoise);
    const sim::TruthRecord truth = sim::simulate_truth(cfg, model, inputs, ins::NavState{}, rng);
    sq[i] = ins::NavState::from_element(truth.states.back()).accel_bias.squaredNorm();
  }
  double sum_sq = 0.0;
  for (double v : sq) sum_sq += v;
  const double empirical = sum_sq / (3.0 * trials);
  const double tau = np.tau_bf;
  const double expected = np.sigma_bf * np.sigma_bf * tau / 2.0 *
                          (1.0 - std::exp(-2.0 * cfg.duration / tau));
  Tracker t("bias variance: ");
  t.record("relative error vs Ornstein-Uhlenbeck", std::abs(empirical / expected - 1.0), 0.05);
  return t.take();
}

}  // namespace lekf::verify
