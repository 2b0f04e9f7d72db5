#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lekf/harness.hpp"
#include "lekf/sim.hpp"

namespace lekf::verify {

struct Check {
  std::string name;
  double worst = 0.0;  // largest observed error
  double tolerance = 0.0;
  bool passed() const { return worst <= tolerance; }
};

struct Report {
  std::vector<Check> checks;

  bool passed() const;
  std::string to_string() const;
  void append(const Report& other);
};

/// Random algebra vector with norm uniform in [0, max_norm).
AlgebraVector random_algebra(const LieGroup& group, Rng& rng, double max_norm);

/// Identity suite on one group: hat/vee and exp/log round trips, Ad as a
/// homomorphism and as conjugation, Ad(exp z) = expm(ad z), Jacobian
/// inverses, Ad_{exp z} J_z = J_{-z} and Ad_g J_z = J_{Ad_g z} Ad_g.  Closed
/// forms are also compared against the series definitions.
Report group_identities(const LieGroup& group, const std::string& label, int cases,
                        std::uint64_t seed);

/// The suite on SO(3), SE_2(3), R^3 and the navigation product group.
Report group_suite(int cases = 1000, std::uint64_t seed = 1);

/// Spatial system and measurement matrices against the transformed body ones
/// at random navigation states, all by finite differences.
Report lemma_check(int states = 100, std::uint64_t seed = 2);

/// Runs L-FO and R-FO over `trials` default trials and checks the per-step
/// estimate and covariance agreement.
Report equivalence_check(const harness::ExperimentConfig& base, int trials = 10);

/// Noiseless ballistic flight (no specific force, no rotation) over 1 s at
/// 1 kHz against p0 + v0 t + gamma t^2 / 2 and v0 + gamma t.
Report ballistic_check();

/// Accelerometer-bias variance at t = duration over `trials` simulated
/// trajectories started at zero bias, against the Ornstein-Uhlenbeck value
/// sigma^2 tau / 2 (1 - exp(-2 t / tau)).  Reports the relative error.
Report bias_variance_check(int trials = 10000, std::uint64_t seed = 3);

/// Random navigation state with moderate velocity/position magnitudes.
GroupElement random_nav_state(Rng& rng);

}  // namespace lekf::verify
