#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace lekf {

/// SplitMix64 finalizer.  Used only to derive seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Named random streams within one trial.  Each gets its own generator so
/// that, e.g., changing the input profile does not shift sensor noise.
enum class Stream : std::uint64_t {
  Inputs = 1,
  ProcessNoise = 2,
  SensorNoise = 3,
  InitialState = 4,
  FilterInit = 5,
};

/// Seed of stream `stream` in trial `trial` of a run seeded with `master`:
///
///   splitmix64(splitmix64(splitmix64(master) ^ trial) ^ stream)
///
/// splitmix64 is a bijection on 64-bit words, so trials never share a seed
/// for the same stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, Stream stream);

/// A 64-bit Mersenne Twister with a standard normal sampler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, std::uint64_t trial, Stream stream)
      : engine_(derive_seed(master, trial, stream)) {}

  double normal() { return normal_(engine_); }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::Vector3d normal3() { return {normal(), normal(), normal()}; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lekf
