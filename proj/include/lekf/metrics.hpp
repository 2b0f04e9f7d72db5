#pragma once

#include <vector>

#include "lekf/ins_model.hpp"

namespace lekf::metrics {

/// e = |p1 - p2| + |v1 - v2| + |log(R2^T R1)| + |bf1 - bf2| + |bw1 - bw2|
struct StateError {
  double total = 0.0;
  double position = 0.0;
  double orientation = 0.0;  // rad, in [0, pi]
};

StateError state_error(const ins::NavState& a, const ins::NavState& b);
StateError state_error(const GroupElement& a, const GroupElement& b);

double total_error(const GroupElement& a, const GroupElement& b);
double position_error(const GroupElement& a, const GroupElement& b);
double orientation_error(const GroupElement& a, const GroupElement& b);

/// Arithmetic mean; throws on empty input.
double mean(const std::vector<double>& values);

enum class Metric { Total, Position, Orientation };

/// (1/K) sum_k e(a_k, b_k) over time-aligned trajectories.
double mae(const std::vector<GroupElement>& a, const std::vector<GroupElement>& b,
           Metric metric = Metric::Total);

/// Nearest-rank percentile: the ceil(q/100 * n)-th smallest value, q in (0, 100].
double percentile_nearest_rank(std::vector<double> values, double q);
/// Same, reordering `values` in place instead of copying.
double percentile_nearest_rank_inplace(std::vector<double>& values, double q);

}  // namespace lekf::metrics
