#include "lekf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lekf::metrics {

StateError state_error(const ins::NavState& a, const ins::NavState& b) {
  StateError e;
  e.position = (a.position - b.position).norm();
  e.orientation = so3::angle(b.rotation.transpose() * a.rotation);
  e.total = e.position + (a.velocity - b.velocity).norm() + e.orientation +
            (a.accel_bias - b.accel_bias).norm() + (a.gyro_bias - b.gyro_bias).norm();
  return e;
}

StateError state_error(const GroupElement& a, const GroupElement& b) {
  return state_error(ins::NavState::from_element(a), ins::NavState::from_element(b));
}

double total_error(const GroupElement& a, const GroupElement& b) { return state_error(a, b).total; }

double position_error(const GroupElement& a, const GroupElement& b) {
  return state_error(a, b).position;
}

double orientation_error(const GroupElement& a, const GroupElement& b) {
  return state_error(a, b).orientation;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty sequence");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double mae(const std::vector<GroupElement>& a, const std::vector<GroupElement>& b, Metric metric) {
  if (a.size() != b.size()) throw DimensionMismatch("trajectories differ in length");
  if (a.empty()) throw std::invalid_argument("empty trajectories");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const StateError e = state_error(a[k], b[k]);
    s += metric == Metric::Total ? e.total
         : metric == Metric::Position ? e.position
                                      : e.orientation;
  }
  return s / static_cast<double>(a.size());
}

double percentile_nearest_rank_inplace(std::vector<double>& values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sequence");
  if (!(q > 0.0 && q <= 100.0)) throw std::invalid_argument("percentile must lie in (0, 100]");
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

double percentile_nearest_rank(std::vector<double> values, double q) {
  return percentile_nearest_rank_inplace(values, q);
}

}  // namespace lekf::metrics
