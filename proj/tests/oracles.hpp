#pragma once

// Independent reference computations used by the tests.

#include "avgmpc/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <vector>

namespace oracle {

using avgmpc::Vector;

// Reference closed-loop values for N = 12, T = 6, x0 = 2, H0 = [h(1,1) x4, h(1,2)].
inline constexpr double kRotatedValue0 = 1.0392909643997e-08;
inline constexpr double kRotatedValue1 = 0.0166221538547582;
inline constexpr double kW0 = 0.866310666607585;

inline Vector scalar(double v) { return Vector::Constant(1, v); }

inline const std::shared_ptr<const avgmpc::EconomicSetup>& example_setup() {
  static const auto setup =
      avgmpc::EconomicSetup::create(avgmpc::scalar_example_model(), avgmpc::scalar_example_certificate());
  return setup;
}

struct ScalarSteadyState {
  double x, u, ell;
};

// Scans the equilibrium set of x+ = x u on [-10, 10]^2: the line u = 1 and
// the line x = 0, both with step 1e-3.
inline ScalarSteadyState brute_force_steady_state(bool enforce_output) {
  ScalarSteadyState best{0, 0, std::numeric_limits<double>::infinity()};
  const auto try_point = [&](double x, double u) {
    if (enforce_output && 2 * x + u - 5 > 0) return;
    const double ell = (x - 3) * (x - 3) + u * u;
    if (ell < best.ell) best = {x, u, ell};
  };
  for (int i = -10000; i <= 10000; ++i) {
    try_point(i * 1e-3, 1.0);
    try_point(0.0, i * 1e-3);
  }
  return best;
}

inline Vector central_difference(const std::function<double(const Vector&)>& fn, const Vector& z,
                                 double step = 1e-6) {
  Vector g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Vector zp = z, zm = z;
    zp[i] += step;
    zm[i] -= step;
    g[i] = (fn(zp) - fn(zm)) / (2 * step);
  }
  return g;
}

// Grid search of a two-step OCP over an input grid on [lo, hi]^2.
inline double brute_force_two_step(const avgmpc::OcpSpec& spec, double lo, double hi, int points) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < points; ++j) {
      const std::vector<Vector> u{scalar(lo + (hi - lo) * i / (points - 1)), scalar(lo + (hi - lo) * j / (points - 1))};
      if (avgmpc::constraint_residuals(spec, u).maxCoeff() > 0.0) continue;
      const double J = spec.objective == avgmpc::Objective::kRotated
                           ? avgmpc::rotated_cost(spec, u)
                           : avgmpc::rollout(spec.setup->model(), spec.x0, u).cost;
      best = std::min(best, J);
    }
  }
  return best;
}

// k in [T-1, N-1] such that every index of [k-T+1, k] is proximate.
inline std::vector<int> rescan_consecutive(const std::vector<int>& proximity, int T, int N) {
  const std::set<int> P(proximity.begin(), proximity.end());
  std::vector<int> out;
  for (int k = T - 1; k < N; ++k) {
    bool all = true;
    for (int j = k - T + 1; j <= k; ++j) all = all && P.contains(j);
    if (all) out.push_back(k);
  }
  return out;
}

}  // namespace oracle
