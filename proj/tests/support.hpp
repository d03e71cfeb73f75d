// Copyright 2026 The ldpred Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LDPRED__TESTS__SUPPORT_HPP_
#define LDPRED__TESTS__SUPPORT_HPP_

#include "ldpred/ldpred.hpp"

#include <random>

namespace ldpred::testkit
{

/// Classical RK4 on the plant with the input held constant.
inline VehicleState rk4(VehicleState x, double delta, const VehicleParams & p, double dt, int n)
{
  for (int i = 0; i < n; ++i) {
    const Vec5 k1 = dynamics::derivatives(x, delta, p);
    const Vec5 k2 = dynamics::derivatives(
      VehicleState::from_vec(x.vec() + 0.5 * dt * k1, x.v_x), delta, p);
    const Vec5 k3 = dynamics::derivatives(
      VehicleState::from_vec(x.vec() + 0.5 * dt * k2, x.v_x), delta, p);
    const Vec5 k4 = dynamics::derivatives(
      VehicleState::from_vec(x.vec() + dt * k3, x.v_x), delta, p);
    x = VehicleState::from_vec(x.vec() + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), x.v_x);
  }
  return x;
}

inline VehicleState random_state(std::mt19937_64 & rng, double v_lo = 2.0, double v_hi = 20.0)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> speed(v_lo, v_hi);
  VehicleState x;
  x.v_y = 0.5 * u(rng);
  x.omega_r = 0.3 * u(rng);
  x.X_c = 50.0 * u(rng);
  x.Y_c = 5.0 * u(rng);
  x.psi = 3.0 * u(rng);
  x.v_x = speed(rng);
  return x;
}

/// Central differences of a vector function of the 5-state.
template<int M, typename F>
Eigen::Matrix<double, M, 5> numeric_jacobian(F && f, const VehicleState & x, double h = 1e-6)
{
  Eigen::Matrix<double, M, 5> J;
  for (int c = 0; c < 5; ++c) {
    Vec5 up = x.vec();
    Vec5 dn = x.vec();
    up(c) += h;
    dn(c) -= h;
    J.col(c) = (f(VehicleState::from_vec(up, x.v_x)) - f(VehicleState::from_vec(dn, x.v_x))) /
      (2.0 * h);
  }
  return J;
}

inline LanePath default_lane()
{
  return LanePath::straight(Point2(-50.0, 2.0), 0.0, 1000.0, 4.0);
}

}  // namespace ldpred::testkit

#endif  // LDPRED__TESTS__SUPPORT_HPP_
