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

#ifndef LDPRED__DYNAMICS_HPP_
#define LDPRED__DYNAMICS_HPP_

#include "ldpred/types.hpp"

#include <cmath>

/// Linear-tyre single-track plant with constant longitudinal speed.
///
/// The model is the small-steer form: the cos(delta_f) factor on the front
/// lateral force is dropped, so the input enters affinely.
namespace ldpred::dynamics
{

struct TireState
{
  double alpha_f = 0.0;
  double alpha_r = 0.0;
  double F_yf = 0.0;
  double F_yr = 0.0;
};

struct LinearizedModel
{
  Mat5 F_jac = Mat5::Zero();  // df/dx, 1/s
  Vec5 B_jac = Vec5::Zero();  // df/du
  Mat5 Phi = Mat5::Identity();
};

inline TireState tire_forces(
  const VehicleState & state, double delta_f, const VehicleParams & params)
{
  require_positive_speed(state.v_x, "dynamics::tire_forces");
  TireState t;
  t.alpha_f = (state.v_y + params.a * state.omega_r) / state.v_x - delta_f;
  t.alpha_r = (state.v_y - params.b * state.omega_r) / state.v_x;
  t.F_yf = -params.C_f * t.alpha_f;
  t.F_yr = -params.C_r * t.alpha_r;
  return t;
}

/// Time derivative [v_y', omega_r', X_c', Y_c', psi'].
inline Vec5 derivatives(
  const VehicleState & state, double delta_f, const VehicleParams & params)
{
  require_positive_speed(state.v_x, "dynamics::derivatives");
  const double vx = state.v_x;
  const double m = params.m;
  const double Iz = params.I_z;
  const double a = params.a;
  const double b = params.b;
  const double Cf = params.C_f;
  const double Cr = params.C_r;

  const double s = std::sin(state.psi);
  const double c = std::cos(state.psi);

  Vec5 dx;
  dx(kVy) = -(Cf + Cr) / (m * vx) * state.v_y -
    ((a * Cf - b * Cr) / (m * vx) + vx) * state.omega_r + Cf / m * delta_f;
  dx(kWr) = -(a * Cf - b * Cr) / (Iz * vx) * state.v_y -
    (a * a * Cf + b * b * Cr) / (Iz * vx) * state.omega_r + a * Cf / Iz * delta_f;
  dx(kXc) = vx * c - state.v_y * s;
  dx(kYc) = vx * s + state.v_y * c;
  dx(kPsi) = state.omega_r;
  return dx;
}

/// Lateral acceleration a_y = v_y' + v_x * omega_r.
inline double lateral_acceleration(
  const VehicleState & state, double delta_f, const VehicleParams & params)
{
  return derivatives(state, delta_f, params)(kVy) + state.v_x * state.omega_r;
}

/// One forward-Euler step; v_x is carried unchanged.
inline VehicleState step(
  const VehicleState & state, double delta_f, const VehicleParams & params, double t_s)
{
  if (t_s < 0.0) {
    throw InvalidArgument("dynamics::step: t_s must be >= 0");
  }
  const Vec5 x = state.vec() + t_s * derivatives(state, delta_f, params);
  return VehicleState::from_vec(x, state.v_x);
}

inline LinearizedModel linearize(
  const VehicleState & state, double /*delta_f*/, const VehicleParams & params, double t_s)
{
  require_positive_speed(state.v_x, "dynamics::linearize");
  const double vx = state.v_x;
  const double m = params.m;
  const double Iz = params.I_z;
  const double a = params.a;
  const double b = params.b;
  const double Cf = params.C_f;
  const double Cr = params.C_r;
  const double s = std::sin(state.psi);
  const double c = std::cos(state.psi);

  LinearizedModel lin;
  Mat5 & F = lin.F_jac;
  F(kVy, kVy) = -(Cf + Cr) / (m * vx);
  F(kVy, kWr) = -((a * Cf - b * Cr) / (m * vx) + vx);
  F(kWr, kVy) = -(a * Cf - b * Cr) / (Iz * vx);
  F(kWr, kWr) = -(a * a * Cf + b * b * Cr) / (Iz * vx);
  F(kXc, kVy) = -s;
  F(kXc, kPsi) = -vx * s - state.v_y * c;
  F(kYc, kVy) = c;
  F(kYc, kPsi) = vx * c - state.v_y * s;
  F(kPsi, kWr) = 1.0;

  lin.B_jac(kVy) = Cf / m;
  lin.B_jac(kWr) = a * Cf / Iz;

  lin.Phi = Mat5::Identity() + F * t_s;
  return lin;
}

}  // namespace ldpred::dynamics

#endif  // LDPRED__DYNAMICS_HPP_
