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

#ifndef LDPRED__PREDICTION_HPP_
#define LDPRED__PREDICTION_HPP_

#include "ldpred/control.hpp"
#include "ldpred/dynamics.hpp"
#include "ldpred/estimation.hpp"
#include "ldpred/lane_path.hpp"
#include "ldpred/random.hpp"
#include "ldpred/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ldpred::prediction
{

enum class Algorithm { kKP, kKPC, kCTRV };

inline const char * to_string(Algorithm algo)
{
  switch (algo) {
    case Algorithm::kKP: return "kp";
    case Algorithm::kKPC: return "kpc";
    case Algorithm::kCTRV: return "ctrv";
  }
  return "?";
}

struct PredictionConfig
{
  int horizon_steps = 200;
  double t_s = 0.01;
  bool sim_noise_enabled = true;
  std::uint64_t rng_seed = 0;
  int emission_stride = 10;  // output cadence in steps

  void validate() const
  {
    if (horizon_steps < 1) {
      throw InvalidArgument("PredictionConfig: horizon_steps must be >= 1");
    }
    if (!(t_s > 0.0)) {
      throw InvalidArgument("PredictionConfig: t_s must be > 0");
    }
    if (emission_stride < 1) {
      throw InvalidArgument("PredictionConfig: emission_stride must be >= 1");
    }
  }
};

struct PredictedStep
{
  int i = 0;
  GaussianState state;                 // x^{k+i|k}, P^{k+i|k}
  double u_pred = std::numeric_limits<double>::quiet_NaN();  // u^{k+i-1}
  Mat5 transition = Mat5::Identity();  // matrix that propagated P into this step
};

struct PredictedTrajectory
{
  Algorithm algo = Algorithm::kKPC;
  int origin_step = 0;
  double t_s = 0.01;
  std::vector<PredictedStep> steps;  // i = 1 .. horizon
};

/// Kalman predictor with the input frozen at its value at the origin.
inline PredictedTrajectory predict_plain(
  const GaussianState & belief, double u_k, const VehicleParams & params,
  const estimation::NoiseSpec & noise, const PredictionConfig & config)
{
  config.validate();
  PredictedTrajectory traj;
  traj.algo = Algorithm::kKP;
  traj.t_s = config.t_s;
  traj.steps.reserve(config.horizon_steps);
  GaussianState current = belief;
  for (int i = 1; i <= config.horizon_steps; ++i) {
    PredictedStep step;
    step.i = i;
    step.u_pred = u_k;
    step.transition = dynamics::linearize(current.mean, u_k, params, config.t_s).Phi;
    current = estimation::ekf_predict(current, u_k, params, noise, config.t_s);
    step.state = current;
    traj.steps.push_back(step);
  }
  return traj;
}

/// Tracking law evaluated on a (simulated) state estimate. Same code path as
/// the deployed controller.
inline double predict_control(
  const VehicleState & x_hat_sim, const control::LqrGains & gains, const LanePath & path)
{
  const TrackingError err = path.tracking_error(x_hat_sim);
  const double kappa = path.curvature_at(x_hat_sim);
  return control::control_law(err, gains, x_hat_sim.v_x, kappa);
}

/// x_hat + K_k v_sim with v_sim ~ N(0, R) drawn by `sampler`.
inline VehicleState simulate_estimation(
  const VehicleState & x_hat, const Mat5 & K_k, const GaussianSampler<5> & sampler, Rng & rng)
{
  const Vec5 v_sim = sampler(rng);
  return VehicleState::from_vec(x_hat.vec() + K_k * v_sim, x_hat.v_x);
}

inline VehicleState simulate_estimation(
  const VehicleState & x_hat, const Mat5 & K_k, const estimation::NoiseSpec & noise, Rng & rng)
{
  return simulate_estimation(x_hat, K_k, GaussianSampler<5>(noise.R), rng);
}

/// Closed-loop Jacobian pieces of the migrated control law at `x`.
struct ClosedLoopLinearization
{
  Mat5 Phi_cl = Mat5::Identity();
  Mat5 input_coupling = Mat5::Zero();  // (df/du) K_fb (dE/dx)
};

inline ClosedLoopLinearization closed_loop_linearization(
  const VehicleState & x, double u, const control::LqrGains & gains, const LanePath & path,
  const VehicleParams & params, double t_s)
{
  const dynamics::LinearizedModel lin = dynamics::linearize(x, u, params, t_s);
  const Mat45 dEdx = path.error_jacobian(x);
  const RowVec4 K_fb = gains.feedback(x.v_x);
  const TrackingError err = path.tracking_error(x);
  const bool saturated = control::control_saturated(err, gains, x.v_x, path.curvature_at(x));

  ClosedLoopLinearization cl;
  cl.input_coupling = lin.B_jac * (K_fb * dEdx);
  const Mat5 dfcl_dx = saturated ? lin.F_jac : Mat5(lin.F_jac - cl.input_coupling);
  cl.Phi_cl = Mat5::Identity() + t_s * dfcl_dx;
  return cl;
}

/// Kalman predictor with control: future inputs come from the tracking law
/// applied to simulated estimates, and the covariance is propagated with the
/// closed-loop transition plus the estimation-error term.
inline PredictedTrajectory predict_kpc(
  const GaussianState & belief, const Mat5 & K_k, const control::LqrGains & gains,
  const LanePath & path, const VehicleParams & params, const estimation::NoiseSpec & noise,
  const PredictionConfig & config, Rng & rng)
{
  config.validate();
  const GaussianSampler<5> sampler(noise.R);
  const Mat5 P_origin = belief.P;
  const double ts2 = config.t_s * config.t_s;

  PredictedTrajectory traj;
  traj.algo = Algorithm::kKPC;
  traj.t_s = config.t_s;
  traj.steps.reserve(config.horizon_steps);

  VehicleState x = belief.mean;
  Mat5 P = belief.P;
  for (int i = 1; i <= config.horizon_steps; ++i) {
    const VehicleState x_sim =
      config.sim_noise_enabled ? simulate_estimation(x, K_k, sampler, rng) : x;
    const double u = predict_control(x_sim, gains, path);
    const ClosedLoopLinearization cl =
      closed_loop_linearization(x, u, gains, path, params, config.t_s);

    P = cl.Phi_cl * P * cl.Phi_cl.transpose() + noise.Q +
      ts2 * cl.input_coupling * P_origin * cl.input_coupling.transpose();
    symmetrize(P);
    x = dynamics::step(x, u, params, config.t_s);

    PredictedStep step;
    step.i = i;
    step.state = {x, P};
    step.u_pred = u;
    step.transition = cl.Phi_cl;
    traj.steps.push_back(step);
  }
  return traj;
}

inline PredictedTrajectory predict_kpc(
  const GaussianState & belief, const Mat5 & K_k, const control::LqrGains & gains,
  const LanePath & path, const VehicleParams & params, const estimation::NoiseSpec & noise,
  const PredictionConfig & config)
{
  Rng rng(config.rng_seed);
  return predict_kpc(belief, K_k, gains, path, params, noise, config, rng);
}

// --- CTRV baseline -------------------------------------------------------

// CTRV state ordering [x, y, v, psi, omega].
enum CtrvIndex : int { kCx = 0, kCy = 1, kCv = 2, kCpsi = 3, kComega = 4 };

struct CtrvState
{
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double psi = 0.0;
  double omega = 0.0;
  Mat5 P_ctrv = Mat5::Zero();
};

inline constexpr double kCtrvStraightThreshold = 1e-6;  // rad/s

/// Closed-form CTRV motion over `dt` (exact for any dt).
inline Vec5 ctrv_transition(const Vec5 & s, double dt)
{
  Vec5 out = s;
  const double v = s(kCv);
  const double psi = s(kCpsi);
  const double w = s(kComega);
  if (std::abs(w) < kCtrvStraightThreshold) {
    out(kCx) += v * dt * std::cos(psi);
    out(kCy) += v * dt * std::sin(psi);
  } else {
    out(kCx) += v / w * (std::sin(psi + w * dt) - std::sin(psi));
    out(kCy) += v / w * (std::cos(psi) - std::cos(psi + w * dt));
  }
  out(kCpsi) = psi + w * dt;
  return out;
}

inline Mat5 ctrv_jacobian(const Vec5 & s, double dt)
{
  const double v = s(kCv);
  const double psi = s(kCpsi);
  const double w = s(kComega);
  Mat5 F = Mat5::Identity();
  if (std::abs(w) < kCtrvStraightThreshold) {
    F(kCx, kCv) = dt * std::cos(psi);
    F(kCx, kCpsi) = -v * dt * std::sin(psi);
    F(kCx, kComega) = -0.5 * v * dt * dt * std::sin(psi);
    F(kCy, kCv) = dt * std::sin(psi);
    F(kCy, kCpsi) = v * dt * std::cos(psi);
    F(kCy, kComega) = 0.5 * v * dt * dt * std::cos(psi);
  } else {
    const double s0 = std::sin(psi);
    const double c0 = std::cos(psi);
    const double s1 = std::sin(psi + w * dt);
    const double c1 = std::cos(psi + w * dt);
    F(kCx, kCv) = (s1 - s0) / w;
    F(kCx, kCpsi) = v / w * (c1 - c0);
    F(kCx, kComega) = v * dt * c1 / w - v * (s1 - s0) / (w * w);
    F(kCy, kCv) = (c0 - c1) / w;
    F(kCy, kCpsi) = v / w * (s1 - s0);
    F(kCy, kComega) = v * dt * s1 / w - v * (c0 - c1) / (w * w);
  }
  F(kCpsi, kComega) = dt;
  return F;
}

/// CTRV initial condition from an EKF posterior: speed sqrt(v_x^2 + v_y^2),
/// heading psi, turn rate omega_r; covariance mapped through the Jacobian.
inline CtrvState ctrv_from_belief(const GaussianState & belief)
{
  const VehicleState & m = belief.mean;
  CtrvState c;
  c.x = m.X_c;
  c.y = m.Y_c;
  c.v = std::hypot(m.v_x, m.v_y);
  c.psi = m.psi;
  c.omega = m.omega_r;
  Mat5 J = Mat5::Zero();
  J(kCx, kXc) = 1.0;
  J(kCy, kYc) = 1.0;
  J(kCv, kVy) = c.v > 0.0 ? m.v_y / c.v : 0.0;
  J(kCpsi, kPsi) = 1.0;
  J(kComega, kWr) = 1.0;
  c.P_ctrv = J * belief.P * J.transpose();
  return c;
}

/// Process noise for the CTRV state matching the lateral-state Q magnitudes.
inline Mat5 ctrv_process_noise(const estimation::NoiseSpec & noise)
{
  const Vec5 q = noise.Q.diagonal();
  return Vec5(q(kXc), q(kYc), q(kVy), q(kPsi), q(kWr)).asDiagonal();
}

/// CTRV prediction expressed in the lateral-state frame (v_y = 0,
/// omega_r = omega) so that the departure assessment can consume it.
inline PredictedTrajectory predict_ctrv(
  const CtrvState & init, const Mat5 & noise_ctrv, const PredictionConfig & config)
{
  config.validate();
  if (init.v < 0.0) {
    throw InvalidArgument("prediction::predict_ctrv: speed must be >= 0");
  }
  PredictedTrajectory traj;
  traj.algo = Algorithm::kCTRV;
  traj.t_s = config.t_s;
  traj.steps.reserve(config.horizon_steps);

  Vec5 s0;
  s0 << init.x, init.y, init.v, init.psi, init.omega;
  Vec5 s = s0;
  Mat5 P = init.P_ctrv;
  for (int i = 1; i <= config.horizon_steps; ++i) {
    const Mat5 F = ctrv_jacobian(s, config.t_s);
    P = F * P * F.transpose() + noise_ctrv;
    symmetrize(P);
    s = ctrv_transition(s0, i * config.t_s);

    PredictedStep step;
    step.i = i;
    step.transition = F;
    step.state.mean = VehicleState{0.0, s(kComega), s(kCx), s(kCy), s(kCpsi),
      std::max(s(kCv), std::numeric_limits<double>::min())};
    Mat5 & P5 = step.state.P;
    const int map[5] = {kXc, kYc, -1, kPsi, kWr};
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) {
        if (map[r] >= 0 && map[c] >= 0) {
          P5(map[r], map[c]) = P(r, c);
        }
      }
    }
    traj.steps.push_back(step);
  }
  return traj;
}

}  // namespace ldpred::prediction

#endif  // LDPRED__PREDICTION_HPP_
