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

#ifndef LDPRED__ESTIMATION_HPP_
#define LDPRED__ESTIMATION_HPP_

#include "ldpred/dynamics.hpp"
#include "ldpred/types.hpp"

#include <Eigen/Dense>

#include <utility>

/// Extended Kalman filter over the lateral state with full-state
/// measurements (h(x) = x, H = I).
namespace ldpred::estimation
{

struct NoiseSpec
{
  // Per-step process noise covariance.
  Mat5 Q = Vec5(1e-8, 1e-8, 1e-6, 1e-6, 1e-8).asDiagonal();
  // Sensor noise, (m/s, rad/s, m, m, rad)^2.
  Mat5 R = Vec5(1e-6, 1e-6, 1.0, 1.0, 1e-2).asDiagonal();

  void validate() const
  {
    for (const Mat5 * m : {&Q, &R}) {
      if ((*m - m->transpose()).cwiseAbs().maxCoeff() > 1e-15) {
        throw InvalidArgument("NoiseSpec: Q and R must be symmetric");
      }
      if (Eigen::SelfAdjointEigenSolver<Mat5>(*m).eigenvalues().minCoeff() < -1e-15) {
        throw InvalidArgument("NoiseSpec: Q and R must be positive semi-definite");
      }
    }
  }
};

using Measurement = Vec5;

/// Posterior and the Kalman gain that produced it.
struct Correction
{
  GaussianState belief;
  Mat5 K = Mat5::Zero();
};

/// Clamps tiny negative eigenvalues produced by round-off.
inline void condition_covariance(Mat5 & P, double tol = 1e-10)
{
  symmetrize(P);
  Eigen::SelfAdjointEigenSolver<Mat5> es(P);
  if (es.eigenvalues().minCoeff() >= 0.0) {
    return;
  }
  if (es.eigenvalues().minCoeff() < -tol * std::max(1.0, es.eigenvalues().maxCoeff())) {
    throw RuntimeFailure("estimation", "covariance lost positive semi-definiteness");
  }
  const Vec5 clamped = es.eigenvalues().cwiseMax(0.0);
  P = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
  symmetrize(P);
}

inline GaussianState ekf_predict(
  const GaussianState & belief, double delta_f, const VehicleParams & params,
  const NoiseSpec & noise, double t_s)
{
  const dynamics::LinearizedModel lin =
    dynamics::linearize(belief.mean, delta_f, params, t_s);
  GaussianState out;
  out.mean = dynamics::step(belief.mean, delta_f, params, t_s);
  out.P = lin.Phi * belief.P * lin.Phi.transpose() + noise.Q;
  symmetrize(out.P);
  return out;
}

inline Correction ekf_correct(
  const GaussianState & belief, const Measurement & y, const NoiseSpec & noise)
{
  Vec5 innovation = y - belief.mean.vec();
  innovation(kPsi) = wrap_angle(innovation(kPsi));

  const Mat5 S = belief.P + noise.R;
  Eigen::LDLT<Mat5> ldlt(S);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
    throw RuntimeFailure("estimation", "innovation covariance is singular");
  }
  // K = P S^-1, computed as (S^-1 P)^T since both are symmetric.
  Correction c;
  c.K = ldlt.solve(belief.P).transpose();
  c.belief.mean = VehicleState::from_vec(
    belief.mean.vec() + c.K * innovation, belief.mean.v_x);
  c.belief.P = (Mat5::Identity() - c.K) * belief.P;
  condition_covariance(c.belief.P);
  return c;
}

inline Correction ekf_step(
  const GaussianState & belief, double delta_f, const Measurement & y,
  const VehicleParams & params, const NoiseSpec & noise, double t_s)
{
  return ekf_correct(ekf_predict(belief, delta_f, params, noise, t_s), y, noise);
}

/// Bootstrap belief: first measurement as mean, R as covariance.
inline GaussianState initial_belief(const Measurement & y0, double v_x, const NoiseSpec & noise)
{
  return {VehicleState::from_vec(y0, v_x), noise.R};
}

/// Iterates the covariance recursion at a fixed linearisation point until the
/// posterior covariance settles; returns the settled posterior and gain.
inline Correction steady_state_filter(
  const VehicleState & at, double delta_f, const VehicleParams & params,
  const NoiseSpec & noise, double t_s, int max_iter = 200000, double rel_tol = 1e-12)
{
  const Mat5 Phi = dynamics::linearize(at, delta_f, params, t_s).Phi;
  Mat5 P = noise.R;
  Mat5 K = Mat5::Zero();
  for (int it = 0; it < max_iter; ++it) {
    const Mat5 prior = Phi * P * Phi.transpose() + noise.Q;
    K = (prior + noise.R).ldlt().solve(prior).transpose();
    Mat5 post = (Mat5::Identity() - K) * prior;
    symmetrize(post);
    const double change = (post - P).cwiseAbs().maxCoeff();
    P = post;
    if (change <= rel_tol * P.cwiseAbs().maxCoeff()) {
      break;
    }
  }
  return {GaussianState{at, P}, K};
}

/// Normalized estimation error squared (heading error wrapped).
inline double nees(const GaussianState & estimate, const VehicleState & truth)
{
  Vec5 e = estimate.mean.vec() - truth.vec();
  e(kPsi) = wrap_angle(e(kPsi));
  return e.dot(estimate.P.ldlt().solve(e));
}

}  // namespace ldpred::estimation

#endif  // LDPRED__ESTIMATION_HPP_
