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

#ifndef LDPRED__CONTROL_HPP_
#define LDPRED__CONTROL_HPP_

#include "ldpred/lane_path.hpp"
#include "ldpred/types.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

namespace ldpred::control
{

class RiccatiFailure : public RuntimeFailure
{
public:
  RiccatiFailure(const std::string & what, double residual)
  : RuntimeFailure("control", "Riccati failed: " + what), residual_(residual) {}
  double residual() const noexcept {return residual_;}

private:
  double residual_;
};

/// Lateral/heading tracking-error dynamics  x_err' = A x_err + B1 delta + B2 psi_des'.
struct ErrorModel
{
  Mat4 A = Mat4::Zero();
  Vec4 B1 = Vec4::Zero();
  Vec4 B2 = Vec4::Zero();
};

inline ErrorModel error_model(double v_x, const VehicleParams & p)
{
  require_positive_speed(v_x, "control::error_model");
  const double m = p.m;
  const double Iz = p.I_z;
  const double a = p.a;
  const double b = p.b;
  const double Cf = p.C_f;
  const double Cr = p.C_r;

  ErrorModel em;
  em.A(0, 1) = 1.0;
  em.A(1, 1) = -(Cf + Cr) / (m * v_x);
  em.A(1, 2) = (Cf + Cr) / m;
  em.A(1, 3) = -(a * Cf - b * Cr) / (m * v_x);
  em.A(2, 3) = 1.0;
  em.A(3, 1) = -(a * Cf - b * Cr) / (Iz * v_x);
  em.A(3, 2) = (a * Cf - b * Cr) / Iz;
  em.A(3, 3) = -(a * a * Cf + b * b * Cr) / (Iz * v_x);

  em.B1 << 0.0, Cf / m, 0.0, a * Cf / Iz;
  em.B2 << 0.0, -(a * Cf - b * Cr) / (m * v_x) - v_x, 0.0, -(a * a * Cf + b * b * Cr) / (Iz * v_x);
  return em;
}

/// Max-abs residual of  -P A - A^T P + P B R^-1 B^T P - Q.
template<int N>
double riccati_residual(
  const Eigen::Matrix<double, N, N> & A, const Eigen::Matrix<double, N, 1> & B,
  const Eigen::Matrix<double, N, N> & Q, double R, const Eigen::Matrix<double, N, N> & P)
{
  const Eigen::Matrix<double, N, N> res =
    -P * A - A.transpose() * P + P * B * (1.0 / R) * B.transpose() * P - Q;
  return res.cwiseAbs().maxCoeff();
}

/// Continuous-time algebraic Riccati equation for a single-input system.
///
/// The stable invariant subspace of the Hamiltonian gives the initial
/// solution; Newton-Kleinman iterations (one Lyapunov solve each) then polish
/// it until the residual is below `tol`.
template<int N>
Eigen::Matrix<double, N, N> solve_riccati(
  const Eigen::Matrix<double, N, N> & A, const Eigen::Matrix<double, N, 1> & B,
  const Eigen::Matrix<double, N, N> & Q, double R, double tol = 1e-10, int max_iter = 50)
{
  using MatN = Eigen::Matrix<double, N, N>;
  using RowN = Eigen::Matrix<double, 1, N>;
  if (!(R > 0.0)) {
    throw InvalidArgument("control::solve_riccati: control weight must be > 0");
  }

  Eigen::Matrix<double, 2 * N, 2 * N> H;
  H.template topLeftCorner<N, N>() = A;
  H.template topRightCorner<N, N>() = -B * (1.0 / R) * B.transpose();
  H.template bottomLeftCorner<N, N>() = -Q;
  H.template bottomRightCorner<N, N>() = -A.transpose();

  Eigen::EigenSolver<Eigen::Matrix<double, 2 * N, 2 * N>> eig(H);
  if (eig.info() != Eigen::Success) {
    throw RiccatiFailure("Hamiltonian eigen-decomposition did not converge", -1.0);
  }
  Eigen::Matrix<std::complex<double>, 2 * N, N> U;
  int count = 0;
  for (int i = 0; i < 2 * N; ++i) {
    if (eig.eigenvalues()(i).real() < 0.0 && count < N) {
      U.col(count++) = eig.eigenvectors().col(i);
    }
  }
  if (count != N) {
    throw RiccatiFailure("Hamiltonian has eigenvalues on the imaginary axis", -1.0);
  }
  const Eigen::Matrix<std::complex<double>, N, N> U1 = U.template topRows<N>();
  const Eigen::Matrix<std::complex<double>, N, N> U2 = U.template bottomRows<N>();
  MatN P = (U2 * U1.inverse()).real();
  symmetrize(P);

  double residual = riccati_residual<N>(A, B, Q, R, P);
  using KronMat = Eigen::Matrix<double, N * N, N * N>;
  for (int it = 0; it < max_iter && residual > tol; ++it) {
    const RowN K = (1.0 / R) * B.transpose() * P;
    const MatN Acl = A - B * K;
    const MatN rhs = -(Q + K.transpose() * R * K);
    // Acl^T X + X Acl = rhs, column-major vec.
    KronMat L = KronMat::Zero();
    const MatN I = MatN::Identity();
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        L.template block<N, N>(i * N, j * N) = I(i, j) * Acl.transpose() + Acl(j, i) * I;
      }
    }
    const Eigen::Matrix<double, N * N, 1> x =
      L.partialPivLu().solve(Eigen::Map<const Eigen::Matrix<double, N * N, 1>>(rhs.data()));
    MatN next = Eigen::Map<const MatN>(x.data());
    symmetrize(next);
    const double next_residual = riccati_residual<N>(A, B, Q, R, next);
    if (!std::isfinite(next_residual) || next_residual >= residual) {
      break;
    }
    P = next;
    residual = next_residual;
  }
  if (!(residual <= tol) || !P.allFinite()) {
    std::ostringstream os;
    os << "no solution within the iteration cap (residual " << residual << ")";
    throw RiccatiFailure(os.str(), residual);
  }
  return P;
}

/// Equilibrium ("feedforward") steering that holds e1 = 0 on a path of
/// curvature kappa. Solves the two non-trivial rows of the error model for
/// the unknowns (e2_eq, delta_eq).
inline double feedforward(double v_x, double kappa, const VehicleParams & params)
{
  const ErrorModel em = error_model(v_x, params);
  const double psi_des_dot = v_x * kappa;
  Eigen::Matrix2d M;
  M << em.A(1, 2), em.B1(1),
    em.A(3, 2), em.B1(3);
  const Eigen::Vector2d rhs(-em.B2(1) * psi_des_dot, -em.B2(3) * psi_des_dot);
  const double det = M.determinant();
  if (std::abs(det) < 1e-12 * M.cwiseAbs().maxCoeff() * M.cwiseAbs().maxCoeff()) {
    throw RuntimeFailure("control", "feedforward equilibrium system is singular");
  }
  return M.partialPivLu().solve(rhs)(1);
}

struct LqrConfig
{
  Mat4 W1 = Vec4(1.0, 0.0, 1.0, 0.0).asDiagonal();
  double W2 = 200.0;
  std::vector<double> speed_grid = default_speed_grid();
  double max_steer = 0.6;         // rad, |delta_f| saturation
  bool zero_feedback = false;     // open-loop gains (K_fb = 0) for diagnostics

  static std::vector<double> default_speed_grid()
  {
    std::vector<double> grid;
    for (int kmh = 5; kmh <= 60; kmh += 5) {
      grid.push_back(kmh / 3.6);
    }
    return grid;
  }

  void validate() const
  {
    if (!(W2 > 0.0)) {
      throw InvalidArgument("LqrConfig: W2 must be > 0");
    }
    if ((W1 - W1.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidArgument("LqrConfig: W1 must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat4> es(W1);
    if (es.eigenvalues().minCoeff() < -1e-12) {
      throw InvalidArgument("LqrConfig: W1 must be positive semi-definite");
    }
    if (speed_grid.empty()) {
      throw InvalidArgument("LqrConfig: speed_grid must not be empty");
    }
    for (std::size_t i = 0; i < speed_grid.size(); ++i) {
      if (!(speed_grid[i] > 0.0) || (i > 0 && !(speed_grid[i] > speed_grid[i - 1]))) {
        throw InvalidArgument("LqrConfig: speed_grid must be positive and strictly ascending");
      }
    }
    if (!(max_steer > 0.0)) {
      throw InvalidArgument("LqrConfig: max_steer must be > 0");
    }
  }
};

struct GainEntry
{
  double speed = 0.0;
  RowVec4 K = RowVec4::Zero();
  double residual = 0.0;
  double max_real_eig = 0.0;  // of A - B1 K
};

/// Speed-indexed feedback gains with the plant needed for the feedforward.
class LqrGains
{
public:
  LqrGains() = default;
  LqrGains(std::vector<GainEntry> entries, VehicleParams params, double max_steer)
  : entries_(std::move(entries)), params_(params), max_steer_(max_steer) {}

  const std::vector<GainEntry> & entries() const {return entries_;}
  const VehicleParams & params() const {return params_;}
  double max_steer() const {return max_steer_;}

  /// Linear interpolation between grid speeds, clamped outside the grid.
  RowVec4 feedback(double v_x) const
  {
    if (entries_.empty()) {
      throw RuntimeFailure("control", "gain table is empty");
    }
    if (v_x <= entries_.front().speed) {return entries_.front().K;}
    if (v_x >= entries_.back().speed) {return entries_.back().K;}
    const auto hi = std::upper_bound(
      entries_.begin(), entries_.end(), v_x,
      [](double v, const GainEntry & e) {return v < e.speed;});
    const auto lo = hi - 1;
    if (lo->speed == v_x) {return lo->K;}
    const double w = (v_x - lo->speed) / (hi->speed - lo->speed);
    return (1.0 - w) * lo->K + w * hi->K;
  }

  double feedforward(double v_x, double kappa) const
  {
    return control::feedforward(v_x, kappa, params_);
  }

private:
  std::vector<GainEntry> entries_;
  VehicleParams params_;
  double max_steer_ = 0.6;
};

inline GainEntry gain_at_speed(double v_x, const LqrConfig & config, const VehicleParams & params)
{
  const ErrorModel em = error_model(v_x, params);
  GainEntry entry;
  entry.speed = v_x;
  Mat4 P;
  try {
    P = solve_riccati<4>(em.A, em.B1, config.W1, config.W2);
  } catch (const RiccatiFailure & e) {
    std::ostringstream os;
    os << "at v_x = " << v_x << " m/s: " << e.what();
    throw RiccatiFailure(os.str(), e.residual());
  }
  entry.residual = riccati_residual<4>(em.A, em.B1, config.W1, config.W2, P);
  entry.K = (1.0 / config.W2) * em.B1.transpose() * P;
  if (config.zero_feedback) {
    entry.K.setZero();
  }
  const Mat4 Acl = em.A - em.B1 * entry.K;
  entry.max_real_eig = Eigen::EigenSolver<Mat4>(Acl).eigenvalues().real().maxCoeff();
  return entry;
}

inline LqrGains build_gain_table(const LqrConfig & config, const VehicleParams & params)
{
  config.validate();
  params.validate();
  std::vector<GainEntry> entries;
  entries.reserve(config.speed_grid.size());
  for (double v : config.speed_grid) {
    entries.push_back(gain_at_speed(v, config, params));
  }
  return LqrGains(std::move(entries), params, config.max_steer);
}

/// delta_f = delta_ff(v_x, kappa) - K_fb(v_x) x_err, saturated at +-max_steer.
inline double control_law(
  const TrackingError & error, const LqrGains & gains, double v_x, double kappa)
{
  const double delta = gains.feedforward(v_x, kappa) - gains.feedback(v_x).dot(error.vec());
  return std::clamp(delta, -gains.max_steer(), gains.max_steer());
}

/// True when the unsaturated command would exceed the steering limit.
inline bool control_saturated(
  const TrackingError & error, const LqrGains & gains, double v_x, double kappa)
{
  const double delta = gains.feedforward(v_x, kappa) - gains.feedback(v_x).dot(error.vec());
  return std::abs(delta) > gains.max_steer();
}

}  // namespace ldpred::control

#endif  // LDPRED__CONTROL_HPP_
