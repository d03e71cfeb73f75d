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

#ifndef LDPRED__ASSESSMENT_HPP_
#define LDPRED__ASSESSMENT_HPP_

#include "ldpred/lane_path.hpp"
#include "ldpred/prediction.hpp"
#include "ldpred/types.hpp"

#include <boost/math/distributions/normal.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

/// Lane departure assessment: Gaussian pose -> contour corners -> signed
/// margins to the lane lines -> departure flags.
namespace ldpred::assessment
{

enum class Corner : int { kFrontLeft = 0, kFrontRight = 1, kRearLeft = 2, kRearRight = 3 };

inline constexpr std::array<Corner, 4> kCorners = {
  Corner::kFrontLeft, Corner::kFrontRight, Corner::kRearLeft, Corner::kRearRight};

inline const char * to_string(Corner c)
{
  switch (c) {
    case Corner::kFrontLeft: return "fl";
    case Corner::kFrontRight: return "fr";
    case Corner::kRearLeft: return "rl";
    case Corner::kRearRight: return "rr";
  }
  return "?";
}

/// Polar description of the contour rectangle about the CG.
struct CornerGeometry
{
  double l_fB = 0.0;    // CG to front corners, m
  double phi_f = 0.0;   // front corner bearing, rad
  double l_rB = 0.0;    // CG to rear corners, m
  double phi_r = 0.0;   // rear corner bearing measured from the rear axis, rad

  static CornerGeometry from_contour(double l_f, double l_r, double B_half)
  {
    if (!(l_f > 0.0) || !(l_r > 0.0) || !(B_half > 0.0)) {
      throw InvalidArgument("CornerGeometry: contour dimensions must be > 0");
    }
    return {std::hypot(l_f, B_half), std::atan(B_half / l_f),
      std::hypot(l_r, B_half), std::atan(B_half / l_r)};
  }

  double radius(Corner c) const
  {
    return (c == Corner::kFrontLeft || c == Corner::kFrontRight) ? l_fB : l_rB;
  }

  /// Bearing of the corner relative to the vehicle heading.
  double bearing(Corner c) const
  {
    switch (c) {
      case Corner::kFrontLeft: return phi_f;
      case Corner::kFrontRight: return -phi_f;
      case Corner::kRearLeft: return std::numbers::pi - phi_r;
      case Corner::kRearRight: return std::numbers::pi + phi_r;
    }
    return 0.0;
  }
};

struct LdaConfig
{
  double Delta = 0.0;       // m
  double Pi = 0.9973;       // coverage probability of the margin band
  double l_r = 2.49;        // CG to rear of contour, m
  double inflation = 0.05;  // added to l_f, l_r and B_half, m
  bool full_covariance = false;  // use the 3x3 pose block instead of variances only

  void validate() const
  {
    if (!(Pi > 0.0 && Pi < 1.0)) {
      throw InvalidArgument("LdaConfig: Pi must lie in (0, 1)");
    }
    if (!(Delta >= 0.0)) {
      throw InvalidArgument("LdaConfig: Delta must be >= 0");
    }
    if (!(l_r > 0.0) || !(inflation >= 0.0)) {
      throw InvalidArgument("LdaConfig: l_r must be > 0 and inflation >= 0");
    }
  }

  /// Half-width multiplier of the two-sided band with coverage Pi.
  double z_sigma() const
  {
    return boost::math::quantile(boost::math::normal(), 0.5 * (1.0 + Pi));
  }
};

inline CornerGeometry contour_geometry(const VehicleParams & params, const LdaConfig & lda)
{
  return CornerGeometry::from_contour(
    params.l_f + lda.inflation, lda.l_r + lda.inflation, params.B_half + lda.inflation);
}

inline Point2 corner_position(const VehicleState & pose, const CornerGeometry & geom, Corner c)
{
  const double angle = pose.psi + geom.bearing(c);
  return Point2(pose.X_c, pose.Y_c) + geom.radius(c) * Point2(std::cos(angle), std::sin(angle));
}

inline std::array<Point2, 4> corner_positions(
  const VehicleState & pose, const CornerGeometry & geom)
{
  std::array<Point2, 4> out;
  for (Corner c : kCorners) {
    out[static_cast<int>(c)] = corner_position(pose, geom, c);
  }
  return out;
}

struct CornerDistribution
{
  Corner corner = Corner::kFrontLeft;
  Point2 mean = Point2::Zero();
  double var_X = 0.0;
  double var_Y = 0.0;
  double cov_XY = 0.0;  // nonzero only with full pose covariance
  double d_hat = 0.0;
  double var_d = 0.0;
  LaneLine line = LaneLine::kLeft;

  double sigma_d() const {return std::sqrt(std::max(var_d, 0.0));}
};

/// First-order corner position distribution. By default the pose states are
/// treated as independent and only variances are propagated.
inline CornerDistribution corner_distribution(
  const GaussianState & belief, const CornerGeometry & geom, Corner c,
  bool full_covariance = false)
{
  const VehicleState & m = belief.mean;
  const double l = geom.radius(c);
  const double angle = m.psi + geom.bearing(c);
  const double sa = std::sin(angle);
  const double ca = std::cos(angle);

  CornerDistribution d;
  d.corner = c;
  d.mean = corner_position(m, geom, c);
  if (!full_covariance) {
    const double var_psi = belief.P(kPsi, kPsi);
    d.var_X = belief.P(kXc, kXc) + l * l * sa * sa * var_psi;
    d.var_Y = belief.P(kYc, kYc) + l * l * ca * ca * var_psi;
    return d;
  }
  Eigen::Matrix<double, 2, 3> J;
  J << 1.0, 0.0, -l * sa,
    0.0, 1.0, l * ca;
  Eigen::Matrix3d pose;
  const int idx[3] = {kXc, kYc, kPsi};
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) {
      pose(r, k) = belief.P(idx[r], idx[k]);
    }
  }
  const Eigen::Matrix2d S = J * pose * J.transpose();
  d.var_X = S(0, 0);
  d.var_Y = S(1, 1);
  d.cov_XY = S(0, 1);
  return d;
}

/// Fills d_hat and var_d of `dist` for one lane line.
inline void marginal_distance(CornerDistribution & dist, const LanePath & path, LaneLine line)
{
  const LineMargin margin = path.margin(dist.mean, line);
  const double gx = margin.gradient(0);
  const double gy = margin.gradient(1);
  dist.line = line;
  dist.d_hat = margin.distance;
  dist.var_d = gx * gx * dist.var_X + gy * gy * dist.var_Y + 2.0 * gx * gy * dist.cov_XY;
}

/// Departure rule: flagged iff d_hat - z * sigma_d < Delta.
inline bool departure_flag(double d_hat, double sigma_d, double z, double Delta)
{
  return d_hat - z * sigma_d < Delta;
}

struct StepAssessment
{
  int i = 0;
  std::array<CornerDistribution, 4> corners;
  std::array<bool, 4> flags{};
  bool aggregate = false;
};

struct DepartureReport
{
  prediction::Algorithm algo = prediction::Algorithm::kKPC;
  int origin_step = 0;
  double t_s = 0.01;
  std::vector<StepAssessment> steps;
  std::optional<int> first_flag_step;

  std::optional<double> first_flag_time() const
  {
    if (!first_flag_step) {return std::nullopt;}
    return *first_flag_step * t_s;
  }
};

/// Assesses one Gaussian pose. Each corner is checked against both lane
/// lines; the reported line is the one with the smaller lower band edge.
inline StepAssessment assess_state(
  const GaussianState & state, const LanePath & path, const CornerGeometry & geom,
  const LdaConfig & lda, double z)
{
  StepAssessment out;
  for (Corner c : kCorners) {
    const int ci = static_cast<int>(c);
    CornerDistribution left = corner_distribution(state, geom, c, lda.full_covariance);
    CornerDistribution right = left;
    marginal_distance(left, path, LaneLine::kLeft);
    marginal_distance(right, path, LaneLine::kRight);
    const double lo_left = left.d_hat - z * left.sigma_d();
    const double lo_right = right.d_hat - z * right.sigma_d();
    out.corners[ci] = lo_left <= lo_right ? left : right;
    out.flags[ci] = departure_flag(
      out.corners[ci].d_hat, out.corners[ci].sigma_d(), z, lda.Delta);
    out.aggregate = out.aggregate || out.flags[ci];
  }
  return out;
}

inline DepartureReport assess(
  const prediction::PredictedTrajectory & traj, const LanePath & path,
  const CornerGeometry & geom, const LdaConfig & lda)
{
  lda.validate();
  const double z = lda.z_sigma();
  DepartureReport report;
  report.algo = traj.algo;
  report.origin_step = traj.origin_step;
  report.t_s = traj.t_s;
  report.steps.reserve(traj.steps.size());
  for (const auto & step : traj.steps) {
    StepAssessment sa = assess_state(step.state, path, geom, lda, z);
    sa.i = step.i;
    if (sa.aggregate && !report.first_flag_step) {
      report.first_flag_step = step.i;
    }
    report.steps.push_back(sa);
  }
  return report;
}

/// Ground-truth label: any contour corner of the true pose has margin < Delta.
inline bool truth_departure(
  const VehicleState & truth, const LanePath & path, const CornerGeometry & geom, double Delta)
{
  for (const Point2 & p : corner_positions(truth, geom)) {
    if (path.margin(p, LaneLine::kLeft).distance < Delta ||
      path.margin(p, LaneLine::kRight).distance < Delta)
    {
      return true;
    }
  }
  return false;
}

}  // namespace ldpred::assessment

#endif  // LDPRED__ASSESSMENT_HPP_
