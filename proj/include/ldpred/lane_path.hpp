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

#ifndef LDPRED__LANE_PATH_HPP_
#define LDPRED__LANE_PATH_HPP_

#include "ldpred/types.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <string>
#include <vector>

namespace ldpred
{

using Point2 = Eigen::Vector2d;

class PathExhausted : public RuntimeFailure
{
public:
  explicit PathExhausted(const std::string & what)
  : RuntimeFailure("control", "path exhausted: " + what) {}
};

/// Straight (curvature == 0) or constant-curvature piece of a centreline.
struct PathSegment
{
  Point2 start = Point2::Zero();
  double heading = 0.0;    // theta_path at the segment start, rad
  double length = 0.0;     // m
  double curvature = 0.0;  // 1/m, positive turns left

  bool is_straight() const {return std::abs(curvature) < 1e-12;}

  double heading_at(double s) const {return heading + curvature * s;}

  Point2 point_at(double s) const
  {
    if (is_straight()) {
      return start + s * Point2(std::cos(heading), std::sin(heading));
    }
    const double th = heading_at(s);
    return start + Point2(
      (std::sin(th) - std::sin(heading)) / curvature,
      (std::cos(heading) - std::cos(th)) / curvature);
  }

  Point2 end() const {return point_at(length);}

  Point2 centre() const
  {
    return start + Point2(-std::sin(heading), std::cos(heading)) / curvature;
  }
};

/// Foot point of a query on one segment. `s` is clamped to the segment.
struct Projection
{
  std::size_t segment = 0;
  double s = 0.0;          // local arc length, clamped to [0, length]
  double s_raw = 0.0;      // unclamped local arc length
  double lateral = 0.0;    // signed offset, positive left of the centreline
  double heading = 0.0;    // path heading at the foot point
  double curvature = 0.0;
  double distance = 0.0;   // unsigned distance to the clamped foot point
};

struct TrackingError
{
  double e1 = 0.0;      // m, positive left
  double e1_dot = 0.0;  // m/s
  double e2 = 0.0;      // rad, wrapped to (-pi, pi]
  double e2_dot = 0.0;  // rad/s

  Vec4 vec() const
  {
    Vec4 v;
    v << e1, e1_dot, e2, e2_dot;
    return v;
  }
};

enum class LaneLine { kLeft, kRight };

inline const char * to_string(LaneLine line)
{
  return line == LaneLine::kLeft ? "left" : "right";
}

/// Signed margin of a point to one lane line (positive inside the lane) and
/// its gradient with respect to the point.
struct LineMargin
{
  double distance = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
};

class LanePath
{
public:
  LanePath() = default;
  LanePath(std::vector<PathSegment> segments, double lane_width)
  : segments_(std::move(segments)), lane_width_(lane_width)
  {
    validate();
  }

  static LanePath straight(Point2 start, double heading, double length, double lane_width)
  {
    return LanePath({PathSegment{start, heading, length, 0.0}}, lane_width);
  }

  const std::vector<PathSegment> & segments() const {return segments_;}
  double lane_width() const {return lane_width_;}

  double total_length() const
  {
    double total = 0.0;
    for (const auto & seg : segments_) {total += seg.length;}
    return total;
  }

  void validate() const
  {
    if (segments_.empty()) {
      throw InvalidArgument("LanePath: at least one segment is required");
    }
    if (!(lane_width_ > 0.0)) {
      throw InvalidArgument("LanePath: lane_width must be > 0");
    }
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      if (!(segments_[i].length > 0.0)) {
        throw InvalidArgument("LanePath: segment lengths must be > 0");
      }
      if (i > 0 && (segments_[i].start - segments_[i - 1].end()).norm() > 1e-6) {
        throw InvalidArgument(
                "LanePath: segments must be continuous (segment " + std::to_string(i) +
                " does not start where the previous one ends)");
      }
    }
  }

  /// Nearest-point projection. The segment with the smallest unsigned
  /// distance wins, ties go to the later segment. Throws PathExhausted when
  /// the foot point lies before the first or beyond the last segment.
  Projection project(const Point2 & p) const
  {
    Projection best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      Projection cand = project_on(i, p);
      if (cand.distance <= best.distance) {
        best = cand;
      }
    }
    constexpr double tol = 1e-9;
    if (best.segment == 0 && best.s_raw < -tol) {
      throw PathExhausted("point lies before the path start");
    }
    if (best.segment + 1 == segments_.size() &&
      best.s_raw > segments_.back().length + tol)
    {
      throw PathExhausted("point lies beyond the path end");
    }
    return best;
  }

  TrackingError tracking_error(const VehicleState & state) const
  {
    const Projection proj = project(Point2(state.X_c, state.Y_c));
    TrackingError err;
    err.e1 = proj.lateral;
    err.e2 = wrap_angle(state.psi - proj.heading);
    err.e1_dot = state.v_y + state.v_x * err.e2;
    err.e2_dot = state.omega_r - state.v_x * proj.curvature;
    return err;
  }

  double curvature_at(const VehicleState & state) const
  {
    return project(Point2(state.X_c, state.Y_c)).curvature;
  }

  /// Jacobian of [e1, e1_dot, e2, e2_dot] with respect to the lateral state.
  Mat45 error_jacobian(const VehicleState & state) const
  {
    const Point2 p(state.X_c, state.Y_c);
    const Projection proj = project(p);
    const auto [de1, de2] = lateral_heading_gradients(proj, p);

    Mat45 J = Mat45::Zero();
    J(0, kXc) = de1(0);
    J(0, kYc) = de1(1);
    J(2, kXc) = de2(0);
    J(2, kYc) = de2(1);
    J(2, kPsi) = 1.0;
    J(1, kVy) = 1.0;
    J(1, kXc) = state.v_x * de2(0);
    J(1, kYc) = state.v_x * de2(1);
    J(1, kPsi) = state.v_x;
    J(3, kWr) = 1.0;
    return J;
  }

  /// Signed lateral offset of an arbitrary point (positive left).
  double lateral_offset(const Point2 & p) const {return project(p).lateral;}

  LineMargin margin(const Point2 & p, LaneLine line) const
  {
    const Projection proj = project(p);
    const Eigen::Vector2d de1 = lateral_heading_gradients(proj, p).first;
    LineMargin out;
    if (line == LaneLine::kLeft) {
      out.distance = 0.5 * lane_width_ - proj.lateral;
      out.gradient = -de1;
    } else {
      out.distance = 0.5 * lane_width_ + proj.lateral;
      out.gradient = de1;
    }
    return out;
  }

private:
  Projection project_on(std::size_t index, const Point2 & p) const
  {
    const PathSegment & seg = segments_[index];
    Projection proj;
    proj.segment = index;
    proj.curvature = seg.curvature;
    if (seg.is_straight()) {
      const Point2 t(std::cos(seg.heading), std::sin(seg.heading));
      const Point2 n(-t.y(), t.x());
      const Point2 d = p - seg.start;
      proj.s_raw = d.dot(t);
      proj.s = std::clamp(proj.s_raw, 0.0, seg.length);
      proj.lateral = d.dot(n);
      proj.heading = seg.heading;
    } else {
      const double r = 1.0 / std::abs(seg.curvature);
      const double sgn = seg.curvature > 0.0 ? 1.0 : -1.0;
      const Point2 c = seg.centre();
      const Point2 v = p - c;
      const Point2 v0 = seg.start - c;
      const double beta0 = std::atan2(v0.y(), v0.x());
      const double beta_mid = beta0 + sgn * 0.5 * seg.length / r;
      const double dbeta = wrap_angle(std::atan2(v.y(), v.x()) - beta_mid);
      proj.s_raw = 0.5 * seg.length + sgn * r * dbeta;
      proj.s = std::clamp(proj.s_raw, 0.0, seg.length);
      proj.heading = seg.heading_at(proj.s);
      if (proj.s == proj.s_raw) {
        proj.lateral = sgn * (r - v.norm());
      }
    }
    const Point2 foot = seg.point_at(proj.s);
    if (proj.s != proj.s_raw || seg.is_straight()) {
      const Point2 n(-std::sin(proj.heading), std::cos(proj.heading));
      proj.lateral = (p - foot).dot(n);
    }
    proj.distance = (p - foot).norm();
    return proj;
  }

  // Gradients of the lateral offset and of the heading error wrt (X, Y).
  std::pair<Eigen::Vector2d, Eigen::Vector2d> lateral_heading_gradients(
    const Projection & proj, const Point2 & p) const
  {
    const PathSegment & seg = segments_[proj.segment];
    const Eigen::Vector2d n(-std::sin(proj.heading), std::cos(proj.heading));
    if (seg.is_straight() || proj.s != proj.s_raw) {
      return {n, Eigen::Vector2d::Zero()};
    }
    const double sgn = seg.curvature > 0.0 ? 1.0 : -1.0;
    const Point2 v = p - seg.centre();
    const double rho2 = v.squaredNorm();
    const Eigen::Vector2d de1 = -sgn * v / std::sqrt(rho2);
    const Eigen::Vector2d dtheta(-v.y() / rho2, v.x() / rho2);
    return {de1, -dtheta};
  }

  std::vector<PathSegment> segments_;
  double lane_width_ = 4.0;
};

}  // namespace ldpred

#endif  // LDPRED__LANE_PATH_HPP_
