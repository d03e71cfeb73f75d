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

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace ldpred;

namespace
{

// Straight 100 m east, then a left arc of radius 50 m over a quarter turn.
LanePath straight_then_arc()
{
  const PathSegment s0{Point2(0.0, 0.0), 0.0, 100.0, 0.0};
  const double kappa = 1.0 / 50.0;
  const PathSegment s1{s0.end(), 0.0, 50.0 * std::numbers::pi / 2.0, kappa};
  return LanePath({s0, s1}, 4.0);
}

VehicleState at(double x, double y, double psi, double v_x = 10.0)
{
  VehicleState s;
  s.X_c = x;
  s.Y_c = y;
  s.psi = psi;
  s.v_x = v_x;
  return s;
}

}  // namespace

TEST(TrackingError, OnCentreline)
{
  const LanePath path = testkit::default_lane();
  const TrackingError e = path.tracking_error(at(10.0, 2.0, 0.0));
  EXPECT_EQ(e.e1, 0.0);
  EXPECT_EQ(e.e2, 0.0);
  EXPECT_EQ(e.e1_dot, 0.0);
  EXPECT_EQ(e.e2_dot, 0.0);
}

TEST(TrackingError, LateralOffsetPositiveLeft)
{
  const LanePath path = testkit::default_lane();
  EXPECT_DOUBLE_EQ(path.tracking_error(at(10.0, 2.5, 0.0)).e1, 0.5);
  EXPECT_DOUBLE_EQ(path.tracking_error(at(10.0, 1.25, 0.0)).e1, -0.75);
}

TEST(TrackingError, RateSubstitution)
{
  const LanePath path = testkit::default_lane();
  VehicleState s = at(0.0, 2.0, 0.05, 10.0);
  s.v_y = 0.2;
  s.omega_r = 0.01;
  const TrackingError e = path.tracking_error(s);
  EXPECT_NEAR(e.e1_dot, 0.7, 1e-12);
  EXPECT_DOUBLE_EQ(e.e2_dot, 0.01);
}

TEST(TrackingError, HeadingErrorIsWrapped)
{
  const LanePath path = testkit::default_lane();
  const double e = path.tracking_error(at(0.0, 2.0, 0.3)).e2;
  EXPECT_NEAR(path.tracking_error(at(0.0, 2.0, 0.3 + 2.0 * std::numbers::pi)).e2, e, 1e-14);
  EXPECT_NEAR(path.tracking_error(at(0.0, 2.0, 0.3 - 6.0 * std::numbers::pi)).e2, e, 1e-14);
}

TEST(TrackingError, ArcGeometry)
{
  const LanePath path = straight_then_arc();
  const Point2 c(100.0, 50.0);
  // Point 1 m inside the arc (towards the centre) at 30 degrees of travel.
  const double beta = -std::numbers::pi / 2.0 + std::numbers::pi / 6.0;
  const Point2 p = c + 49.0 * Point2(std::cos(beta), std::sin(beta));
  const TrackingError e = path.tracking_error(at(p.x(), p.y(), std::numbers::pi / 6.0));
  EXPECT_NEAR(e.e1, 1.0, 1e-12);
  EXPECT_NEAR(e.e2, 0.0, 1e-12);
  EXPECT_NEAR(e.e2_dot, -10.0 / 50.0, 1e-12);
  EXPECT_DOUBLE_EQ(path.curvature_at(at(p.x(), p.y(), 0.0)), 1.0 / 50.0);
}

TEST(TrackingError, PathExhausted)
{
  const LanePath path = testkit::default_lane();
  EXPECT_THROW(path.tracking_error(at(-60.0, 2.0, 0.0)), PathExhausted);
  EXPECT_THROW(path.tracking_error(at(951.0, 2.0, 0.0)), PathExhausted);
  EXPECT_NO_THROW(path.tracking_error(at(950.0, 2.0, 0.0)));
  try {
    path.tracking_error(at(2000.0, 2.0, 0.0));
    FAIL();
  } catch (const PathExhausted & e) {
    EXPECT_NE(std::string(e.what()).find("beyond the path end"), std::string::npos);
  }
}

TEST(LanePath, RejectsDiscontinuousSegments)
{
  const PathSegment a{Point2(0.0, 0.0), 0.0, 10.0, 0.0};
  const PathSegment b{Point2(10.5, 0.0), 0.0, 10.0, 0.0};
  EXPECT_THROW(LanePath({a, b}, 4.0), InvalidArgument);
  EXPECT_THROW(LanePath({}, 4.0), InvalidArgument);
  EXPECT_THROW(LanePath({a}, 0.0), InvalidArgument);
  EXPECT_NO_THROW(straight_then_arc());
}

TEST(LanePath, TieGoesToLaterSegment)
{
  const PathSegment a{Point2(0.0, 0.0), 0.0, 10.0, 0.0};
  const PathSegment b{Point2(10.0, 0.0), 0.0, 10.0, 0.0};
  const LanePath path({a, b}, 4.0);
  EXPECT_EQ(path.project(Point2(10.0, 1.0)).segment, 1u);
  EXPECT_EQ(path.project(Point2(9.0, 1.0)).segment, 0u);
}

TEST(LanePath, ArcEndMatchesQuarterTurn)
{
  const LanePath path = straight_then_arc();
  const Point2 end = path.segments().back().end();
  EXPECT_NEAR(end.x(), 150.0, 1e-9);
  EXPECT_NEAR(end.y(), 50.0, 1e-9);
  EXPECT_NEAR(path.segments().back().heading_at(path.segments().back().length),
    std::numbers::pi / 2.0, 1e-12);
}

TEST(ErrorJacobian, MatchesFiniteDifferencesOnStraight)
{
  const LanePath path = LanePath::straight(Point2(-100.0, -3.0), 0.4, 400.0, 4.0);
  std::mt19937_64 rng(21);
  for (int n = 0; n < 100; ++n) {
    VehicleState x = testkit::random_state(rng);
    x.psi = 0.4 + 0.5 * (x.psi / 3.0);
    const auto fd = testkit::numeric_jacobian<4>(
      [&](const VehicleState & s) {return path.tracking_error(s).vec();}, x);
    EXPECT_LT((fd - path.error_jacobian(x)).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(ErrorJacobian, MatchesFiniteDifferencesOnArc)
{
  const LanePath path = straight_then_arc();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ang(-1.3, -0.2);
  std::uniform_real_distribution<double> rad(45.0, 55.0);
  const Point2 c(100.0, 50.0);
  for (int n = 0; n < 100; ++n) {
    VehicleState x = testkit::random_state(rng);
    const double beta = ang(rng);
    const Point2 p = c + rad(rng) * Point2(std::cos(beta), std::sin(beta));
    x.X_c = p.x();
    x.Y_c = p.y();
    x.psi = beta + std::numbers::pi / 2.0 + 0.1 * (x.psi / 3.0);
    const auto fd = testkit::numeric_jacobian<4>(
      [&](const VehicleState & s) {return path.tracking_error(s).vec();}, x);
    EXPECT_LT((fd - path.error_jacobian(x)).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(Margin, AxisAlignedLines)
{
  const LanePath path = testkit::default_lane();
  const LineMargin left = path.margin(Point2(10.0, 3.0), LaneLine::kLeft);
  EXPECT_DOUBLE_EQ(left.distance, 1.0);
  EXPECT_DOUBLE_EQ(left.gradient(0), 0.0);
  EXPECT_DOUBLE_EQ(left.gradient(1), -1.0);
  const LineMargin right = path.margin(Point2(10.0, 3.0), LaneLine::kRight);
  EXPECT_DOUBLE_EQ(right.distance, 3.0);
  EXPECT_DOUBLE_EQ(path.margin(Point2(0.0, 4.0), LaneLine::kLeft).distance, 0.0);
  EXPECT_LT(path.margin(Point2(0.0, 4.5), LaneLine::kLeft).distance, 0.0);
}

TEST(Margin, RotatedLineMatchesPointLineDistance)
{
  const double th = 0.3;
  const Point2 o(-200.0, 1.0);
  const LanePath path = LanePath::straight(o, th, 600.0, 4.0);
  const Point2 t(std::cos(th), std::sin(th));
  const Point2 n(-t.y(), t.x());
  const Point2 left_point = o + 2.0 * n;
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Point2 p = o + (200.0 + 100.0 * u(rng)) * t + 3.0 * u(rng) * n;
    // Distance to the line through left_point with direction t, positive on the lane side.
    const Point2 d = p - left_point;
    const double oracle = -(t.x() * d.y() - t.y() * d.x());
    const LineMargin m = path.margin(p, LaneLine::kLeft);
    EXPECT_NEAR(m.distance, oracle, 1e-9);
    EXPECT_NEAR(m.gradient(0), std::sin(th), 1e-12);
    EXPECT_NEAR(m.gradient(1), -std::cos(th), 1e-12);
  }
}
