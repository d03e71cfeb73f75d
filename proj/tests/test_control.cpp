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

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace ldpred;
using namespace ldpred::control;

namespace
{

constexpr double kV = 30.0 / 3.6;

LanePath arc_path(double kappa, double length = 800.0)
{
  return LanePath({PathSegment{Point2(0.0, 2.0), 0.0, length, kappa}}, 4.0);
}

// Runs plant + controller with full-state feedback on the truth.
template<typename OnStep>
VehicleState closed_loop(
  VehicleState x, const LanePath & path, const LqrGains & gains, int n, OnStep && on_step)
{
  const VehicleParams & p = gains.params();
  for (int k = 0; k < n; ++k) {
    const double d = prediction::predict_control(x, gains, path);
    on_step(k, x, d);
    x = dynamics::step(x, d, p, 0.01);
  }
  return x;
}

}  // namespace

TEST(ErrorModel, KnownEntries)
{
  const VehicleParams p;
  for (double v : {2.0, kV, 16.0}) {
    const ErrorModel em = error_model(v, p);
    EXPECT_EQ(em.A.row(0), RowVec4(0.0, 1.0, 0.0, 0.0));
    EXPECT_EQ(em.A.row(2), RowVec4(0.0, 0.0, 0.0, 1.0));
  }
  const ErrorModel em = error_model(kV, p);
  EXPECT_NEAR(em.B1(1), 49.261, 1e-3);
  EXPECT_NEAR(em.B1(3), 35.3125, 1e-12);
  EXPECT_EQ(em.B1(0), 0.0);
  EXPECT_EQ(em.B1(2), 0.0);
}

TEST(ErrorModel, RejectsNonPositiveSpeed)
{
  EXPECT_THROW(error_model(0.0, VehicleParams{}), InvalidArgument);
  EXPECT_THROW(error_model(-1.0, VehicleParams{}), InvalidArgument);
}

// Linear error loop against errors extracted from the nonlinear plant.
TEST(ErrorModel, MatchesNonlinearPlantInSmallSignalRegime)
{
  const VehicleParams p;
  const LqrGains gains = build_gain_table(LqrConfig{}, p);
  for (double kappa : {0.0, 0.01}) {
    const LanePath path = arc_path(kappa);
    const ErrorModel em = error_model(kV, p);
    VehicleState x;
    x.v_x = kV;
    x.X_c = 0.0;
    x.Y_c = 2.0 + 0.2;
    x.psi = 0.01;
    x.omega_r = kV * kappa;
    Vec4 e = path.tracking_error(x).vec();

    double max_e1 = 0.0;
    double max_gap = 0.0;
    const double ts = 0.01;
    for (int k = 0; k < 50; ++k) {
      const double d_plant = prediction::predict_control(x, gains, path);
      const double d_model = gains.feedforward(kV, kappa) - gains.feedback(kV).dot(e);
      for (int j = 0; j < 10; ++j) {
        const Vec4 de = em.A * e + em.B1 * d_model + em.B2 * (kV * kappa);
        e += 0.1 * ts * de;
      }
      x = testkit::rk4(x, d_plant, p, 0.1 * ts, 10);
      const double e1 = path.tracking_error(x).e1;
      max_e1 = std::max(max_e1, std::abs(e1));
      max_gap = std::max(max_gap, std::abs(e1 - e(0)));
    }
    EXPECT_LT(max_gap, 0.05 * max_e1) << "kappa " << kappa;
  }
}

TEST(Riccati, ScalarSystem)
{
  Eigen::Matrix<double, 1, 1> A, Q, P;
  Eigen::Matrix<double, 1, 1> B;
  A << 0.0;
  B << 1.0;
  Q << 1.0;
  P = solve_riccati<1>(A, B, Q, 1.0);
  EXPECT_NEAR(P(0, 0), 1.0, 1e-12);
}

TEST(Riccati, ResidualAndStabilityOnTheGrid)
{
  const VehicleParams p;
  for (double W2 : {10.0, 200.0}) {
    LqrConfig cfg;
    cfg.W2 = W2;
    const LqrGains gains = build_gain_table(cfg, p);
    ASSERT_EQ(gains.entries().size(), 12u);
    for (const GainEntry & e : gains.entries()) {
      const ErrorModel em = error_model(e.speed, p);
      const Mat4 P = solve_riccati<4>(em.A, em.B1, cfg.W1, cfg.W2);
      EXPECT_LT(riccati_residual<4>(em.A, em.B1, cfg.W1, cfg.W2, P), 1e-8);
      EXPECT_LT((P - P.transpose()).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat4>(P).eigenvalues().minCoeff(), -1e-9);
      EXPECT_LT(e.residual, 1e-8);
      EXPECT_LT(e.max_real_eig, 0.0) << "v " << e.speed << " W2 " << W2;
    }
  }
}

TEST(Riccati, LargerControlWeightShrinksGain)
{
  const VehicleParams p;
  for (double W2 : {1.0, 10.0, 100.0}) {
    LqrConfig lo;
    lo.W2 = W2;
    LqrConfig hi;
    hi.W2 = 2.0 * W2;
    EXPECT_LT(gain_at_speed(kV, hi, p).K.norm(), gain_at_speed(kV, lo, p).K.norm());
  }
}

TEST(Riccati, UnstabilizablePairFails)
{
  Mat4 A = Mat4::Identity();
  const Vec4 B = Vec4::Zero();
  EXPECT_THROW(solve_riccati<4>(A, B, Mat4::Identity(), 1.0), RiccatiFailure);
  EXPECT_THROW(solve_riccati<4>(A, Vec4(1, 0, 0, 0), Mat4::Identity(), 0.0), InvalidArgument);
}

TEST(Riccati, FailureNamesTheSpeed)
{
  VehicleParams p;
  LqrConfig cfg;
  cfg.W1 = Mat4::Zero();
  cfg.W1(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    gain_at_speed(kV, cfg, p);
    FAIL() << "expected RiccatiFailure";
  } catch (const RiccatiFailure & e) {
    EXPECT_NE(std::string(e.what()).find("v_x"), std::string::npos);
  }
}

TEST(Feedforward, ZeroCurvatureGivesZero)
{
  for (double v : {2.0, kV, 16.0}) {
    EXPECT_EQ(feedforward(v, 0.0, VehicleParams{}), 0.0);
  }
}

TEST(Feedforward, OddInCurvature)
{
  for (double kappa : {0.001, 0.01, 0.05}) {
    EXPECT_DOUBLE_EQ(
      feedforward(kV, -kappa, VehicleParams{}), -feedforward(kV, kappa, VehicleParams{}));
  }
}

// Steady-state steer read from the closed loop on a 100 m circle.
TEST(Feedforward, MatchesSteadyStateOnCircle)
{
  const VehicleParams p;
  const LqrGains gains = build_gain_table(LqrConfig{}, p);
  const double kappa = 0.01;
  const LanePath path = arc_path(kappa);
  VehicleState x;
  x.v_x = kV;
  x.Y_c = 2.0;
  double last = 0.0;
  double prev = 0.0;
  closed_loop(x, path, gains, 6000, [&](int, const VehicleState &, double d) {
      prev = last;
      last = d;
    });
  EXPECT_NEAR(last, prev, 1e-10);
  const double ff = feedforward(kV, kappa, p);
  EXPECT_GT(ff, 0.0);
  EXPECT_NEAR(ff, last, 1e-3 * std::abs(last));
}

TEST(GainTable, SingleSpeedClampsEverywhere)
{
  LqrConfig cfg;
  cfg.speed_grid = {kV};
  const LqrGains gains = build_gain_table(cfg, VehicleParams{});
  const RowVec4 K = gains.entries().front().K;
  for (double v : {0.5, kV, 30.0}) {
    EXPECT_EQ(gains.feedback(v), K);
  }
}

TEST(GainTable, GridSpeedsAreExact)
{
  const LqrGains gains = build_gain_table(LqrConfig{}, VehicleParams{});
  for (const GainEntry & e : gains.entries()) {
    const RowVec4 K = gains.feedback(e.speed);
    EXPECT_EQ(K, e.K);
  }
}

TEST(GainTable, MidpointIsMean)
{
  const LqrGains gains = build_gain_table(LqrConfig{}, VehicleParams{});
  const auto & es = gains.entries();
  for (std::size_t i = 0; i + 1 < es.size(); ++i) {
    const double mid = 0.5 * (es[i].speed + es[i + 1].speed);
    const RowVec4 mean = 0.5 * (es[i].K + es[i + 1].K);
    EXPECT_LT((gains.feedback(mid) - mean).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(GainTable, ClampsOutsideGrid)
{
  const LqrGains gains = build_gain_table(LqrConfig{}, VehicleParams{});
  EXPECT_EQ(gains.feedback(0.1), gains.entries().front().K);
  EXPECT_EQ(gains.feedback(100.0), gains.entries().back().K);
}

TEST(GainTable, ZeroFeedbackOption)
{
  LqrConfig cfg;
  cfg.zero_feedback = true;
  const LqrGains gains = build_gain_table(cfg, VehicleParams{});
  for (const GainEntry & e : gains.entries()) {
    EXPECT_EQ(e.K, RowVec4::Zero());
  }
}

TEST(LqrConfig, Validation)
{
  LqrConfig cfg;
  cfg.W2 = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = LqrConfig{};
  cfg.W1(0, 1) = 0.5;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = LqrConfig{};
  cfg.W1(0, 0) = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = LqrConfig{};
  cfg.speed_grid = {5.0, 5.0};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.speed_grid = {};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = LqrConfig{};
  cfg.max_steer = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(ControlLaw, ZeroErrorStraightIsZero)
{
  const LqrGains gains = build_gain_table(LqrConfig{}, VehicleParams{});
  EXPECT_EQ(control_law(TrackingError{}, gains, kV, 0.0), 0.0);
}

TEST(ControlLaw, UnitLateralErrorGivesMinusK1)
{
  const LqrGains gains = build_gain_table(LqrConfig{}, VehicleParams{});
  TrackingError e;
  e.e1 = 1.0;
  EXPECT_DOUBLE_EQ(control_law(e, gains, kV, 0.0), -gains.feedback(kV)(0));
}

TEST(ControlLaw, LinearBelowSaturation)
{
  const LqrGains gains = build_gain_table(LqrConfig{}, VehicleParams{});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int n = 0; n < 100; ++n) {
    TrackingError e{u(rng), u(rng), u(rng), u(rng)};
    const double kappa = 0.2 * u(rng);
    const double alpha = 1.0 + 10.0 * u(rng);
    TrackingError scaled{alpha * e.e1, alpha * e.e1_dot, alpha * e.e2, alpha * e.e2_dot};
    const double ff = gains.feedforward(kV, kappa);
    ASSERT_FALSE(control_saturated(scaled, gains, kV, kappa));
    EXPECT_NEAR(
      control_law(scaled, gains, kV, kappa) - ff,
      alpha * (control_law(e, gains, kV, kappa) - ff), 1e-12);
  }
}

TEST(ControlLaw, Saturates)
{
  const LqrGains gains = build_gain_table(LqrConfig{}, VehicleParams{});
  TrackingError e;
  e.e1 = 100.0;
  EXPECT_TRUE(control_saturated(e, gains, kV, 0.0));
  EXPECT_EQ(std::abs(control_law(e, gains, kV, 0.0)), 0.6);
  e.e1 = -100.0;
  EXPECT_EQ(std::abs(control_law(e, gains, kV, 0.0)), 0.6);
}

TEST(ControlLaw, HeadingWrapContinuity)
{
  const LanePath path = testkit::default_lane();
  VehicleState x;
  x.v_x = kV;
  x.Y_c = 2.3;
  x.psi = 0.02;
  VehicleState wrapped = x;
  wrapped.psi += 2.0 * std::numbers::pi;
  EXPECT_NEAR(path.tracking_error(wrapped).e2, path.tracking_error(x).e2, 1e-12);
}

TEST(ControlLaw, RecoversFromLateralOffset)
{
  const VehicleParams p;
  const LqrGains gains = build_gain_table(LqrConfig{}, p);
  const LanePath path = testkit::default_lane();
  const auto geom = assessment::contour_geometry(p, assessment::LdaConfig{});
  VehicleState x;
  x.v_x = kV;
  x.Y_c = 2.8;
  bool departed = false;
  double max_ay = 0.0;
  const VehicleState end = closed_loop(x, path, gains, 1000, [&](int, const VehicleState & s, double d) {
      departed = departed || assessment::truth_departure(s, path, geom, 0.0);
      max_ay = std::max(max_ay, std::abs(dynamics::lateral_acceleration(s, d, p)));
    });
  EXPECT_FALSE(departed);
  EXPECT_LT(max_ay, 0.4 * 9.81);
  EXPECT_LT(std::abs(path.tracking_error(end).e1), 0.05);
}
