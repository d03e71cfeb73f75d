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

#ifndef LDPRED__SIMULATOR_HPP_
#define LDPRED__SIMULATOR_HPP_

#include "ldpred/assessment.hpp"
#include "ldpred/control.hpp"
#include "ldpred/dynamics.hpp"
#include "ldpred/estimation.hpp"
#include "ldpred/lane_path.hpp"
#include "ldpred/prediction.hpp"
#include "ldpred/random.hpp"
#include "ldpred/types.hpp"

#include <array>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace ldpred::sim
{

enum class DisturbanceMode { kSteeringPulse, kInitialOffset };

/// Lane keeping incident: straight driving at the centre, a disturbance that
/// pushes the vehicle towards the left line, then the LQR loop closes on the
/// EKF estimate.
struct Scenario
{
  LanePath path = LanePath::straight(Point2(-50.0, 2.0), 0.0, 1000.0, 4.0);
  double v_x = 30.0 / 3.6;
  double t_s = 0.01;

  DisturbanceMode mode = DisturbanceMode::kSteeringPulse;
  double settle_time = 3.0;       // s of straight driving before stage 1
  double pulse_steer = 0.013;     // rad, stage-1 steering (pulse mode)
  double pulse_duration = 0.8;    // s
  double initial_e1 = 0.0;        // m, initial-offset mode
  double initial_e2 = 0.0;        // rad, initial-offset mode
  double activation_delay = 0.0;  // s between the end of stage 1 and LQR activation
  double post_activation = 4.0;   // s simulated after activation

  Mat5 R_inject = Vec5(1e-6, 1e-6, 1.0, 1.0, 1e-2).asDiagonal();
  bool process_noise = true;      // drive the truth with w ~ N(0, Q)
  double a_y_limit = 0.4 * 9.81;  // linear-tyre validity bound, m/s^2

  int activation_step() const
  {
    const double t = mode == DisturbanceMode::kSteeringPulse ?
      settle_time + pulse_duration + activation_delay : settle_time + activation_delay;
    return static_cast<int>(std::lround(t / t_s));
  }

  int total_steps() const
  {
    return activation_step() + static_cast<int>(std::lround(post_activation / t_s)) + 1;
  }

  int stage_of(int k) const
  {
    if (k >= activation_step()) {return 2;}
    const int settle = static_cast<int>(std::lround(settle_time / t_s));
    return k < settle ? 0 : 1;
  }

  double open_loop_steer(int k) const
  {
    if (mode != DisturbanceMode::kSteeringPulse) {return 0.0;}
    const int start = static_cast<int>(std::lround(settle_time / t_s));
    const int end = start + static_cast<int>(std::lround(pulse_duration / t_s));
    return (k >= start && k < end) ? pulse_steer : 0.0;
  }

  VehicleState initial_truth() const
  {
    const PathSegment & seg = path.segments().front();
    // Start 50 m into the path so the projection stays on the first segment.
    const double s0 = std::min(50.0, 0.5 * seg.length);
    const Point2 p = seg.point_at(s0);
    const double th = seg.heading_at(s0);
    VehicleState x;
    x.v_x = v_x;
    x.psi = th;
    x.X_c = p.x();
    x.Y_c = p.y();
    if (mode == DisturbanceMode::kInitialOffset) {
      x.X_c -= initial_e1 * std::sin(th);
      x.Y_c += initial_e1 * std::cos(th);
      x.psi += initial_e2;
    }
    return x;
  }

  void validate(const VehicleParams & params) const
  {
    path.validate();
    if (!(path.lane_width() > 2.0 * params.B_half)) {
      throw InvalidArgument("Scenario: lane_width must exceed the vehicle width 2*B_half");
    }
    require_positive_speed(v_x, "Scenario");
    if (!(t_s > 0.0)) {throw InvalidArgument("Scenario: t_s must be > 0");}
    if (settle_time < 0.0 || pulse_duration < 0.0 || activation_delay < 0.0 ||
      !(post_activation > 0.0))
    {
      throw InvalidArgument("Scenario: stage durations must be non-negative");
    }
  }
};

/// Everything a run needs besides the scenario itself.
struct Setup
{
  VehicleParams params;
  control::LqrConfig lqr;
  estimation::NoiseSpec noise;
  prediction::PredictionConfig prediction;
  assessment::LdaConfig lda;
};

struct StepRecord
{
  int k = 0;
  double t = 0.0;
  int stage = 0;
  VehicleState truth;
  Vec5 measurement = Vec5::Zero();
  GaussianState estimate;
  double delta_f = 0.0;
  double nees = 0.0;
};

struct Emission
{
  int k = 0;
  prediction::PredictedTrajectory kpc;
  prediction::PredictedTrajectory ctrv;
  assessment::DepartureReport kpc_report;
  assessment::DepartureReport ctrv_report;
};

struct RunRecord
{
  std::uint64_t seed = 0;
  bool valid = true;
  std::string diagnostic;
  int activation_step = 0;
  std::vector<StepRecord> steps;
  std::vector<Emission> emissions;
};

enum class EmissionPolicy { kAll, kActivationOnly };

inline Emission make_emission(
  int k, const GaussianState & belief, const Mat5 & K_k, const Scenario & scenario,
  const Setup & setup, const control::LqrGains & gains, std::uint64_t run_seed)
{
  Emission em;
  em.k = k;
  Rng rng(derive_seed(derive_seed(run_seed, Stream::kPrediction), static_cast<std::uint64_t>(k)));
  em.kpc = prediction::predict_kpc(
    belief, K_k, gains, scenario.path, setup.params, setup.noise, setup.prediction, rng);
  em.kpc.origin_step = k;
  em.ctrv = prediction::predict_ctrv(
    prediction::ctrv_from_belief(belief), prediction::ctrv_process_noise(setup.noise),
    setup.prediction);
  em.ctrv.origin_step = k;
  const auto geom = assessment::contour_geometry(setup.params, setup.lda);
  em.kpc_report = assessment::assess(em.kpc, scenario.path, geom, setup.lda);
  em.ctrv_report = assessment::assess(em.ctrv, scenario.path, geom, setup.lda);
  return em;
}

/// One closed-loop run. Runs whose true lateral acceleration leaves the
/// linear-tyre range are marked invalid instead of raising.
inline RunRecord run_scenario(
  const Scenario & scenario, const Setup & setup, const control::LqrGains & gains,
  std::uint64_t seed, EmissionPolicy policy = EmissionPolicy::kAll)
{
  scenario.validate(setup.params);
  setup.noise.validate();
  setup.prediction.validate();
  if (std::abs(setup.prediction.t_s - scenario.t_s) > 1e-15) {
    throw InvalidArgument("run_scenario: prediction t_s must equal the scenario t_s");
  }

  RunRecord rec;
  rec.seed = seed;
  rec.activation_step = scenario.activation_step();
  const int n_steps = scenario.total_steps();
  const int horizon = setup.prediction.horizon_steps;
  const int stride = setup.prediction.emission_stride;
  rec.steps.reserve(n_steps);

  Rng meas_rng(derive_seed(seed, Stream::kMeasurement));
  Rng proc_rng(derive_seed(seed, Stream::kProcess));
  const GaussianSampler<5> meas_noise(scenario.R_inject);
  const GaussianSampler<5> proc_noise(
    scenario.process_noise ? setup.noise.Q : Mat5(Mat5::Zero()));

  VehicleState truth = scenario.initial_truth();
  GaussianState belief;
  Mat5 gain = Mat5::Zero();
  double prev_delta = 0.0;

  for (int k = 0; k < n_steps; ++k) {
    StepRecord sr;
    sr.k = k;
    sr.t = k * scenario.t_s;
    sr.stage = scenario.stage_of(k);
    sr.truth = truth;
    sr.measurement = truth.vec() + meas_noise(meas_rng);

    if (k == 0) {
      belief = estimation::initial_belief(sr.measurement, scenario.v_x, setup.noise);
      gain.setZero();
    } else {
      const auto corr = estimation::ekf_step(
        belief, prev_delta, sr.measurement, setup.params, setup.noise, scenario.t_s);
      belief = corr.belief;
      gain = corr.K;
    }
    sr.estimate = belief;
    sr.nees = estimation::nees(belief, truth);

    if (sr.stage == 2) {
      sr.delta_f = prediction::predict_control(belief.mean, gains, scenario.path);
      const int since = k - rec.activation_step;
      const bool wanted = policy == EmissionPolicy::kAll ? since % stride == 0 : since == 0;
      if (wanted && k + horizon < n_steps) {
        rec.emissions.push_back(make_emission(k, belief, gain, scenario, setup, gains, seed));
      }
    } else {
      sr.delta_f = scenario.open_loop_steer(k);
    }
    rec.steps.push_back(sr);

    const double a_y = dynamics::lateral_acceleration(truth, sr.delta_f, setup.params);
    if (rec.valid && !(std::abs(a_y) < scenario.a_y_limit)) {
      rec.valid = false;
      rec.diagnostic = "lateral acceleration " + std::to_string(a_y) +
        " m/s^2 at step " + std::to_string(k) + " leaves the linear tyre range";
    }

    truth = dynamics::step(truth, sr.delta_f, setup.params, scenario.t_s);
    const Vec5 w = proc_noise(proc_rng);
    truth = VehicleState::from_vec(truth.vec() + w, truth.v_x);
    prev_delta = sr.delta_f;
  }
  return rec;
}

// --- Monte Carlo ---------------------------------------------------------

/// One contour corner of the activation-step prediction at one step.
struct CornerSample
{
  double x_kpc = 0.0, y_kpc = 0.0, var_x_kpc = 0.0, var_y_kpc = 0.0;
  double x_ctrv = 0.0, y_ctrv = 0.0, var_x_ctrv = 0.0, var_y_ctrv = 0.0;
  double x_truth = 0.0, y_truth = 0.0;
};

/// Per-step quantities of the activation-step prediction of one run.
struct CornerTrack
{
  std::array<CornerSample, 4> corners;
  double cg_x_truth = 0.0, cg_y_truth = 0.0;
  bool flag_kpc = false, flag_ctrv = false, flag_truth = false;
  double spectral_radius_lateral = 0.0;

  const CornerSample & fl() const {return corners[0];}
};

struct RunMetrics
{
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool valid = false;
  std::string diagnostic;
  std::vector<CornerTrack> track;  // i = 1 .. horizon
  std::vector<double> nees;        // per time step
  std::optional<int> first_flag_kpc;
  std::optional<int> first_flag_ctrv;
};

struct McStep
{
  int i = 0;
  double t = 0.0;
  double var_calc = 0.0;
  double var_sample = 0.0;
  double mse = 0.0;
  double acc_kpc = 0.0;
  double acc_ctrv = 0.0;
  double mean_abs_err_kpc = 0.0;
  double mean_abs_err_ctrv = 0.0;
};

struct McSummary
{
  int n_runs = 0;
  int n_valid = 0;
  int activation_step = 0;
  double t_s = 0.01;
  std::vector<McStep> steps;
  std::vector<double> nees_mean;  // per time step, over valid runs
  std::vector<RunMetrics> runs;
};

/// Spectral radius of the transition restricted to the lateral subspace: the
/// along-path position is dropped, since nothing feeds back on it.
inline double lateral_spectral_radius(const Mat5 & Phi, double path_heading)
{
  Mat5 T = Mat5::Identity();
  const double c = std::cos(path_heading);
  const double s = std::sin(path_heading);
  T(kXc, kXc) = c;
  T(kXc, kYc) = s;
  T(kYc, kXc) = -s;
  T(kYc, kYc) = c;
  const Mat5 M = T * Phi * T.transpose();
  Mat4 lat;
  const int idx[4] = {kVy, kWr, kYc, kPsi};
  for (int r = 0; r < 4; ++r) {
    for (int k = 0; k < 4; ++k) {
      lat(r, k) = M(idx[r], idx[k]);
    }
  }
  return Eigen::EigenSolver<Mat4>(lat).eigenvalues().cwiseAbs().maxCoeff();
}

inline RunMetrics summarize_run(
  const RunRecord & rec, const Scenario & scenario, const Setup & setup)
{
  RunMetrics m;
  m.seed = rec.seed;
  m.valid = rec.valid;
  m.diagnostic = rec.diagnostic;
  m.nees.reserve(rec.steps.size());
  for (const auto & s : rec.steps) {m.nees.push_back(s.nees);}
  if (rec.emissions.empty() || rec.emissions.front().k != rec.activation_step) {
    m.valid = false;
    if (m.diagnostic.empty()) {m.diagnostic = "no prediction at the activation step";}
    return m;
  }
  const Emission & em = rec.emissions.front();
  const auto geom = assessment::contour_geometry(setup.params, setup.lda);
  m.first_flag_kpc = em.kpc_report.first_flag_step;
  m.first_flag_ctrv = em.ctrv_report.first_flag_step;
  m.track.resize(em.kpc.steps.size());
  for (std::size_t j = 0; j < em.kpc.steps.size(); ++j) {
    CornerTrack & ct = m.track[j];
    const VehicleState & truth = rec.steps[em.k + em.kpc.steps[j].i].truth;
    const auto truth_corners = assessment::corner_positions(truth, geom);
    for (int c = 0; c < 4; ++c) {
      const auto & kc = em.kpc_report.steps[j].corners[c];
      const auto & cc = em.ctrv_report.steps[j].corners[c];
      CornerSample & cs = ct.corners[c];
      cs.x_kpc = kc.mean.x();
      cs.y_kpc = kc.mean.y();
      cs.var_x_kpc = kc.var_X;
      cs.var_y_kpc = kc.var_Y;
      cs.x_ctrv = cc.mean.x();
      cs.y_ctrv = cc.mean.y();
      cs.var_x_ctrv = cc.var_X;
      cs.var_y_ctrv = cc.var_Y;
      cs.x_truth = truth_corners[c].x();
      cs.y_truth = truth_corners[c].y();
    }
    ct.cg_x_truth = truth.X_c;
    ct.cg_y_truth = truth.Y_c;
    ct.flag_kpc = em.kpc_report.steps[j].aggregate;
    ct.flag_ctrv = em.ctrv_report.steps[j].aggregate;
    ct.flag_truth = assessment::truth_departure(truth, scenario.path, geom, setup.lda.Delta);
    const double heading = scenario.path.project(
      Point2(em.kpc.steps[j].state.mean.X_c, em.kpc.steps[j].state.mean.Y_c)).heading;
    ct.spectral_radius_lateral = lateral_spectral_radius(em.kpc.steps[j].transition, heading);
  }
  return m;
}

/// Per-run seed: counter-derived from the batch seed.
inline std::uint64_t run_seed(std::uint64_t base_seed, std::size_t index)
{
  return derive_seed(base_seed, static_cast<std::uint64_t>(index));
}

struct AccuracyPoint
{
  int i = 0;
  double t = 0.0;
  double acc_kpc = 0.0;
  double acc_ctrv = 0.0;
};

/// Fraction of valid runs whose predicted flag equals the truth flag.
inline std::vector<AccuracyPoint> accuracy_curve(const McSummary & summary)
{
  std::vector<AccuracyPoint> out;
  if (summary.runs.empty()) {return out;}
  std::size_t horizon = 0;
  for (const auto & r : summary.runs) {
    if (r.valid) {horizon = std::max(horizon, r.track.size());}
  }
  for (std::size_t j = 0; j < horizon; ++j) {
    int n = 0, ok_kpc = 0, ok_ctrv = 0;
    for (const auto & r : summary.runs) {
      if (!r.valid || j >= r.track.size()) {continue;}
      ++n;
      ok_kpc += r.track[j].flag_kpc == r.track[j].flag_truth;
      ok_ctrv += r.track[j].flag_ctrv == r.track[j].flag_truth;
    }
    AccuracyPoint p;
    p.i = static_cast<int>(j) + 1;
    p.t = p.i * summary.t_s;
    p.acc_kpc = n > 0 ? static_cast<double>(ok_kpc) / n : 0.0;
    p.acc_ctrv = n > 0 ? static_cast<double>(ok_ctrv) / n : 0.0;
    out.push_back(p);
  }
  return out;
}

inline McSummary aggregate(std::vector<RunMetrics> runs, double t_s, int activation_step)
{
  McSummary s;
  s.n_runs = static_cast<int>(runs.size());
  s.t_s = t_s;
  s.activation_step = activation_step;
  std::vector<const RunMetrics *> valid;
  for (const auto & r : runs) {
    if (r.valid) {valid.push_back(&r);}
  }
  s.n_valid = static_cast<int>(valid.size());
  if (valid.empty()) {
    throw RuntimeFailure("simulator", "all Monte Carlo runs are invalid");
  }
  const std::size_t horizon = valid.front()->track.size();
  const double n = static_cast<double>(valid.size());
  s.runs = std::move(runs);

  const auto acc = accuracy_curve(s);
  for (std::size_t j = 0; j < horizon; ++j) {
    McStep st;
    st.i = static_cast<int>(j) + 1;
    st.t = st.i * t_s;
    double mean_y = 0.0;
    for (const auto * r : valid) {
      const CornerSample & c = r->track[j].fl();
      st.var_calc += c.var_y_kpc;
      mean_y += c.y_kpc;
      st.mse += (c.y_kpc - c.y_truth) * (c.y_kpc - c.y_truth);
      st.mean_abs_err_kpc += std::abs(c.y_kpc - c.y_truth);
      st.mean_abs_err_ctrv += std::abs(c.y_ctrv - c.y_truth);
    }
    st.var_calc /= n;
    mean_y /= n;
    st.mse /= n;
    st.mean_abs_err_kpc /= n;
    st.mean_abs_err_ctrv /= n;
    double ss = 0.0;
    for (const auto * r : valid) {
      const double d = r->track[j].fl().y_kpc - mean_y;
      ss += d * d;
    }
    st.var_sample = valid.size() > 1 ? ss / (n - 1.0) : 0.0;
    st.acc_kpc = acc[j].acc_kpc;
    st.acc_ctrv = acc[j].acc_ctrv;
    s.steps.push_back(st);
  }

  const std::size_t n_time = valid.front()->nees.size();
  s.nees_mean.assign(n_time, 0.0);
  for (const auto * r : valid) {
    for (std::size_t k = 0; k < n_time; ++k) {s.nees_mean[k] += r->nees[k];}
  }
  for (double & v : s.nees_mean) {v /= n;}
  return s;
}

/// Runs `n_runs` independent replicas on up to `jobs` threads. The result does
/// not depend on `jobs` or on completion order.
inline McSummary run_monte_carlo(
  const Scenario & scenario, const Setup & setup, int n_runs, std::uint64_t base_seed,
  int jobs = 1)
{
  if (n_runs < 2) {
    throw InvalidArgument("run_monte_carlo: n_runs must be >= 2");
  }
  const control::LqrGains gains = control::build_gain_table(setup.lqr, setup.params);
  std::vector<RunMetrics> runs(static_cast<std::size_t>(n_runs));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
      for (;;) {
        const std::size_t idx = next.fetch_add(1);
        if (idx >= runs.size()) {return;}
        try {
          const std::uint64_t seed = run_seed(base_seed, idx);
          const RunRecord rec =
            run_scenario(scenario, setup, gains, seed, EmissionPolicy::kActivationOnly);
          runs[idx] = summarize_run(rec, scenario, setup);
          runs[idx].index = idx;
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) {failure = std::current_exception();}
          next.store(runs.size());
          return;
        }
      }
    };

  const int workers = std::max(1, std::min(jobs, n_runs));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {pool.emplace_back(worker);}
  }
  if (failure) {std::rethrow_exception(failure);}
  return aggregate(std::move(runs), scenario.t_s, scenario.activation_step());
}

}  // namespace ldpred::sim

#endif  // LDPRED__SIMULATOR_HPP_
