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

#ifndef LDPRED__CSV_HPP_
#define LDPRED__CSV_HPP_

#include "ldpred/assessment.hpp"
#include "ldpred/control.hpp"
#include "ldpred/prediction.hpp"
#include "ldpred/simulator.hpp"

#include <fmt/format.h>

#include <ostream>
#include <string>

/// CSV writers. Reals use the shortest round-trip form, so files are exact
/// records of the in-memory values.
namespace ldpred::csv
{

inline std::string num(double v) {return fmt::format("{}", v);}

inline void write_trajectory_header(std::ostream & os)
{
  os << "algo,k,i,t,vy,wr,xc,yc,psi,u_pred";
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {os << ",p" << r << c;}
  }
  os << "\n";
}

/// `t` is the lookahead time i * t_s.
inline void write_trajectory_rows(std::ostream & os, const prediction::PredictedTrajectory & traj)
{
  const char * algo = prediction::to_string(traj.algo);
  for (const auto & st : traj.steps) {
    const Vec5 x = st.state.mean.vec();
    std::string line = fmt::format("{},{},{},{}", algo, traj.origin_step, st.i, num(st.i * traj.t_s));
    for (int n = 0; n < 5; ++n) {line += "," + num(x(n));}
    line += "," + num(st.u_pred);
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) {line += "," + num(st.state.P(r, c));}
    }
    os << line << "\n";
  }
}

inline void write_departure_header(std::ostream & os)
{
  os << "algo,k,i,t,corner,d_hat,sigma_d,flag,aggregate_flag\n";
}

inline void write_departure_rows(std::ostream & os, const assessment::DepartureReport & report)
{
  const char * algo = prediction::to_string(report.algo);
  for (const auto & st : report.steps) {
    for (int c = 0; c < 4; ++c) {
      const auto & d = st.corners[c];
      os << fmt::format("{},{},{},{},{},{},{},{},{}\n", algo, report.origin_step, st.i,
        num(st.i * report.t_s), assessment::to_string(d.corner), num(d.d_hat), num(d.sigma_d()),
        st.flags[c] ? 1 : 0, st.aggregate ? 1 : 0);
    }
  }
}

inline void write_run(std::ostream & os, const sim::RunRecord & rec)
{
  static const char * names[5] = {"vy", "wr", "xc", "yc", "psi"};
  os << "k,t,stage";
  for (const char * prefix : {"", "meas_", "est_", "var_"}) {
    for (const char * n : names) {os << "," << prefix << n;}
  }
  os << ",delta_f,nees\n";
  for (const auto & s : rec.steps) {
    std::string line = fmt::format("{},{},{}", s.k, num(s.t), s.stage);
    const Vec5 truth = s.truth.vec();
    const Vec5 est = s.estimate.mean.vec();
    for (int n = 0; n < 5; ++n) {line += "," + num(truth(n));}
    for (int n = 0; n < 5; ++n) {line += "," + num(s.measurement(n));}
    for (int n = 0; n < 5; ++n) {line += "," + num(est(n));}
    for (int n = 0; n < 5; ++n) {line += "," + num(s.estimate.P(n, n));}
    line += "," + num(s.delta_f) + "," + num(s.nees);
    os << line << "\n";
  }
}

inline void write_summary(std::ostream & os, const sim::McSummary & summary)
{
  os << "i,t,var_calc,var_sample,mse,acc_kpc,acc_ctrv\n";
  for (const auto & s : summary.steps) {
    os << fmt::format("{},{},{},{},{},{},{}\n", s.i, num(s.t), num(s.var_calc),
      num(s.var_sample), num(s.mse), num(s.acc_kpc), num(s.acc_ctrv));
  }
}

/// Corner predictions of every valid run, every `stride` steps (and always
/// at the last step).
inline void write_scatter(std::ostream & os, const sim::McSummary & summary, int stride = 10)
{
  if (stride < 1) {throw InvalidArgument("write_scatter: stride must be >= 1");}
  os << "run,seed,i,t,corner,x_kpc,y_kpc,var_x_kpc,var_y_kpc,x_ctrv,y_ctrv,var_x_ctrv,"
    "var_y_ctrv,x_truth,y_truth,cg_x_truth,cg_y_truth,flag_kpc,flag_ctrv,flag_truth\n";
  for (const auto & r : summary.runs) {
    if (!r.valid) {continue;}
    for (std::size_t j = 0; j < r.track.size(); ++j) {
      const int i = static_cast<int>(j) + 1;
      if (i % stride != 0 && j + 1 != r.track.size()) {continue;}
      const auto & t = r.track[j];
      for (auto c : assessment::kCorners) {
        const auto & s = t.corners[static_cast<int>(c)];
        os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
          r.index, r.seed, i, num(i * summary.t_s), assessment::to_string(c),
          num(s.x_kpc), num(s.y_kpc), num(s.var_x_kpc), num(s.var_y_kpc),
          num(s.x_ctrv), num(s.y_ctrv), num(s.var_x_ctrv), num(s.var_y_ctrv),
          num(s.x_truth), num(s.y_truth), num(t.cg_x_truth), num(t.cg_y_truth),
          t.flag_kpc ? 1 : 0, t.flag_ctrv ? 1 : 0, t.flag_truth ? 1 : 0);
      }
    }
  }
}

inline void write_gains(std::ostream & os, const control::LqrGains & gains)
{
  os << "speed_mps,k1,k2,k3,k4,note\n";
  for (const auto & e : gains.entries()) {
    os << fmt::format("{},{},{},{},{},residual={:.3e};max_real_eig={:.6g}\n", num(e.speed),
      num(e.K(0)), num(e.K(1)), num(e.K(2)), num(e.K(3)), e.residual, e.max_real_eig);
  }
}

}  // namespace ldpred::csv

#endif  // LDPRED__CSV_HPP_
