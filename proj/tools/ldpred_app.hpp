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

#ifndef LDPRED__TOOLS__APP_HPP_
#define LDPRED__TOOLS__APP_HPP_

#include "ldpred/ldpred.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ldpred::app
{

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct Options
{
  std::string command;
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> runs;
  std::optional<int> jobs;
  std::optional<double> t_s;
  std::optional<double> speed_kmh;
  std::string state;
  std::string algo = "kpc";
  std::optional<double> horizon;
};

/// Result files of one command, kept in memory until the command succeeded.
struct Output
{
  std::vector<std::pair<std::string, std::string>> files;  // relative path, contents
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

inline std::string utc_timestamp()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text(const fs::path & file, const std::string & text)
{
  fs::create_directories(file.parent_path());
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) {throw RuntimeFailure("cli", "cannot write " + file.string());}
  os << text;
  if (!os) {throw RuntimeFailure("cli", "short write to " + file.string());}
}

class Manifest
{
public:
  Manifest(const Options & opt, fs::path dir)
  : dir_(std::move(dir))
  {
    doc_["tool"] = "ldpred";
    doc_["version"] = LDPRED_VERSION;
    doc_["command"] = opt.command;
    doc_["config_path"] = opt.config_file.empty() ?
      nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(opt.config_file);
    doc_["config_hash"] = nullptr;
    doc_["output_dir"] = dir_.string();
    doc_["timestamp"] = utc_timestamp();
    doc_["seed"] = nullptr;
    doc_["status"] = "running";
  }

  void resolved(const config::Config & c)
  {
    doc_["config_hash"] = config::config_hash(c);
    doc_["seed"] = c.seed;
  }

  void write() const {write_text(dir_ / "manifest.json", doc_.dump(2) + "\n");}

  void succeed(const Output & out)
  {
    doc_["status"] = "ok";
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto & f : out.files) {files.push_back(f.first);}
    doc_["files"] = files;
    for (const auto & [k, v] : out.extra.items()) {doc_[k] = v;}
    write();
  }

  void fail(int code, const std::string & message)
  {
    doc_["status"] = "failed";
    doc_["exit_code"] = code;
    doc_["error"] = message;
    write();
  }

private:
  fs::path dir_;
  nlohmann::ordered_json doc_;
};

inline VehicleState parse_state(const std::string & text)
{
  std::vector<double> v;
  try {
    v = config::detail::to_list(text, "--state");
  } catch (const config::ConfigError & e) {
    throw InvalidArgument(e.what());
  }
  if (v.size() != 6) {
    throw InvalidArgument("--state: expected 6 comma-separated values vy,wr,xc,yc,psi,vx");
  }
  VehicleState x;
  x.v_y = v[0];
  x.omega_r = v[1];
  x.X_c = v[2];
  x.Y_c = v[3];
  x.psi = v[4];
  x.v_x = v[5];
  require_positive_speed(x.v_x, "--state");
  return x;
}

inline config::Config resolve_config(const Options & opt)
{
  config::Config c = opt.config_file.empty() ?
    config::parse_config("", "<defaults>") : config::load_config(opt.config_file);
  if (opt.seed) {c.seed = *opt.seed;}
  if (opt.runs) {c.runs = *opt.runs;}
  if (opt.jobs) {c.jobs = *opt.jobs;}
  if (opt.t_s) {c.scenario.t_s = *opt.t_s;}
  if (opt.speed_kmh) {c.scenario.v_x = *opt.speed_kmh / 3.6;}
  if (opt.horizon) {
    if (!(*opt.horizon > 0.0)) {throw config::ConfigError("--horizon must be > 0");}
    c.setup.prediction.horizon_steps =
      static_cast<int>(std::lround(*opt.horizon / c.scenario.t_s));
  }
  try {
    c.finalize();
  } catch (const config::ConfigError &) {
    throw;
  } catch (const InvalidArgument & e) {
    throw config::ConfigError(e.what());
  }
  return c;
}

inline std::string first_flag_text(const assessment::DepartureReport & r)
{
  if (!r.first_flag_step) {return "none";}
  return fmt::format("{:.2f} s (step {})", *r.first_flag_time(), *r.first_flag_step);
}

inline Output cmd_simulate(const config::Config & c, std::ostream & out, std::ostream & err)
{
  const auto gains = control::build_gain_table(c.setup.lqr, c.setup.params);
  const sim::RunRecord rec = sim::run_scenario(c.scenario, c.setup, gains, c.seed);
  Output o;
  std::ostringstream run, traj, dep;
  csv::write_run(run, rec);
  csv::write_trajectory_header(traj);
  csv::write_departure_header(dep);
  for (const auto & em : rec.emissions) {
    csv::write_trajectory_rows(traj, em.kpc);
    csv::write_trajectory_rows(traj, em.ctrv);
    csv::write_departure_rows(dep, em.kpc_report);
    csv::write_departure_rows(dep, em.ctrv_report);
  }
  o.files.emplace_back(fmt::format("runs/{}.csv", c.seed), run.str());
  o.files.emplace_back("trajectories.csv", traj.str());
  o.files.emplace_back("departures.csv", dep.str());
  o.extra["valid"] = rec.valid;
  o.extra["activation_step"] = rec.activation_step;
  o.extra["emissions"] = rec.emissions.size();
  if (!rec.valid) {
    o.extra["diagnostic"] = rec.diagnostic;
    err << "warning: run invalid: " << rec.diagnostic << "\n";
  }
  out << fmt::format("steps: {}  activation step: {}  emissions: {}\n",
    rec.steps.size(), rec.activation_step, rec.emissions.size());
  if (!rec.emissions.empty()) {
    const auto & em = rec.emissions.front();
    out << "kpc first flag: " << first_flag_text(em.kpc_report) << "\n";
    out << "ctrv first flag: " << first_flag_text(em.ctrv_report) << "\n";
  }
  return o;
}

inline Output cmd_montecarlo(const config::Config & c, std::ostream & out, std::ostream & err)
{
  const sim::McSummary s =
    sim::run_monte_carlo(c.scenario, c.setup, c.runs, c.seed, c.jobs);
  Output o;
  std::ostringstream summary, scatter, nees;
  csv::write_summary(summary, s);
  csv::write_scatter(scatter, s, c.setup.prediction.emission_stride);
  nees << "k,t,nees_mean\n";
  for (std::size_t k = 0; k < s.nees_mean.size(); ++k) {
    nees << k << "," << csv::num(k * c.scenario.t_s) << "," << csv::num(s.nees_mean[k]) << "\n";
  }
  o.files.emplace_back("summary.csv", summary.str());
  o.files.emplace_back("scatter.csv", scatter.str());
  o.files.emplace_back("nees.csv", nees.str());
  o.extra["runs"] = s.n_runs;
  o.extra["valid_runs"] = s.n_valid;
  o.extra["invalid_runs"] = s.n_runs - s.n_valid;
  if (s.n_valid < s.n_runs) {
    err << fmt::format("warning: {} of {} runs invalid and excluded\n",
      s.n_runs - s.n_valid, s.n_runs);
  }
  out << fmt::format("runs: {}  valid: {}  invalid: {}\n", s.n_runs, s.n_valid,
    s.n_runs - s.n_valid);
  return o;
}

inline Output cmd_predict(
  const config::Config & c, const Options & opt, std::ostream & out, std::ostream &)
{
  const VehicleState x0 = parse_state(opt.state);
  const auto gains = control::build_gain_table(c.setup.lqr, c.setup.params);
  const auto & path = c.scenario.path;
  const double u0 = prediction::predict_control(x0, gains, path);
  const auto filt = estimation::steady_state_filter(
    x0, u0, c.setup.params, c.setup.noise, c.scenario.t_s);
  prediction::PredictionConfig pc = c.setup.prediction;
  pc.rng_seed = derive_seed(c.seed, Stream::kPrediction);

  prediction::PredictedTrajectory traj;
  if (opt.algo == "kpc") {
    traj = prediction::predict_kpc(filt.belief, filt.K, gains, path, c.setup.params,
      c.setup.noise, pc);
  } else if (opt.algo == "kp") {
    traj = prediction::predict_plain(filt.belief, u0, c.setup.params, c.setup.noise, pc);
  } else if (opt.algo == "ctrv") {
    traj = prediction::predict_ctrv(prediction::ctrv_from_belief(filt.belief),
      prediction::ctrv_process_noise(c.setup.noise), pc);
  } else {
    throw InvalidArgument("--algo must be kpc, kp or ctrv");
  }
  const auto report = assessment::assess(
    traj, path, assessment::contour_geometry(c.setup.params, c.setup.lda), c.setup.lda);
  Output o;
  std::ostringstream t, d;
  csv::write_trajectory_header(t);
  csv::write_trajectory_rows(t, traj);
  csv::write_departure_header(d);
  csv::write_departure_rows(d, report);
  o.files.emplace_back("trajectory.csv", t.str());
  o.files.emplace_back("departure.csv", d.str());
  o.extra["algo"] = opt.algo;
  o.extra["first_flag_step"] = report.first_flag_step ?
    nlohmann::ordered_json(*report.first_flag_step) : nlohmann::ordered_json(nullptr);
  out << "first flag: " << first_flag_text(report) << "\n";
  return o;
}

inline Output cmd_dump_gains(const config::Config & c, std::ostream & out, std::ostream &)
{
  const auto gains = control::build_gain_table(c.setup.lqr, c.setup.params);
  std::ostringstream g;
  csv::write_gains(g, gains);
  out << g.str();
  Output o;
  o.files.emplace_back("gains.csv", g.str());
  return o;
}

/// Runs one command. Result files are written only after the command
/// succeeded; the manifest is written first and updated last.
inline int execute(const Options & opt, std::ostream & out, std::ostream & err)
{
  const fs::path dir(opt.out);
  std::optional<Manifest> manifest;
  std::vector<fs::path> written;
  auto fail = [&](int code, const std::string & message) {
      err << "error: " << message << "\n";
      for (const auto & f : written) {
        std::error_code ec;
        fs::remove(f, ec);
      }
      if (manifest) {
        try {
          manifest->fail(code, message);
        } catch (const std::exception & e) {
          err << "error: " << e.what() << "\n";
        }
      }
      return code;
    };

  try {
    manifest.emplace(opt, dir);
    manifest->write();
  } catch (const std::exception & e) {
    manifest.reset();
    return fail(kExitRuntime, e.what());
  }

  try {
    const config::Config c = resolve_config(opt);
    manifest->resolved(c);
    manifest->write();
    Output o;
    if (opt.command == "simulate") {
      o = cmd_simulate(c, out, err);
    } else if (opt.command == "montecarlo") {
      o = cmd_montecarlo(c, out, err);
    } else if (opt.command == "predict") {
      o = cmd_predict(c, opt, out, err);
    } else if (opt.command == "dump-gains") {
      o = cmd_dump_gains(c, out, err);
    } else {
      throw InvalidArgument("unknown command '" + opt.command + "'");
    }
    o.files.emplace_back("resolved.ini", config::dump_config(c));
    for (const auto & [name, text] : o.files) {
      written.push_back(dir / name);
      write_text(dir / name, text);
    }
    manifest->succeed(o);
    return kExitOk;
  } catch (const InvalidArgument & e) {
    return fail(kExitConfig, e.what());
  } catch (const RuntimeFailure & e) {
    return fail(kExitRuntime, e.what());
  } catch (const std::exception & e) {
    return fail(kExitRuntime, e.what());
  }
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Lane departure prediction with closed-loop Kalman prediction"};
  app.set_version_flag("--version", std::string(LDPRED_VERSION));
  app.require_subcommand(1);
  Options opt;

  auto common = [&opt](CLI::App * sub) {
      sub->add_option("config", opt.config_file, "INI configuration file (defaults if omitted)");
      sub->add_option("--seed", opt.seed, "Root seed of all randomness");
      sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
      sub->add_option("--ts", opt.t_s, "Sample time override, s");
      sub->add_option("--speed-kmh", opt.speed_kmh, "Longitudinal speed override, km/h");
    };

  auto * simulate = app.add_subcommand("simulate", "Run one closed-loop scenario");
  common(simulate);
  auto * mc = app.add_subcommand("montecarlo", "Run a Monte Carlo batch");
  common(mc);
  mc->add_option("--runs", opt.runs, "Number of runs");
  mc->add_option("--jobs", opt.jobs, "Worker threads");
  auto * predict = app.add_subcommand("predict", "Predict and assess from one state");
  common(predict);
  predict->add_option("--state", opt.state, "vy,wr,xc,yc,psi,vx")->required();
  predict->add_option("--algo", opt.algo, "kpc, kp or ctrv")
  ->check(CLI::IsMember({"kpc", "kp", "ctrv"}))->capture_default_str();
  predict->add_option("--horizon", opt.horizon, "Prediction horizon, s");
  auto * gains = app.add_subcommand("dump-gains", "Write the LQR gain table");
  common(gains);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }
  for (const auto * sub : app.get_subcommands()) {opt.command = sub->get_name();}
  return execute(opt, out, err);
}

}  // namespace ldpred::app

#endif  // LDPRED__TOOLS__APP_HPP_
