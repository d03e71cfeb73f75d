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

#ifndef LDPRED__CONFIG_HPP_
#define LDPRED__CONFIG_HPP_

#include "ldpred/simulator.hpp"
#include "ldpred/types.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

/// Sectioned key = value configuration. Every resolved parameter has exactly
/// one key, so the canonical dump reproduces a run bit for bit.
namespace ldpred::config
{

inline constexpr std::uint64_t kDefaultSeed = 20240917;

class ConfigError : public InvalidArgument
{
public:
  using InvalidArgument::InvalidArgument;
};

struct PathSpec
{
  double start_x = -50.0;
  double start_y = 2.0;
  double heading = 0.0;
  double lane_width = 4.0;
  std::vector<std::pair<double, double>> segments = {{1000.0, 0.0}};  // (length, curvature)

  LanePath build() const
  {
    if (segments.empty()) {throw ConfigError("path.segments: at least one segment required");}
    std::vector<PathSegment> out;
    Point2 p(start_x, start_y);
    double th = heading;
    for (const auto & [length, kappa] : segments) {
      PathSegment seg{p, th, length, kappa};
      if (!(length > 0.0)) {throw ConfigError("path.segments: lengths must be > 0");}
      out.push_back(seg);
      p = seg.end();
      th = seg.heading_at(length);
    }
    return LanePath(std::move(out), lane_width);
  }
};

struct Config
{
  PathSpec path;
  sim::Scenario scenario;
  sim::Setup setup;
  std::uint64_t seed = kDefaultSeed;
  int runs = 500;
  int jobs = 1;

  /// Derives dependent fields and checks every invariant.
  void finalize()
  {
    scenario.path = path.build();
    setup.prediction.t_s = scenario.t_s;
    setup.params.validate();
    setup.lqr.validate();
    setup.noise.validate();
    setup.prediction.validate();
    setup.lda.validate();
    scenario.validate(setup.params);
    if (runs < 2) {throw ConfigError("run.runs must be >= 2");}
    if (jobs < 1) {throw ConfigError("run.jobs must be >= 1");}
  }
};

namespace detail
{

inline std::string_view trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) {return {};}
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next - pos)));
    if (next == std::string_view::npos) {return out;}
    pos = next + 1;
  }
}

inline double to_double(std::string_view s, const std::string & key)
{
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, s));
  }
  return v;
}

template<typename Int>
Int to_int(std::string_view s, const std::string & key)
{
  s = trim(s);
  Int v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, s));
  }
  return v;
}

inline bool to_bool(std::string_view s, const std::string & key)
{
  s = trim(s);
  if (s == "true" || s == "1") {return true;}
  if (s == "false" || s == "0") {return false;}
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, s));
}

inline std::vector<double> to_list(std::string_view s, const std::string & key)
{
  std::vector<double> out;
  for (auto item : split(s, ',')) {out.push_back(to_double(item, key));}
  return out;
}

inline Vec5 to_vec5(std::string_view s, const std::string & key)
{
  const auto v = to_list(s, key);
  if (v.size() != 5) {throw ConfigError(key + ": expected 5 comma-separated values");}
  return Vec5(v[0], v[1], v[2], v[3], v[4]);
}

inline std::string fmt_double(double v) {return fmt::format("{}", v);}

inline std::string fmt_list(const std::vector<double> & v)
{
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) {out += ", ";}
    out += fmt_double(v[i]);
  }
  return out;
}

inline std::string fmt_diag(const Mat5 & m)
{
  return fmt_list({m(0, 0), m(1, 1), m(2, 2), m(3, 3), m(4, 4)});
}

inline Mat5 diag5(const Vec5 & d) {return d.asDiagonal();}

struct Field
{
  std::string section;
  std::string key;
  std::function<void(std::string_view, const std::string &)> set;
  std::function<std::string()> get;
};

inline Field real(std::string section, std::string key, double & ref)
{
  return {std::move(section), std::move(key),
    [&ref](std::string_view v, const std::string & k) {ref = to_double(v, k);},
    [&ref]() {return fmt_double(ref);}};
}

inline Field integer(std::string section, std::string key, int & ref)
{
  return {std::move(section), std::move(key),
    [&ref](std::string_view v, const std::string & k) {ref = to_int<int>(v, k);},
    [&ref]() {return std::to_string(ref);}};
}

inline Field boolean(std::string section, std::string key, bool & ref)
{
  return {std::move(section), std::move(key),
    [&ref](std::string_view v, const std::string & k) {ref = to_bool(v, k);},
    [&ref]() {return std::string(ref ? "true" : "false");}};
}

inline Field diagonal(std::string section, std::string key, Mat5 & ref)
{
  return {std::move(section), std::move(key),
    [&ref](std::string_view v, const std::string & k) {ref = diag5(to_vec5(v, k));},
    [&ref]() {return fmt_diag(ref);}};
}

inline std::vector<Field> fields(Config & c)
{
  auto & p = c.setup.params;
  auto & q = c.setup.lqr;
  auto & lda = c.setup.lda;
  auto & sc = c.scenario;
  std::vector<Field> f = {
    real("vehicle", "m", p.m),
    real("vehicle", "I_z", p.I_z),
    real("vehicle", "a", p.a),
    real("vehicle", "b", p.b),
    real("vehicle", "C_f", p.C_f),
    real("vehicle", "C_r", p.C_r),
    real("vehicle", "l_f", p.l_f),
    real("vehicle", "B_half", p.B_half),

    real("path", "start_x", c.path.start_x),
    real("path", "start_y", c.path.start_y),
    real("path", "heading", c.path.heading),
    real("path", "lane_width", c.path.lane_width),
    {"path", "segments",
      [&c](std::string_view v, const std::string & k) {
        c.path.segments.clear();
        for (auto item : split(v, ',')) {
          const auto parts = split(item, ':');
          if (parts.size() != 2) {
            throw ConfigError(k + ": segments are 'length:curvature' separated by commas");
          }
          c.path.segments.emplace_back(to_double(parts[0], k), to_double(parts[1], k));
        }
      },
      [&c]() {
        std::string out;
        for (std::size_t i = 0; i < c.path.segments.size(); ++i) {
          if (i) {out += ", ";}
          out += fmt_double(c.path.segments[i].first) + ":" +
            fmt_double(c.path.segments[i].second);
        }
        return out;
      }},

    {"lqr", "W1",
      [&q](std::string_view v, const std::string & k) {
        const auto d = to_list(v, k);
        if (d.size() != 4) {throw ConfigError(k + ": expected 4 diagonal entries");}
        q.W1 = Vec4(d[0], d[1], d[2], d[3]).asDiagonal();
      },
      [&q]() {return fmt_list({q.W1(0, 0), q.W1(1, 1), q.W1(2, 2), q.W1(3, 3)});}},
    real("lqr", "W2", q.W2),
    {"lqr", "speed_grid",
      [&q](std::string_view v, const std::string & k) {q.speed_grid = to_list(v, k);},
      [&q]() {return fmt_list(q.speed_grid);}},
    real("lqr", "max_steer", q.max_steer),
    boolean("lqr", "zero_feedback", q.zero_feedback),

    diagonal("noise", "Q", c.setup.noise.Q),
    diagonal("noise", "R", c.setup.noise.R),

    integer("prediction", "horizon_steps", c.setup.prediction.horizon_steps),
    boolean("prediction", "sim_noise", c.setup.prediction.sim_noise_enabled),
    integer("prediction", "emission_stride", c.setup.prediction.emission_stride),

    real("assessment", "Delta", lda.Delta),
    real("assessment", "Pi", lda.Pi),
    real("assessment", "l_r", lda.l_r),
    real("assessment", "inflation", lda.inflation),
    boolean("assessment", "full_covariance", lda.full_covariance),

    real("scenario", "v_x", sc.v_x),
    real("scenario", "t_s", sc.t_s),
    {"scenario", "disturbance",
      [&sc](std::string_view v, const std::string & k) {
        v = trim(v);
        if (v == "steering_pulse") {
          sc.mode = sim::DisturbanceMode::kSteeringPulse;
        } else if (v == "initial_offset") {
          sc.mode = sim::DisturbanceMode::kInitialOffset;
        } else {
          throw ConfigError(k + ": expected steering_pulse or initial_offset");
        }
      },
      [&sc]() {
        return std::string(
          sc.mode == sim::DisturbanceMode::kSteeringPulse ? "steering_pulse" : "initial_offset");
      }},
    real("scenario", "settle_time", sc.settle_time),
    real("scenario", "pulse_steer", sc.pulse_steer),
    real("scenario", "pulse_duration", sc.pulse_duration),
    real("scenario", "initial_e1", sc.initial_e1),
    real("scenario", "initial_e2", sc.initial_e2),
    real("scenario", "activation_delay", sc.activation_delay),
    real("scenario", "post_activation", sc.post_activation),
    diagonal("scenario", "R_inject", sc.R_inject),
    boolean("scenario", "process_noise", sc.process_noise),
    real("scenario", "a_y_limit", sc.a_y_limit),

    {"run", "seed",
      [&c](std::string_view v, const std::string & k) {c.seed = to_int<std::uint64_t>(v, k);},
      [&c]() {return std::to_string(c.seed);}},
    integer("run", "runs", c.runs),
    integer("run", "jobs", c.jobs),
  };
  return f;
}

}  // namespace detail

/// Parses INI text over the defaults. Unknown sections or keys are errors.
inline Config parse_config(const std::string & text, const std::string & source = "<string>")
{
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error & e) {
    throw ConfigError(fmt::format("{}: line {}: {}", source, e.line(), e.message()));
  }
  Config c;
  auto table = detail::fields(c);
  for (const auto & [section, body] : tree) {
    if (!body.data().empty()) {
      throw ConfigError(fmt::format("{}: key '{}' outside any section", source, section));
    }
    for (const auto & [key, value] : body) {
      const std::string name = section + "." + key;
      auto it = std::find_if(table.begin(), table.end(),
          [&](const detail::Field & f) {return f.section == section && f.key == key;});
      if (it == table.end()) {
        throw ConfigError(fmt::format("{}: unknown key '{}'", source, name));
      }
      it->set(value.data(), name);
    }
  }
  try {
    c.finalize();
  } catch (const ConfigError &) {
    throw;
  } catch (const InvalidArgument & e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
  return c;
}

inline Config load_config(const std::filesystem::path & file)
{
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw ConfigError(fmt::format("cannot read config file '{}'", file.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), file.string());
}

/// Canonical text of every resolved parameter, in a fixed order.
inline std::string dump_config(const Config & config)
{
  Config copy = config;
  std::string out;
  std::string section;
  for (const auto & f : detail::fields(copy)) {
    if (f.section != section) {
      if (!section.empty()) {out += "\n";}
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get() + "\n";
  }
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const Config & config)
{
  return fmt::format("{:016x}", fnv1a(dump_config(config)));
}

}  // namespace ldpred::config

#endif  // LDPRED__CONFIG_HPP_
