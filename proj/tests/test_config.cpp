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

#include "ldpred/config.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace ldpred;
using config::ConfigError;
using config::parse_config;

namespace
{

std::string error_of(const std::string & text)
{
  try {
    parse_config(text);
  } catch (const ConfigError & e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults)
{
  const config::Config c = parse_config("");
  EXPECT_EQ(c.seed, config::kDefaultSeed);
  EXPECT_EQ(c.runs, 500);
  EXPECT_EQ(c.setup.lqr.W2, 200.0);
  EXPECT_EQ(c.scenario.path.lane_width(), 4.0);
  EXPECT_EQ(c.scenario.path.segments().front().start, Point2(-50.0, 2.0));
  EXPECT_EQ(c.setup.prediction.t_s, c.scenario.t_s);
}

TEST(Config, ShippedDefaultFileMatchesBuiltIns)
{
  const config::Config file = config::load_config(LDPRED_SOURCE_DIR "/configs/default.ini");
  EXPECT_EQ(config::dump_config(file), config::dump_config(parse_config("")));
  EXPECT_EQ(config::config_hash(file), config::config_hash(parse_config("")));
}

TEST(Config, RoundTrip)
{
  const std::string text =
    "[vehicle]\nm = 1800.5\n"
    "[path]\nsegments = 100:0, 157.07963267948966:0.01\n"
    "[lqr]\nW1 = 2, 0.1, 1, 0\nW2 = 33\nzero_feedback = true\n"
    "[noise]\nR = 1e-6, 1e-6, 0.25, 0.25, 1e-3\n"
    "[scenario]\ndisturbance = initial_offset\ninitial_e1 = 0.8\nt_s = 0.005\n"
    "[run]\nseed = 18446744073709551615\nruns = 7\n";
  const config::Config c = parse_config(text);
  EXPECT_EQ(c.setup.params.m, 1800.5);
  EXPECT_EQ(c.scenario.path.segments().size(), 2u);
  EXPECT_EQ(c.setup.lqr.W1(1, 1), 0.1);
  EXPECT_TRUE(c.setup.lqr.zero_feedback);
  EXPECT_EQ(c.setup.noise.R(2, 2), 0.25);
  EXPECT_EQ(c.scenario.mode, sim::DisturbanceMode::kInitialOffset);
  EXPECT_EQ(c.setup.prediction.t_s, 0.005);
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  const std::string dumped = config::dump_config(c);
  const config::Config again = parse_config(dumped);
  EXPECT_EQ(config::dump_config(again), dumped);
  EXPECT_EQ(config::config_hash(again), config::config_hash(c));
  EXPECT_NE(config::config_hash(c), config::config_hash(parse_config("")));
}

TEST(Config, HashCoversEveryField)
{
  const std::string base = config::config_hash(parse_config(""));
  for (const char * text : {"[vehicle]\nB_half = 0.9\n", "[assessment]\nPi = 0.99\n",
      "[scenario]\nprocess_noise = false\n", "[run]\njobs = 4\n",
      "[prediction]\nemission_stride = 5\n"})
  {
    EXPECT_NE(config::config_hash(parse_config(text)), base) << text;
  }
}

TEST(Config, UnknownKeysAndSections)
{
  EXPECT_NE(error_of("[vehicle]\nmass = 1\n").find("vehicle.mass"), std::string::npos);
  EXPECT_NE(error_of("[engine]\npower = 1\n").find("engine.power"), std::string::npos);
  EXPECT_FALSE(error_of("seed = 3\n").empty());
}

TEST(Config, MalformedValues)
{
  EXPECT_NE(error_of("[vehicle]\nm = heavy\n").find("vehicle.m"), std::string::npos);
  EXPECT_FALSE(error_of("[vehicle]\nm = 12kg\n").empty());
  EXPECT_FALSE(error_of("[vehicle]\nm = inf\n").empty());
  EXPECT_FALSE(error_of("[vehicle]\nm = nan\n").empty());
  EXPECT_FALSE(error_of("[lqr]\nW1 = 1, 0, 1\n").empty());
  EXPECT_FALSE(error_of("[noise]\nQ = 1, 2\n").empty());
  EXPECT_FALSE(error_of("[path]\nsegments = 100\n").empty());
  EXPECT_FALSE(error_of("[scenario]\ndisturbance = gust\n").empty());
  EXPECT_FALSE(error_of("[lqr]\nzero_feedback = maybe\n").empty());
  EXPECT_FALSE(error_of("[run]\nruns = 2.5\n").empty());
  EXPECT_FALSE(error_of("[run]\nseed = -1\n").empty());
}

TEST(Config, InvariantViolations)
{
  EXPECT_NE(error_of("[path]\nlane_width = 1.5\n").find("lane_width"), std::string::npos);
  EXPECT_NE(error_of("[run]\nruns = 1\n").find("runs"), std::string::npos);
  EXPECT_FALSE(error_of("[lqr]\nW2 = 0\n").empty());
  EXPECT_FALSE(error_of("[assessment]\nPi = 1\n").empty());
  EXPECT_FALSE(error_of("[scenario]\nv_x = 0\n").empty());
  EXPECT_FALSE(error_of("[lqr]\nspeed_grid = 5, 4\n").empty());
  EXPECT_FALSE(error_of("[prediction]\nhorizon_steps = 0\n").empty());
  EXPECT_FALSE(error_of("[vehicle]\nC_f = -1\n").empty());
  EXPECT_FALSE(error_of("[noise]\nR = 1, 1, -1, 1, 1\n").empty());
}

TEST(Config, MissingFile)
{
  EXPECT_THROW(config::load_config("/nonexistent/ldpred.ini"), ConfigError);
}

TEST(Config, PathChainIsContinuous)
{
  const config::Config c = parse_config("[path]\nsegments = 50:0, 78.53981633974483:0.02, 30:0\n");
  const auto & segs = c.scenario.path.segments();
  ASSERT_EQ(segs.size(), 3u);
  for (std::size_t i = 1; i < segs.size(); ++i) {
    EXPECT_LT((segs[i].start - segs[i - 1].end()).norm(), 1e-12);
    EXPECT_NEAR(segs[i].heading, segs[i - 1].heading_at(segs[i - 1].length), 1e-15);
  }
  EXPECT_NEAR(segs[2].heading, std::numbers::pi / 2, 1e-12);
}
