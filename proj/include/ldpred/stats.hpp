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

#ifndef LDPRED__STATS_HPP_
#define LDPRED__STATS_HPP_

#include "ldpred/types.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace ldpred::stats
{

inline double mean(std::span<const double> xs)
{
  if (xs.empty()) {throw InvalidArgument("mean: empty sample");}
  double s = 0.0;
  for (double x : xs) {s += x;}
  return s / static_cast<double>(xs.size());
}

/// Unbiased sample variance.
inline double sample_variance(std::span<const double> xs)
{
  if (xs.size() < 2) {throw InvalidArgument("sample_variance: need at least two samples");}
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) {ss += (x - m) * (x - m);}
  return ss / static_cast<double>(xs.size() - 1);
}

struct AndersonDarling
{
  double A2 = 0.0;        // raw statistic
  double A2_star = 0.0;   // small-sample corrected
  double critical = 0.0;  // at the requested level
  bool reject = false;
};

/// Anderson-Darling normality test with mean and variance estimated from
/// the sample. Critical values for the corrected statistic (Stephens).
inline AndersonDarling anderson_darling_normal(std::vector<double> xs, double alpha = 0.01)
{
  const std::size_t n = xs.size();
  if (n < 8) {throw InvalidArgument("anderson_darling_normal: need at least 8 samples");}
  double crit = 0.0;
  if (alpha == 0.10) {
    crit = 0.631;
  } else if (alpha == 0.05) {
    crit = 0.752;
  } else if (alpha == 0.025) {
    crit = 0.873;
  } else if (alpha == 0.01) {
    crit = 1.035;
  } else {
    throw InvalidArgument("anderson_darling_normal: alpha must be 0.10, 0.05, 0.025 or 0.01");
  }
  const double m = mean(xs);
  const double sd = std::sqrt(sample_variance(xs));
  if (!(sd > 0.0)) {throw InvalidArgument("anderson_darling_normal: sample has zero spread");}
  std::sort(xs.begin(), xs.end());
  const boost::math::normal unit;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // Clamp so a single extreme sample cannot produce log(0).
    const double lo = std::clamp(boost::math::cdf(unit, (xs[i] - m) / sd), 1e-300, 1.0 - 1e-16);
    const double hi = std::clamp(
      boost::math::cdf(unit, (xs[n - 1 - i] - m) / sd), 1e-300, 1.0 - 1e-16);
    s += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log1p(-hi));
  }
  const double nd = static_cast<double>(n);
  AndersonDarling out;
  out.A2 = -nd - s / nd;
  out.A2_star = out.A2 * (1.0 + 0.75 / nd + 2.25 / (nd * nd));
  out.critical = crit;
  out.reject = out.A2_star > crit;
  return out;
}

struct Interval
{
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const {return x >= lo && x <= hi;}
};

/// Two-sided band for the mean of `n_runs` independent chi-square(dof)
/// variables: chi2_{n*dof} quantiles divided by n.
inline Interval nees_band(int dof, int n_runs, double coverage = 0.95)
{
  if (dof < 1 || n_runs < 1 || !(coverage > 0.0 && coverage < 1.0)) {
    throw InvalidArgument("nees_band: need dof >= 1, n_runs >= 1, coverage in (0, 1)");
  }
  const boost::math::chi_squared chi(static_cast<double>(dof) * n_runs);
  const double tail = 0.5 * (1.0 - coverage);
  return {boost::math::quantile(chi, tail) / n_runs,
    boost::math::quantile(boost::math::complement(chi, tail)) / n_runs};
}

}  // namespace ldpred::stats

#endif  // LDPRED__STATS_HPP_
