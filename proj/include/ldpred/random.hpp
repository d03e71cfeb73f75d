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

#ifndef LDPRED__RANDOM_HPP_
#define LDPRED__RANDOM_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace ldpred
{

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent seeds from counters.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `index` under `parent`; distinct (parent, index) pairs give
/// unrelated streams.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index)
{
  return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// Stream tags used by the simulator.
enum class Stream : std::uint64_t
{
  kMeasurement = 1,
  kProcess = 2,
  kPrediction = 3,
};

constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream stream)
{
  return derive_seed(parent, static_cast<std::uint64_t>(stream));
}

/// Draws from N(0, cov) for a PSD (possibly singular) covariance.
template<int N>
class GaussianSampler
{
public:
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;

  explicit GaussianSampler(const Mat & cov)
  {
    const Mat off_diagonal = cov - Mat(cov.diagonal().asDiagonal());
    if (off_diagonal.cwiseAbs().maxCoeff() == 0.0) {
      factor_ = cov.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
      return;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    const Vec sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    factor_ = es.eigenvectors() * sd.asDiagonal();
  }

  Vec operator()(Rng & rng) const
  {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec z;
    for (int i = 0; i < N; ++i) {
      z(i) = normal(rng);
    }
    return factor_ * z;
  }

  const Mat & factor() const {return factor_;}

private:
  Mat factor_;
};

}  // namespace ldpred

#endif  // LDPRED__RANDOM_HPP_
