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

#ifndef LDPRED__TYPES_HPP_
#define LDPRED__TYPES_HPP_

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace ldpred
{

inline constexpr int kStateDim = 5;
inline constexpr int kErrorDim = 4;

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using RowVec4 = Eigen::Matrix<double, 1, 4>;
using Mat45 = Eigen::Matrix<double, 4, 5>;

// Ordering of the lateral state vector [v_y, omega_r, X_c, Y_c, psi].
enum StateIndex : int { kVy = 0, kWr = 1, kXc = 2, kYc = 3, kPsi = 4 };

/// Thrown when a precondition on an argument is violated (non-positive speed,
/// malformed config value, ...).
class InvalidArgument : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures of a numerical or geometric procedure at runtime.
class RuntimeFailure : public std::runtime_error
{
public:
  RuntimeFailure(std::string module, const std::string & what)
  : std::runtime_error(module + ": " + what), module_(std::move(module))
  {
  }
  const std::string & module() const noexcept {return module_;}

private:
  std::string module_;
};

/// Single-track vehicle parameters. Defaults are the identified sedan.
struct VehicleParams
{
  double m = 2030.0;      // kg
  double I_z = 3200.0;    // kg m^2
  double a = 1.13;        // CG to front axle, m
  double b = 1.55;        // CG to rear axle, m
  double C_f = 1.0e5;     // front axle cornering stiffness, N/rad
  double C_r = 2.0e5;     // rear axle cornering stiffness, N/rad
  double l_f = 2.11;      // CG to front of contour, m
  double B_half = 0.93;   // half width, m

  void validate() const
  {
    const double fields[] = {m, I_z, a, b, C_f, C_r, l_f, B_half};
    for (double f : fields) {
      if (!(f > 0.0) || !std::isfinite(f)) {
        throw InvalidArgument("VehicleParams: all fields must be strictly positive");
      }
    }
  }
};

/// Lateral vehicle state plus the (constant) longitudinal speed.
struct VehicleState
{
  double v_y = 0.0;
  double omega_r = 0.0;
  double X_c = 0.0;
  double Y_c = 0.0;
  double psi = 0.0;
  double v_x = 1.0;

  Vec5 vec() const
  {
    Vec5 x;
    x << v_y, omega_r, X_c, Y_c, psi;
    return x;
  }

  static VehicleState from_vec(const Vec5 & x, double v_x)
  {
    return {x(kVy), x(kWr), x(kXc), x(kYc), x(kPsi), v_x};
  }

  bool operator==(const VehicleState &) const = default;
};

/// Mean and error covariance of the lateral state.
struct GaussianState
{
  VehicleState mean;
  Mat5 P = Mat5::Zero();
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double angle)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(angle + std::numbers::pi, two_pi);
  if (wrapped < 0.0) {
    wrapped += two_pi;
  }
  wrapped -= std::numbers::pi;
  // fmod maps +pi to -pi; the interval is half-open at -pi.
  if (wrapped <= -std::numbers::pi) {
    wrapped += two_pi;
  }
  return wrapped;
}

template<typename Derived>
void symmetrize(Eigen::MatrixBase<Derived> & m)
{
  m = (0.5 * (m + m.transpose())).eval();
}

inline void require_positive_speed(double v_x, const char * where)
{
  if (!(v_x > 0.0)) {
    throw InvalidArgument(std::string(where) + ": longitudinal speed v_x must be > 0");
  }
}

}  // namespace ldpred

#endif  // LDPRED__TYPES_HPP_
