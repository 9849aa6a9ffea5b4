#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>

namespace vhmmt {

inline constexpr int kJoints = 7;

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec7 = Eigen::Matrix<double, kJoints, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat67 = Eigen::Matrix<double, 6, kJoints>;

/// Microseconds since the session epoch.
using TimeUs = std::int64_t;

inline constexpr TimeUs kUsPerMs = 1000;
inline constexpr TimeUs kUsPerSec = 1000000;

inline double us_to_s(TimeUs t) { return static_cast<double>(t) * 1e-6; }
inline TimeUs s_to_us(double s) { return static_cast<TimeUs>(s * 1e6 + (s >= 0 ? 0.5 : -0.5)); }

} // namespace vhmmt
