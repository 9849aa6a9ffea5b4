#pragma once

#include <random>

#include "vhmmt/core/pose.hpp"

namespace vhmmt::testing {

inline Eigen::Quaterniond random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    return q.normalized();
}

inline Pose random_pose(std::mt19937_64& rng, double extent = 1.0) {
    std::uniform_real_distribution<double> u(-extent, extent);
    return Pose(random_rotation(rng), Vec3(u(rng), u(rng), u(rng)));
}

/// Homogeneous 4x4 matrix built directly from the quaternion formula, independent of Eigen's conversion.
inline Mat4 oracle_matrix(const Pose& p) {
    const auto& q = p.rotation();
    double w = q.w(), x = q.x(), y = q.y(), z = q.z();
    Mat4 m = Mat4::Identity();
    m(0, 0) = 1 - 2 * (y * y + z * z);
    m(0, 1) = 2 * (x * y - w * z);
    m(0, 2) = 2 * (x * z + w * y);
    m(1, 0) = 2 * (x * y + w * z);
    m(1, 1) = 1 - 2 * (x * x + z * z);
    m(1, 2) = 2 * (y * z - w * x);
    m(2, 0) = 2 * (x * z - w * y);
    m(2, 1) = 2 * (y * z + w * x);
    m(2, 2) = 1 - 2 * (x * x + y * y);
    m(0, 3) = p.translation().x();
    m(1, 3) = p.translation().y();
    m(2, 3) = p.translation().z();
    return m;
}

/// Rigid inverse of a homogeneous matrix: [R^T, -R^T t].
inline Mat4 oracle_inverse(const Mat4& m) {
    Mat4 inv = Mat4::Identity();
    inv.topLeftCorner<3, 3>() = m.topLeftCorner<3, 3>().transpose();
    inv.topRightCorner<3, 1>() = -m.topLeftCorner<3, 3>().transpose() * m.topRightCorner<3, 1>();
    return inv;
}

inline double max_abs_diff(const Mat4& a, const Mat4& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace vhmmt::testing
