#include "vhmmt/calib/calibration.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::calib {

Pose expert_to_follower(const CalibrationSet& calib, const Pose& hand) {
    return calib.offset * calib.hand_eye * hand * calib.probe.inverse();
}

Pose reindex_offset(const Pose& offset, const Pose& pre_pose, const Pose& post_pose) {
    return pre_pose * (offset.inverse() * post_pose).inverse();
}

namespace {

using Mat44 = Eigen::Matrix4d;

// p (x) q = left(p) * q, quaternions ordered (w, x, y, z).
Mat44 left_mult(const Eigen::Quaterniond& p) {
    Mat44 m;
    m << p.w(), -p.x(), -p.y(), -p.z(),
         p.x(),  p.w(), -p.z(),  p.y(),
         p.y(),  p.z(),  p.w(), -p.x(),
         p.z(), -p.y(),  p.x(),  p.w();
    return m;
}

// p (x) q = right(q) * p.
Mat44 right_mult(const Eigen::Quaterniond& q) {
    Mat44 m;
    m << q.w(), -q.x(), -q.y(), -q.z(),
         q.x(),  q.w(),  q.z(), -q.y(),
         q.y(), -q.z(),  q.w(),  q.x(),
         q.z(),  q.y(), -q.x(),  q.w();
    return m;
}

Eigen::Quaterniond positive_w(Eigen::Quaterniond q) {
    if (q.w() < 0.0) {
        q.coeffs() = -q.coeffs();
    }
    return q;
}

// Conjugate rotations share the scalar part, so w > 0 on both sides fixes the
// sign, except within a few degrees of pi where noise can flip it.
constexpr double kMinScalar = 0.02;
constexpr double kRankTol = 1e-9;

} // namespace

HandEyeResult solve_hand_eye(std::span<const MarkerObservation> observations) {
    const std::size_t n = observations.size();
    if (n < 3) {
        throw DegenerateObservations("need at least 3 observations, got " + std::to_string(n));
    }

    std::vector<Pose> marker_in_base;
    marker_in_base.reserve(n);
    for (const auto& o : observations) {
        marker_in_base.push_back(o.flange_in_base * o.marker_in_flange);
    }

    std::vector<Mat44> blocks;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            Eigen::Quaterniond qa = positive_w(marker_in_base[i].rotation() * marker_in_base[j].rotation().conjugate());
            Eigen::Quaterniond qb = positive_w(observations[i].marker_in_camera.rotation() *
                                               observations[j].marker_in_camera.rotation().conjugate());
            if (std::min(qa.w(), qb.w()) < kMinScalar) {
                continue;
            }
            blocks.push_back(left_mult(qa) - right_mult(qb));
        }
    }

    Eigen::MatrixXd system(4 * blocks.size(), 4);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        system.block<4, 4>(4 * static_cast<Eigen::Index>(k), 0) = blocks[k];
    }
    if (blocks.empty()) {
        throw DegenerateObservations("no usable relative rotations");
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(system, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // A unique rotation needs rank 3; the third singular value measures how far
    // the relative rotation axes are from all being parallel.
    if (sv(2) <= kRankTol * std::max(1.0, sv(0))) {
        throw DegenerateObservations("rotation axes do not span 3-D (sigma_3 = " + std::to_string(sv(2)) + ")");
    }
    Eigen::Vector4d v = svd.matrixV().col(3);
    Eigen::Quaterniond rotation(v(0), v(1), v(2), v(3));
    rotation.normalize();

    // t_X = argmin sum |R_X t_B + t_X - t_A|^2, whose normal equations reduce to the mean.
    Vec3 t = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        t += marker_in_base[i].translation() - rotation * observations[i].marker_in_camera.translation();
    }
    t /= static_cast<double>(n);

    HandEyeResult result;
    result.camera_to_base = Pose(rotation, t);
    double sum_t = 0.0;
    double sum_r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Pose predicted = result.camera_to_base * observations[i].marker_in_camera;
        sum_t += (predicted.translation() - marker_in_base[i].translation()).squaredNorm();
        double a = angular_error(predicted, marker_in_base[i]);
        sum_r += a * a;
    }
    result.residual_rms_m = std::sqrt(sum_t / static_cast<double>(n));
    result.residual_rms_rad = std::sqrt(sum_r / static_cast<double>(n));
    return result;
}

} // namespace vhmmt::calib
