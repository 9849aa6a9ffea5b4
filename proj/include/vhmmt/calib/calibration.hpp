#pragma once

#include <span>
#include <vector>

#include "vhmmt/core/pose.hpp"

namespace vhmmt::calib {

/// Fixed transforms between the operator's device and the follower flange.
struct CalibrationSet {
    Pose hand_eye;            ///< camera -> follower base
    Pose probe;               ///< probe -> follower flange
    Pose offset;              ///< alignment / clutch offset, identity until aligned
};

/// One marker sighting used for hand-eye calibration.
struct MarkerObservation {
    Pose marker_in_flange;    ///< known by construction
    Pose marker_in_camera;    ///< measured by the camera
    Pose flange_in_base;      ///< forward kinematics at observation time
};

struct HandEyeResult {
    Pose camera_to_base;
    double residual_rms_m = 0.0;
    double residual_rms_rad = 0.0;
};

/// Commanded flange pose: offset * hand_eye * hand * probe^-1.
Pose expert_to_follower(const CalibrationSet& calib, const Pose& hand);

/// Offset that keeps the follower where it was across a clutch episode:
/// pre * (offset^-1 * post)^-1.
Pose reindex_offset(const Pose& offset, const Pose& pre_pose, const Pose& post_pose);

/// Solves flange_in_base * marker_in_flange = X * marker_in_camera for X.
///
/// Rotation comes from the homogeneous quaternion system built from every pair
/// of observations (the relative motions satisfy A X = X B), solved by SVD.
/// Translation then follows from linear least squares on the absolute
/// equations. Throws DegenerateObservations when the rotation system has more
/// than a one-dimensional null space.
HandEyeResult solve_hand_eye(std::span<const MarkerObservation> observations);

} // namespace vhmmt::calib
