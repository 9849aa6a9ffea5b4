#pragma once

#include <vector>

#include "vhmmt/core/pose.hpp"
#include "vhmmt/kinematics/robot_model.hpp"
#include "vhmmt/usmodel/phantom.hpp"

namespace vhmmt::control {

/// Lumped mass riding on the link that follows joint `link`.
struct PointMass {
    int link = 0;
    Vec3 offset = Vec3::Zero();  ///< in that link's frame (m)
    double mass = 0.0;           ///< kg
};

/// Surrogate follower dynamics: diagonal inertia, viscous friction, point-mass gravity.
struct PlantParams {
    Vec7 inertia = (Vec7() << 2.5, 2.5, 2.0, 2.0, 1.5, 1.0, 0.5).finished();  ///< kg m^2
    double friction = 0.1;  ///< N m s / rad
    double gravity = 9.81;  ///< m/s^2, along -z of the base
    std::vector<PointMass> masses{{1, {0.0, -0.15, 0.0}, 4.0}, {3, {-0.04, 0.19, 0.0}, 3.0}, {5, {0.05, 0.0, 0.0}, 2.0}};
};

struct PlantState {
    Vec7 q = Vec7::Zero();
    Vec7 qdot = Vec7::Zero();
    Vec7 tau_ext = Vec7::Zero();  ///< last external torque applied
    double t = 0.0;               ///< s
};

/// Torque that holds the arm still against gravity at q.
Vec7 gravity_torque(const kinematics::RobotModel& model, const PlantParams& params, const Vec7& q);

Vec7 friction_torque(const PlantParams& params, const Vec7& qdot);

/// Semi-implicit Euler step of M qdd = tau_c + tau_ext - tau_g(q) - tau_f(qdot).
/// Joints reaching a position limit stop there with zero velocity.
PlantState plant_step(const PlantState& state, const Vec7& tau_c, const Vec7& tau_ext, double dt,
                      const kinematics::RobotModel& model, const PlantParams& params);

struct ContactParams {
    double k_c = 5000.0;  ///< N/m
    double d_c = 50.0;    ///< N s/m
};

/// Wrench on the probe at its tip (force rows 0-2, torque rows 3-5).
/// Penetration depth d gives a normal push k_c d + d_c (penetration rate),
/// never pulling.
Vec6 contact_wrench(const Pose& flange, const Pose& probe, const usmodel::SyntheticPhantom& phantom,
                    const ContactParams& params, const Vec3& tip_velocity = Vec3::Zero());

/// Joint torques produced by a wrench acting at `point` on the end effector.
Vec7 wrench_to_joint_torque(const kinematics::RobotModel& model, const Vec7& q, const Vec3& point,
                            const Vec6& wrench);

} // namespace vhmmt::control
