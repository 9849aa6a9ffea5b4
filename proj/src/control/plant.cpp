#include "vhmmt/control/plant.hpp"

#include <algorithm>

#include "vhmmt/kinematics/kinematics.hpp"

namespace vhmmt::control {

Vec7 gravity_torque(const kinematics::RobotModel& model, const PlantParams& params, const Vec7& q) {
    Vec7 tau = Vec7::Zero();
    if (params.gravity == 0.0 || params.masses.empty()) {
        return tau;
    }
    const kinematics::ChainFrames f = kinematics::chain_frames(model, q);
    for (const PointMass& m : params.masses) {
        const Vec3 p = f.after_joint[static_cast<std::size_t>(m.link)] * m.offset;
        const Vec3 weight(0.0, 0.0, m.mass * params.gravity);
        for (int i = 0; i <= m.link; ++i) {
            const auto k = static_cast<std::size_t>(i);
            tau(i) += f.axis[k].cross(p - f.origin[k]).dot(weight);
        }
    }
    return tau;
}

Vec7 friction_torque(const PlantParams& params, const Vec7& qdot) { return params.friction * qdot; }

PlantState plant_step(const PlantState& state, const Vec7& tau_c, const Vec7& tau_ext, double dt,
                      const kinematics::RobotModel& model, const PlantParams& params) {
    PlantState next = state;
    const Vec7 net = tau_c + tau_ext - gravity_torque(model, params, state.q) - friction_torque(params, state.qdot);
    next.qdot = state.qdot + dt * net.cwiseQuotient(params.inertia);
    next.q = state.q + dt * next.qdot;
    const Vec7 lo = model.lower();
    const Vec7 hi = model.upper();
    for (int i = 0; i < kJoints; ++i) {
        if (next.q(i) < lo(i) || next.q(i) > hi(i)) {
            next.q(i) = std::clamp(next.q(i), lo(i), hi(i));
            next.qdot(i) = 0.0;
        }
    }
    next.tau_ext = tau_ext;
    next.t = state.t + dt;
    return next;
}

Vec6 contact_wrench(const Pose& flange, const Pose& probe, const usmodel::SyntheticPhantom& phantom,
                    const ContactParams& params, const Vec3& tip_velocity) {
    Vec6 w = Vec6::Zero();
    const Vec3 tip = (flange * probe).translation();
    const double sd = phantom.signed_distance(tip);
    if (sd >= 0.0) {
        return w;
    }
    const Vec3 n = phantom.surface_normal(tip);
    const double push = params.k_c * (-sd) + params.d_c * (-n.dot(tip_velocity));
    w.head<3>() = std::max(push, 0.0) * n;
    return w;
}

Vec7 wrench_to_joint_torque(const kinematics::RobotModel& model, const Vec7& q, const Vec3& point,
                            const Vec6& wrench) {
    return kinematics::point_jacobian(model, q, point).transpose() * wrench;
}

} // namespace vhmmt::control
