#pragma once

#include "vhmmt/core/types.hpp"
#include "vhmmt/kinematics/robot_model.hpp"

namespace vhmmt::trajectory {

/// Per-joint velocity, acceleration and jerk bounds.
struct MotionLimits {
    Vec7 v_max = Vec7::Constant(2.0);
    Vec7 a_max = Vec7::Constant(10.0);
    Vec7 j_max = Vec7::Constant(1000.0);

    static MotionLimits uniform(double v, double a, double j);
    void validate() const;
};

/// Owned by the control loop. `q_last` is the last interpolated position.
struct InterpolatorState {
    Vec7 q_last = Vec7::Zero();
    Vec7 qdot = Vec7::Zero();
    Vec7 qddot = Vec7::Zero();
    Vec7 goal = Vec7::Zero();

    static InterpolatorState at_rest(const Vec7& q);
};

struct StepResult {
    Vec7 q;
    Vec7 qdot;
};

/// Replaces the goal; the kinematic state is untouched so motion stays continuous.
/// Throws GoalOutOfLimits when `q_goal` leaves [lower, upper].
InterpolatorState set_goal(InterpolatorState state, const Vec7& q_goal, const Vec7& lower, const Vec7& upper);

/// Advances every joint by `dt` along its time-optimal jerk-limited profile
/// toward the goal (re-planned from the current state each call). If the
/// remaining profile is shorter than `dt` the joint lands exactly on the goal.
StepResult step(InterpolatorState& state, double dt, const MotionLimits& limits);

/// Time for the slowest joint to reach its goal from the current state.
double time_to_goal(const InterpolatorState& state, const MotionLimits& limits);

struct DriftCommand {
    Vec7 q_d;
    Vec7 qdot_d;
};

/// qdot_d = clamp(qdot_n + K_e (q_n - q_m), +-vel_bound); q_d = q_last + dt * qdot_d.
DriftCommand drift_compensated_command(const Vec7& q_n, const Vec7& qdot_n, const Vec7& q_m, const Vec7& k_e,
                                       double dt, const Vec7& q_last, const Vec7& vel_bound);

} // namespace vhmmt::trajectory
