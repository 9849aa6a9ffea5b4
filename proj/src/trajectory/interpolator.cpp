#include "vhmmt/trajectory/interpolator.hpp"

#include <algorithm>
#include <cmath>

#include "vhmmt/core/errors.hpp"
#include "vhmmt/trajectory/profile.hpp"

namespace vhmmt::trajectory {

MotionLimits MotionLimits::uniform(double v, double a, double j) {
    return {Vec7::Constant(v), Vec7::Constant(a), Vec7::Constant(j)};
}

void MotionLimits::validate() const {
    if (!((v_max.array() > 0).all() && (a_max.array() > 0).all() && (j_max.array() > 0).all())) {
        throw ConfigError("motion limits must be strictly positive");
    }
}

InterpolatorState InterpolatorState::at_rest(const Vec7& q) {
    InterpolatorState s;
    s.q_last = q;
    s.goal = q;
    return s;
}

InterpolatorState set_goal(InterpolatorState state, const Vec7& q_goal, const Vec7& lower, const Vec7& upper) {
    if (!q_goal.allFinite() || (q_goal.array() < lower.array()).any() || (q_goal.array() > upper.array()).any()) {
        throw GoalOutOfLimits("goal outside joint position limits");
    }
    state.goal = q_goal;
    return state;
}

namespace {

ScalarLimits joint_limits(const MotionLimits& l, int i) { return {l.v_max(i), l.a_max(i), l.j_max(i)}; }

} // namespace

StepResult step(InterpolatorState& state, double dt, const MotionLimits& limits) {
    for (int i = 0; i < kJoints; ++i) {
        const ScalarLimits lim = joint_limits(limits, i);
        const ScalarState now{state.q_last(i), state.qdot(i), state.qddot(i)};
        const double goal = state.goal(i);
        ScalarState next;
        if (now.p == goal && now.v == 0.0 && now.a == 0.0) {
            next = now;
        } else {
            ScalarProfile plan = plan_to_rest(now, goal, lim);
            if (plan.duration() <= dt) {
                next = {goal, 0.0, 0.0};
            } else {
                next = plan.at(dt);
                // Round-off can leave the plateau a few ulps past the bound.
                next.v = std::clamp(next.v, -lim.v_max, lim.v_max);
                next.a = std::clamp(next.a, -lim.a_max, lim.a_max);
            }
        }
        state.q_last(i) = next.p;
        state.qdot(i) = next.v;
        state.qddot(i) = next.a;
    }
    return {state.q_last, state.qdot};
}

double time_to_goal(const InterpolatorState& state, const MotionLimits& limits) {
    double t = 0.0;
    for (int i = 0; i < kJoints; ++i) {
        ScalarState now{state.q_last(i), state.qdot(i), state.qddot(i)};
        t = std::max(t, plan_to_rest(now, state.goal(i), joint_limits(limits, i)).duration());
    }
    return t;
}

DriftCommand drift_compensated_command(const Vec7& q_n, const Vec7& qdot_n, const Vec7& q_m, const Vec7& k_e,
                                       double dt, const Vec7& q_last, const Vec7& vel_bound) {
    DriftCommand c;
    c.qdot_d = (qdot_n + k_e.cwiseProduct(q_n - q_m)).cwiseMax(-vel_bound).cwiseMin(vel_bound);
    c.q_d = q_last + dt * c.qdot_d;
    return c;
}

} // namespace vhmmt::trajectory
