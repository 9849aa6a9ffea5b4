#include "vhmmt/control/controller.hpp"

#include <cmath>
#include <ostream>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::control {

ControllerGains ControllerGains::with_stiffness(const Vec7& kp, const Vec7& inertia, double ke, double damping_ratio) {
    ControllerGains g;
    g.kp = kp;
    g.kd = 2.0 * damping_ratio * kp.cwiseProduct(inertia).cwiseSqrt();
    g.ke = Vec7::Constant(ke);
    return g;
}

ControllerGains ControllerGains::defaults(const PlantParams& plant) {
    return with_stiffness(Vec7::Constant(600.0), plant.inertia);
}

Vec7 impedance_torque(const Vec7& q_d, const Vec7& qdot_d, const Vec7& q_m, const Vec7& qdot_m,
                      const ControllerGains& gains, const Vec7& tau_g, const Vec7& tau_cf, const Vec7& tau_max) {
    Vec7 tau = gains.kp.cwiseProduct(q_d - q_m) + gains.kd.cwiseProduct(qdot_d - qdot_m) + tau_g + tau_cf;
    return tau.cwiseMax(-tau_max).cwiseMin(tau_max);
}

Controller::Controller(kinematics::RobotModel model, ControllerConfig config, const Vec7& q_start)
    : model_(std::move(model)), config_(std::move(config)), interp_(trajectory::InterpolatorState::at_rest(q_start)),
      lower_(model_.lower()), upper_(model_.upper()) {
    config_.limits.validate();
    if (!(config_.dt > 0.0 && config_.dt <= 2e-3)) {
        throw ConfigError("control period must be in (0, 2 ms]");
    }
}

ContactResult evaluate_contact(const kinematics::RobotModel& model, const PlantState& plant, const Environment& env,
                               const ContactParams& params) {
    ContactResult c;
    c.tip = kinematics::forward_kinematics(model, plant.q) * env.probe;
    const bool external = env.phantom != nullptr || !env.tip_force.isZero(0);
    if (!external) {
        return c;
    }
    const Mat67 jac = kinematics::point_jacobian(model, plant.q, c.tip.translation());
    if (env.phantom != nullptr) {
        const Vec3 tip_velocity = jac.topRows<3>() * plant.qdot;
        const Pose flange = c.tip * env.probe.inverse();
        c.wrench = contact_wrench(flange, env.probe, *env.phantom, params, tip_velocity);
    }
    Vec6 total = c.wrench;
    total.head<3>() += env.tip_force;
    c.tau = jac.transpose() * total;
    return c;
}

TickRecord Controller::tick(CommandQueue& goals, PlantState& plant, const Environment& env) {
    TickRecord rec;
    std::optional<Vec7> goal;
    while (auto g = goals.pop()) {
        goal = *g;
    }
    if (goal) {
        try {
            interp_ = trajectory::set_goal(interp_, *goal, lower_, upper_);
            rec.new_goal = true;
        } catch (const GoalOutOfLimits&) {
            ++rejected_;
        }
    }

    const double dt = config_.dt;
    const Vec7 q_m = plant.q;
    const Vec7 qdot_m = plant.qdot;
    const Vec7 q_last = interp_.q_last;
    const trajectory::StepResult next = trajectory::step(interp_, dt, config_.limits);
    const trajectory::DriftCommand cmd = trajectory::drift_compensated_command(
        next.q, next.qdot, q_m, config_.gains.ke, dt, q_last, config_.vel_bound);

    const Vec7 tau_g = gravity_torque(model_, config_.plant, q_m);
    const Vec7 tau_cf = friction_torque(config_.plant, qdot_m);
    rec.tau_c = impedance_torque(cmd.q_d, cmd.qdot_d, q_m, qdot_m, config_.gains, tau_g, tau_cf, config_.tau_max);

    const ContactResult contact = evaluate_contact(model_, plant, env, config_.contact);
    plant = plant_step(plant, rec.tau_c, contact.tau + env.tau_disturbance, dt, model_, config_.plant);
    if (!plant.q.allFinite() || !plant.qdot.allFinite()) {
        throw SimulationDiverged("plant state is no longer finite");
    }

    rec.t = plant.t;
    rec.q = plant.q;
    rec.qdot = plant.qdot;
    rec.tip = contact.tip;
    rec.contact_force = contact.wrench.head<3>();
    return rec;
}

std::optional<Vec7> CommandStage::on_pose(const Pose& flange_target, const Vec7& q_measured) {
    std::optional<Vec7> q = solver_.solve_nearest(flange_target, q_measured);
    if (!q) {
        ++unreachable_;
        return std::nullopt;
    }
    goals_.push(*q);
    return q;
}

void write_state_csv(std::ostream& out, const std::vector<TickRecord>& rows) {
    out << "t";
    for (const char* p : {"q", "qdot", "tau"}) {
        for (int i = 0; i < kJoints; ++i) {
            out << ',' << p << i;
        }
    }
    out << ",tip_qw,tip_qx,tip_qy,tip_qz,tip_x,tip_y,tip_z,fx,fy,fz\n";
    const auto prec = out.precision(17);
    for (const TickRecord& r : rows) {
        out << r.t;
        for (const Vec7* v : {&r.q, &r.qdot, &r.tau_c}) {
            for (int i = 0; i < kJoints; ++i) {
                out << ',' << (*v)(i);
            }
        }
        for (double x : r.tip.to_array()) {
            out << ',' << x;
        }
        out << ',' << r.contact_force.x() << ',' << r.contact_force.y() << ',' << r.contact_force.z() << '\n';
    }
    out.precision(prec);
}

} // namespace vhmmt::control
