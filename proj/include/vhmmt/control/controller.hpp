#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "vhmmt/control/plant.hpp"
#include "vhmmt/core/spsc_queue.hpp"
#include "vhmmt/kinematics/kinematics.hpp"
#include "vhmmt/trajectory/interpolator.hpp"

namespace vhmmt::control {

struct ControllerGains {
    Vec7 kp = Vec7::Constant(600.0);  ///< N m / rad
    Vec7 kd = Vec7::Zero();           ///< N m s / rad
    Vec7 ke = Vec7::Constant(5.0);    ///< 1/s

    /// K_d = zeta * 2 sqrt(K_p M_ii). Without inertia feed-forward the damper
    /// carries the velocity reference, so the default runs overdamped.
    static ControllerGains with_stiffness(const Vec7& kp, const Vec7& inertia, double ke = 5.0,
                                          double damping_ratio = kDefaultDampingRatio);
    static constexpr double kDefaultDampingRatio = 3.0;
    static ControllerGains defaults(const PlantParams& plant = {});
};

/// tau_c = K_p (q_d - q_m) + K_d (qdot_d - qdot_m) + tau_g + tau_cf, clamped to +-tau_max.
Vec7 impedance_torque(const Vec7& q_d, const Vec7& qdot_d, const Vec7& q_m, const Vec7& qdot_m,
                      const ControllerGains& gains, const Vec7& tau_g, const Vec7& tau_cf,
                      const Vec7& tau_max = Vec7::Constant(80.0));

/// Joint goals flow from the command context to the control context here.
using CommandQueue = SpscQueue<Vec7, 64>;

struct ControllerConfig {
    ControllerGains gains = ControllerGains::defaults();
    trajectory::MotionLimits limits;
    Vec7 vel_bound = Vec7::Constant(2.0);
    Vec7 tau_max = Vec7::Constant(80.0);
    double dt = 1e-3;
    PlantParams plant;
    ContactParams contact;
};

/// What the follower pushes against.
struct Environment {
    const usmodel::SyntheticPhantom* phantom = nullptr;
    Pose probe;                            ///< probe tip in the flange frame
    Vec7 tau_disturbance = Vec7::Zero();   ///< constant extra joint torque
    Vec3 tip_force = Vec3::Zero();         ///< constant extra force at the tip
};

/// One row of the state log.
struct TickRecord {
    double t = 0.0;
    Vec7 q = Vec7::Zero();
    Vec7 qdot = Vec7::Zero();
    Vec7 tau_c = Vec7::Zero();
    Pose tip;
    Vec3 contact_force = Vec3::Zero();
    bool new_goal = false;
};

/// The fixed-rate control context: sole owner of the interpolator.
class Controller {
public:
    Controller(kinematics::RobotModel model, ControllerConfig config, const Vec7& q_start);

    /// Dequeues the newest goal (keeping the previous one if the queue is
    /// empty), interpolates, applies drift compensation and the impedance
    /// law, then advances the plant by one period.
    TickRecord tick(CommandQueue& goals, PlantState& plant, const Environment& env);

    const trajectory::InterpolatorState& interpolator() const { return interp_; }
    const ControllerConfig& config() const { return config_; }
    const kinematics::RobotModel& model() const { return model_; }
    std::uint64_t rejected_goals() const { return rejected_; }

private:
    kinematics::RobotModel model_;
    ControllerConfig config_;
    trajectory::InterpolatorState interp_;
    Vec7 lower_;
    Vec7 upper_;
    std::uint64_t rejected_ = 0;
};

/// Contact wrench and resulting joint torque for the current plant state.
struct ContactResult {
    Pose tip;
    Vec6 wrench = Vec6::Zero();
    Vec7 tau = Vec7::Zero();
};
ContactResult evaluate_contact(const kinematics::RobotModel& model, const PlantState& plant, const Environment& env,
                               const ContactParams& params);

/// The command context: pose in, IK, nearest solution out to the queue.
class CommandStage {
public:
    CommandStage(kinematics::IkSolver solver, CommandQueue& goals) : solver_(std::move(solver)), goals_(goals) {}

    /// Returns the pushed goal, or nothing when the pose is unreachable.
    std::optional<Vec7> on_pose(const Pose& flange_target, const Vec7& q_measured);

    std::uint64_t unreachable() const { return unreachable_; }
    const kinematics::IkSolver& solver() const { return solver_; }

private:
    kinematics::IkSolver solver_;
    CommandQueue& goals_;
    std::uint64_t unreachable_ = 0;
};

void write_state_csv(std::ostream& out, const std::vector<TickRecord>& rows);

} // namespace vhmmt::control
