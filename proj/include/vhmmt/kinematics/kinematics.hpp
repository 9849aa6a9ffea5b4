#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "vhmmt/kinematics/robot_model.hpp"

namespace vhmmt::kinematics {

/// World-frame joint axes and origins plus the flange pose for one configuration.
struct ChainFrames {
    std::array<Vec3, kJoints> axis;
    std::array<Vec3, kJoints> origin;
    std::array<Pose, kJoints> after_joint;  ///< frame of link i after its rotation
    Pose flange;
};

ChainFrames chain_frames(const RobotModel& model, const Vec7& q);

Pose forward_kinematics(const RobotModel& model, const Vec7& q);

/// Geometric Jacobian of the flange: rows 0-2 linear velocity, rows 3-5 angular.
Mat67 jacobian(const RobotModel& model, const Vec7& q);

/// Jacobian of a point rigidly attached to the flange (given in base coordinates).
Mat67 point_jacobian(const RobotModel& model, const Vec7& q, const Vec3& point);

/// Position error plus rotation-vector error taking `current` to `target`.
Vec6 pose_error(const Pose& current, const Pose& target);

struct IkOptions {
    double damping = 1e-3;
    double max_step = 0.2;        ///< rad, applied to the largest joint increment
    int max_iterations = 200;
    double converge_tol = 1e-8;   ///< translation (m) + rotation (rad)
    double accept_tol = 1e-6;     ///< per component, checked on the final configuration
};

/// Damped least-squares descent from each seed. Returns every converged,
/// in-limit configuration (near-duplicates removed); empty means unreachable.
std::vector<Vec7> inverse_kinematics(const RobotModel& model, const Pose& target, std::span<const Vec7> seeds,
                                     const IkOptions& options = {});

/// Index-stable argmin of squared distance to `q_m`. Throws EmptySolutionSet.
Vec7 select_solution(std::span<const Vec7> solutions, const Vec7& q_m);

/// Multi-start solver: the current configuration plus uniformly drawn in-limit
/// seeds. If a whole batch fails, further random batches are tried until
/// `max_restart_seeds` extra seeds have been spent.
class IkSolver {
public:
    IkSolver(RobotModel model, std::uint64_t seed, int random_seeds = 7, IkOptions options = {},
             int max_restart_seeds = 24);

    std::vector<Vec7> solve(const Pose& target, const Vec7& q_current);
    /// Solves and picks the configuration closest to `q_current`; nullopt if unreachable.
    std::optional<Vec7> solve_nearest(const Pose& target, const Vec7& q_current);

    Vec7 random_configuration();
    const RobotModel& model() const { return model_; }

private:
    RobotModel model_;
    std::mt19937_64 rng_;
    int random_seeds_;
    IkOptions options_;
    int max_restart_seeds_;
};

} // namespace vhmmt::kinematics
