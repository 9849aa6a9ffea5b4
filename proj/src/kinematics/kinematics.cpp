#include "vhmmt/kinematics/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::kinematics {

ChainFrames chain_frames(const RobotModel& model, const Vec7& q) {
    ChainFrames f;
    Pose t;
    for (std::size_t i = 0; i < model.joints.size(); ++i) {
        const auto& j = model.joints[i];
        t = t * j.link;
        f.axis[i] = t.rotate(j.axis);
        f.origin[i] = t.translation();
        t = t * Pose::from_axis_angle(j.axis, q(static_cast<Eigen::Index>(i)));
        f.after_joint[i] = t;
    }
    f.flange = t * model.flange;
    return f;
}

Pose forward_kinematics(const RobotModel& model, const Vec7& q) { return chain_frames(model, q).flange; }

namespace {

Mat67 jacobian_from_frames(const ChainFrames& f, const Vec3& point) {
    Mat67 jac;
    for (int i = 0; i < kJoints; ++i) {
        const auto k = static_cast<std::size_t>(i);
        jac.block<3, 1>(0, i) = f.axis[k].cross(point - f.origin[k]);
        jac.block<3, 1>(3, i) = f.axis[k];
    }
    return jac;
}

} // namespace

Mat67 jacobian(const RobotModel& model, const Vec7& q) {
    ChainFrames f = chain_frames(model, q);
    return jacobian_from_frames(f, f.flange.translation());
}

Mat67 point_jacobian(const RobotModel& model, const Vec7& q, const Vec3& point) {
    return jacobian_from_frames(chain_frames(model, q), point);
}

Vec6 pose_error(const Pose& current, const Pose& target) {
    Vec6 e;
    e.head<3>() = target.translation() - current.translation();
    e.tail<3>() = rotation_error_vector(current.rotation(), target.rotation());
    return e;
}

namespace {

bool accepted(const RobotModel& model, const Vec7& q, const Pose& target, const IkOptions& opt) {
    if (!model.within_limits(q)) {
        return false;
    }
    Pose p = forward_kinematics(model, q);
    return (p.translation() - target.translation()).norm() < opt.accept_tol &&
           angular_error(p, target) < opt.accept_tol;
}

std::optional<Vec7> descend(const RobotModel& model, const Pose& target, Vec7 q, const IkOptions& opt) {
    const Vec7 lo = model.lower();
    const Vec7 hi = model.upper();
    const Eigen::Matrix<double, 6, 6> damping =
        (opt.damping * opt.damping) * Eigen::Matrix<double, 6, 6>::Identity();
    q = q.cwiseMax(lo).cwiseMin(hi);
    for (int it = 0; it <= opt.max_iterations; ++it) {
        ChainFrames f = chain_frames(model, q);
        Vec6 err = pose_error(f.flange, target);
        if (err.head<3>().norm() + err.tail<3>().norm() < opt.converge_tol) {
            break;
        }
        if (it == opt.max_iterations) {
            break;
        }
        Mat67 jac = jacobian_from_frames(f, f.flange.translation());
        Vec7 dq = Vec7::Zero();
        // Joints pinned at a limit and pushed further out are dropped from the
        // step and the remaining columns re-solved.
        for (int pass = 0; pass < kJoints; ++pass) {
            Eigen::Matrix<double, 6, 6> jjt = jac * jac.transpose() + damping;
            dq = jac.transpose() * jjt.partialPivLu().solve(err);
            bool changed = false;
            for (int i = 0; i < kJoints; ++i) {
                bool pinned = (q(i) <= lo(i) && dq(i) < 0.0) || (q(i) >= hi(i) && dq(i) > 0.0);
                if (pinned && !jac.col(i).isZero()) {
                    jac.col(i).setZero();
                    changed = true;
                }
            }
            if (!changed) {
                break;
            }
        }
        double largest = dq.cwiseAbs().maxCoeff();
        if (largest > opt.max_step) {
            dq *= opt.max_step / largest;
        }
        q = (q + dq).cwiseMax(lo).cwiseMin(hi);
    }
    if (accepted(model, q, target, opt)) {
        return q;
    }
    return std::nullopt;
}

} // namespace

std::vector<Vec7> inverse_kinematics(const RobotModel& model, const Pose& target, std::span<const Vec7> seeds,
                                     const IkOptions& options) {
    std::vector<Vec7> out;
    if (!target.is_valid(1e-6)) {
        return out;
    }
    for (const Vec7& seed : seeds) {
        if (!seed.allFinite()) {
            continue;
        }
        auto q = descend(model, target, seed, options);
        if (!q) {
            continue;
        }
        bool duplicate = false;
        for (const Vec7& s : out) {
            if ((s - *q).norm() < 1e-6) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) {
            out.push_back(*q);
        }
    }
    return out;
}

Vec7 select_solution(std::span<const Vec7> solutions, const Vec7& q_m) {
    if (solutions.empty()) {
        throw EmptySolutionSet("no IK solutions to choose from");
    }
    std::size_t best = 0;
    double best_d = (solutions[0] - q_m).squaredNorm();
    for (std::size_t i = 1; i < solutions.size(); ++i) {
        double d = (solutions[i] - q_m).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return solutions[best];
}

IkSolver::IkSolver(RobotModel model, std::uint64_t seed, int random_seeds, IkOptions options,
                   int max_restart_seeds)
    : model_(std::move(model)),
      rng_(seed),
      random_seeds_(random_seeds),
      options_(options),
      max_restart_seeds_(max_restart_seeds) {}

Vec7 IkSolver::random_configuration() {
    Vec7 q;
    for (int i = 0; i < kJoints; ++i) {
        const auto& j = model_.joints[static_cast<std::size_t>(i)];
        std::uniform_real_distribution<double> u(j.lower, j.upper);
        q(i) = u(rng_);
    }
    return q;
}

std::vector<Vec7> IkSolver::solve(const Pose& target, const Vec7& q_current) {
    std::vector<Vec7> seeds;
    seeds.reserve(static_cast<std::size_t>(random_seeds_) + 1);
    seeds.push_back(q_current);
    for (int i = 0; i < random_seeds_; ++i) {
        seeds.push_back(random_configuration());
    }
    auto solutions = inverse_kinematics(model_, target, seeds, options_);
    const int batch = std::max(random_seeds_, 1);
    for (int spent = 0; solutions.empty() && spent < max_restart_seeds_; spent += batch) {
        seeds.clear();
        for (int i = 0; i < std::min(batch, max_restart_seeds_ - spent); ++i) {
            seeds.push_back(random_configuration());
        }
        solutions = inverse_kinematics(model_, target, seeds, options_);
    }
    return solutions;
}

std::optional<Vec7> IkSolver::solve_nearest(const Pose& target, const Vec7& q_current) {
    auto solutions = solve(target, q_current);
    if (solutions.empty()) {
        return std::nullopt;
    }
    return select_solution(solutions, q_current);
}

} // namespace vhmmt::kinematics
