#pragma once

#include <array>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "vhmmt/core/pose.hpp"

namespace vhmmt::kinematics {

struct JointSpec {
    Vec3 axis = Vec3::UnitZ();   ///< rotation axis in the joint frame
    Pose link;                   ///< parent frame -> joint frame, applied before the rotation
    double lower = -M_PI;        ///< rad
    double upper = M_PI;         ///< rad
    double v_max = 2.0;          ///< rad/s
    double a_max = 10.0;         ///< rad/s^2
    double j_max = 1000.0;       ///< rad/s^3
};

/// 7-joint revolute serial chain.
struct RobotModel {
    std::string name = "robot";
    std::array<JointSpec, kJoints> joints{};
    Pose flange;
    Vec7 home = Vec7::Zero();

    Vec7 lower() const;
    Vec7 upper() const;
    Vec7 v_max() const;
    Vec7 a_max() const;
    Vec7 j_max() const;

    bool within_limits(const Vec7& q, double tol = 0.0) const;
    Vec7 clamp(const Vec7& q) const;

    /// Throws ConfigError when an invariant (unit axes, ordered limits, positive rates) fails.
    void validate() const;

    static RobotModel from_json(const nlohmann::json& j);
    static RobotModel load(const std::filesystem::path& path);
};

} // namespace vhmmt::kinematics
