#pragma once

#include <string>

#include "vhmmt/kinematics/robot_model.hpp"

namespace vhmmt::testing {

inline kinematics::RobotModel panda() {
    return kinematics::RobotModel::load(std::string(VHMMT_CONFIG_DIR) + "/panda.json");
}

/// Only joint 1 does anything: it spins about z and the flange sits at (reach, 0, 0).
inline kinematics::RobotModel single_joint(double reach) {
    kinematics::RobotModel m;
    m.name = "single";
    for (auto& j : m.joints) {
        j.axis = Vec3::UnitZ();
        j.lower = -M_PI;
        j.upper = M_PI;
    }
    m.flange = Pose::from_translation(reach, 0, 0);
    return m;
}

} // namespace vhmmt::testing
