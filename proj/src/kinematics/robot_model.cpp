#include "vhmmt/kinematics/robot_model.hpp"

#include <cmath>
#include <fstream>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::kinematics {

namespace {

template <typename F>
Vec7 per_joint(const RobotModel& m, F&& f) {
    Vec7 v;
    for (int i = 0; i < kJoints; ++i) {
        v(i) = f(m.joints[static_cast<std::size_t>(i)]);
    }
    return v;
}

} // namespace

Vec7 RobotModel::lower() const { return per_joint(*this, [](const JointSpec& j) { return j.lower; }); }
Vec7 RobotModel::upper() const { return per_joint(*this, [](const JointSpec& j) { return j.upper; }); }
Vec7 RobotModel::v_max() const { return per_joint(*this, [](const JointSpec& j) { return j.v_max; }); }
Vec7 RobotModel::a_max() const { return per_joint(*this, [](const JointSpec& j) { return j.a_max; }); }
Vec7 RobotModel::j_max() const { return per_joint(*this, [](const JointSpec& j) { return j.j_max; }); }

bool RobotModel::within_limits(const Vec7& q, double tol) const {
    for (int i = 0; i < kJoints; ++i) {
        const auto& j = joints[static_cast<std::size_t>(i)];
        if (!(q(i) >= j.lower - tol && q(i) <= j.upper + tol)) {
            return false;
        }
    }
    return true;
}

Vec7 RobotModel::clamp(const Vec7& q) const { return q.cwiseMax(lower()).cwiseMin(upper()); }

void RobotModel::validate() const {
    for (std::size_t i = 0; i < joints.size(); ++i) {
        const auto& j = joints[i];
        const std::string where = name + " joint " + std::to_string(i + 1);
        if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
            throw ConfigError(where + ": axis must be unit length");
        }
        if (!(j.lower < j.upper)) {
            throw ConfigError(where + ": lower limit must be below upper limit");
        }
        if (!(j.v_max > 0 && j.a_max > 0 && j.j_max > 0)) {
            throw ConfigError(where + ": velocity/acceleration/jerk limits must be positive");
        }
        if (!j.link.is_valid()) {
            throw ConfigError(where + ": invalid link transform");
        }
    }
    if (!within_limits(home)) {
        throw ConfigError(name + ": home configuration outside joint limits");
    }
}

RobotModel RobotModel::from_json(const nlohmann::json& j) {
    RobotModel m;
    try {
        m.name = j.value("name", std::string("robot"));
        const auto& js = j.at("joints");
        if (!js.is_array() || js.size() != static_cast<std::size_t>(kJoints)) {
            throw ConfigError("robot model needs exactly 7 joints");
        }
        for (std::size_t i = 0; i < js.size(); ++i) {
            const auto& e = js[i];
            auto& spec = m.joints[i];
            auto axis = e.at("axis").get<std::array<double, 3>>();
            spec.axis = Vec3(axis[0], axis[1], axis[2]);
            spec.link = e.at("link").get<Pose>();
            spec.lower = e.at("lower").get<double>();
            spec.upper = e.at("upper").get<double>();
            spec.v_max = e.value("v_max", spec.v_max);
            spec.a_max = e.value("a_max", spec.a_max);
            spec.j_max = e.value("j_max", spec.j_max);
        }
        m.flange = j.value("flange", Pose::identity());
        if (j.contains("home")) {
            auto h = j.at("home").get<std::array<double, 7>>();
            m.home = Eigen::Map<const Vec7>(h.data());
        } else {
            m.home = 0.5 * (m.lower() + m.upper());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("robot model: ") + e.what());
    }
    m.validate();
    return m;
}

RobotModel RobotModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open robot model " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("robot model " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

} // namespace vhmmt::kinematics
