#include "vhmmt/core/pose.hpp"

#include <algorithm>
#include <cmath>

#include "vhmmt/core/errors.hpp"

namespace vhmmt {

Pose::Pose(const Eigen::Quaterniond& rotation, const Vec3& translation)
    : q_(rotation.normalized()), t_(translation) {}

Pose Pose::from_translation(double x, double y, double z) { return from_translation(Vec3(x, y, z)); }

Pose Pose::from_translation(const Vec3& t) { return Pose(Eigen::Quaterniond::Identity(), t); }

Pose Pose::from_axis_angle(const Vec3& axis, double angle, const Vec3& t) {
    return Pose(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())), t);
}

Pose Pose::from_matrix(const Mat4& m) {
    Mat3 r = m.topLeftCorner<3, 3>();
    return Pose(Eigen::Quaterniond(r), m.topRightCorner<3, 1>());
}

Pose Pose::from_array(const std::array<double, 7>& v) {
    return Pose(Eigen::Quaterniond(v[0], v[1], v[2], v[3]), Vec3(v[4], v[5], v[6]));
}

Mat4 Pose::matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = q_.toRotationMatrix();
    m.topRightCorner<3, 1>() = t_;
    return m;
}

std::array<double, 7> Pose::to_array() const {
    return {q_.w(), q_.x(), q_.y(), q_.z(), t_.x(), t_.y(), t_.z()};
}

Pose Pose::inverse() const {
    Eigen::Quaterniond qi = q_.conjugate();
    return Pose(qi, -(qi * t_));
}

Pose Pose::operator*(const Pose& rhs) const {
    return Pose(q_ * rhs.q_, q_ * rhs.t_ + t_);
}

bool Pose::is_valid(double tol) const {
    if (!q_.coeffs().allFinite() || !t_.allFinite()) {
        return false;
    }
    return std::abs(q_.norm() - 1.0) <= tol;
}

void Pose::serialize(Bytes& out) const {
    ByteWriter w(out);
    for (double v : to_array()) {
        w.put_f64(v);
    }
}

Pose Pose::deserialize(ByteReader& in) {
    std::array<double, 7> v{};
    for (double& x : v) {
        x = in.get_f64();
    }
    // Keep the raw quaternion so validators can inspect its norm.
    Pose p;
    p.q_ = Eigen::Quaterniond(v[0], v[1], v[2], v[3]);
    p.t_ = Vec3(v[4], v[5], v[6]);
    return p;
}

Pose compose(const Pose& a, const Pose& b) { return a * b; }

double angular_error(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
    // atan2 form stays accurate near zero where acos loses half the digits.
    Eigen::Quaterniond d = a.conjugate() * b;
    double s = d.vec().norm();
    double c = std::abs(d.w());
    return 2.0 * std::atan2(s, c);
}

double angular_error(const Pose& a, const Pose& b) { return angular_error(a.rotation(), b.rotation()); }

double pose_distance(const Pose& a, const Pose& b) {
    return (a.translation() - b.translation()).norm() + angular_error(a, b);
}

Vec3 rotation_error_vector(const Eigen::Quaterniond& from, const Eigen::Quaterniond& to) {
    Eigen::Quaterniond d = to * from.conjugate();
    if (d.w() < 0.0) {
        d.coeffs() = -d.coeffs();
    }
    double s = d.vec().norm();
    if (s < 1e-15) {
        return 2.0 * d.vec();
    }
    double angle = 2.0 * std::atan2(s, d.w());
    return d.vec() * (angle / s);
}

void to_json(nlohmann::json& j, const Pose& p) { j = p.to_array(); }

void from_json(const nlohmann::json& j, Pose& p) {
    if (!j.is_array() || j.size() != 7) {
        throw ConfigError("pose must be a 7-element array [w,x,y,z,tx,ty,tz]");
    }
    std::array<double, 7> v{};
    for (std::size_t i = 0; i < 7; ++i) {
        v[i] = j.at(i).get<double>();
    }
    p = Pose::from_array(v);
}

} // namespace vhmmt
