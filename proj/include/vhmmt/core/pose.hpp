#pragma once

#include <array>
#include <string>

#include <json.hpp>

#include "vhmmt/core/bytes.hpp"
#include "vhmmt/core/types.hpp"

namespace vhmmt {

/// Rigid transform stored as a unit quaternion plus a translation in meters.
///
/// Composition renormalizes the quaternion so long chains do not drift off
/// the unit sphere. Matrices are produced on demand.
class Pose {
public:
    Pose() = default;
    Pose(const Eigen::Quaterniond& rotation, const Vec3& translation);

    static Pose identity() { return {}; }
    static Pose from_translation(double x, double y, double z);
    static Pose from_translation(const Vec3& t);
    static Pose from_axis_angle(const Vec3& axis, double angle, const Vec3& t = Vec3::Zero());
    /// Rotation part taken from the upper-left 3x3 block; it must be orthonormal.
    static Pose from_matrix(const Mat4& m);
    /// Accepts {w, x, y, z, tx, ty, tz}; the quaternion is normalized.
    static Pose from_array(const std::array<double, 7>& v);

    const Eigen::Quaterniond& rotation() const { return q_; }
    const Vec3& translation() const { return t_; }
    Mat3 rotation_matrix() const { return q_.toRotationMatrix(); }
    Mat4 matrix() const;
    std::array<double, 7> to_array() const;

    Pose inverse() const;
    Pose operator*(const Pose& rhs) const;
    Vec3 operator*(const Vec3& point) const { return q_ * point + t_; }
    Vec3 rotate(const Vec3& v) const { return q_ * v; }

    bool is_valid(double tol = 1e-9) const;

    /// 7 little-endian float64 values: w, x, y, z, tx, ty, tz.
    void serialize(Bytes& out) const;
    static Pose deserialize(ByteReader& in);
    static constexpr std::size_t kWireSize = 56;

private:
    Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
    Vec3 t_ = Vec3::Zero();
};

Pose compose(const Pose& a, const Pose& b);

/// Geodesic distance between the rotations of two poses, in [0, pi].
double angular_error(const Pose& a, const Pose& b);
double angular_error(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

/// Translation distance plus geodesic rotation distance.
double pose_distance(const Pose& a, const Pose& b);

/// Text form `[w,x,y,z,tx,ty,tz]`.
void to_json(nlohmann::json& j, const Pose& p);
void from_json(const nlohmann::json& j, Pose& p);

/// Rotation vector (axis * angle) taking `from` to `to` in the base frame.
Vec3 rotation_error_vector(const Eigen::Quaterniond& from, const Eigen::Quaterniond& to);

} // namespace vhmmt
