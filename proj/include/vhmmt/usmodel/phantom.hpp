#pragma once

#include <string>
#include <vector>

#include "vhmmt/core/pose.hpp"

namespace vhmmt::usmodel {

/// Tube made of capsules along a polyline centerline.
struct Vessel {
    std::string name;
    std::vector<Vec3> centerline;  ///< phantom frame (m)
    double radius = 0.0;           ///< m
};

struct IntensityModel {
    double background = 0.55;
    double speckle_sigma = 0.06;
    double vessel = 0.08;
    double surface = 0.9;
    double surface_thickness = 0.0005;  ///< m
    double attenuation = 2.0;           ///< 1/m
    double compression_per_newton = 0.02;
    double compression_floor = 0.2;

    /// Dark-pixel threshold separating vessel lumen from tissue.
    double vessel_threshold() const { return background - 3.0 * speckle_sigma; }
    /// Axis scale along the probe: max(1 - c_F F, floor).
    double squash(double force) const;
};

/// Rectangular tissue block with embedded vessels.
///
/// Phantom frame: origin at the center of the top face, z up, so tissue
/// occupies |x| <= hx, |y| <= hy, -depth <= z <= 0.
class SyntheticPhantom {
public:
    Pose pose;  ///< phantom frame in follower base
    Vec3 half_extent{0.07, 0.07, 0.035};
    std::vector<Vessel> vessels;
    IntensityModel intensity;

    /// Branched two-vessel block placed at `pose`.
    static SyntheticPhantom standard(const Pose& pose = default_pose());
    static Pose default_pose() { return Pose::from_translation(0.45, 0.0, 0.30); }

    double depth() const { return 2.0 * half_extent.z(); }
    Vec3 to_local(const Vec3& p_base) const { return pose.inverse() * p_base; }

    /// Box signed distance in the phantom frame: negative inside.
    double signed_distance_local(const Vec3& p) const;
    double signed_distance(const Vec3& p_base) const { return signed_distance_local(to_local(p_base)); }
    /// Outward unit gradient of the signed distance, base frame.
    Vec3 surface_normal(const Vec3& p_base) const;

    /// True when `p` (phantom frame) lies in a vessel compressed by `squash`
    /// along the unit `probe_axis` (phantom frame) and stretched across it.
    bool in_vessel(const Vec3& p, const Vec3& probe_axis, double squash) const;
    /// Noise-free echo intensity at `p` (phantom frame).
    double mean_intensity(const Vec3& p, const Vec3& probe_axis, double squash, bool* speckled = nullptr) const;

    /// Throws ConfigError unless every vessel lies strictly inside the block.
    void validate() const;

    const Vessel& vessel(const std::string& name) const;
};

/// Closest point on segment [a, b] to p.
Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b);

} // namespace vhmmt::usmodel
