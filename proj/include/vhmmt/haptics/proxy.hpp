#pragma once

#include <optional>
#include <span>

#include "vhmmt/haptics/octree.hpp"

namespace vhmmt::haptics {

struct HapticParams {
    double k = 800.0;      ///< N/m
    double d = 5.0;        ///< N s/m
    int n = 15;            ///< neighborhood size
    double r_max = 0.02;   ///< m, neighbors further away are ignored
    double f_max = 15.0;   ///< N
    Vec3 exterior_ref = Vec3(0.45, 0.0, 1.0);  ///< camera origin; normals face it

    void validate() const;
};

struct Plane {
    Vec3 centroid = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();

    double height(const Vec3& p) const { return normal.dot(p - centroid); }
};

/// Total-least-squares plane: normal is the smallest principal axis. When
/// `toward` is given the normal is flipped to face it.
/// Throws DegenerateNeighborhood for fewer than three, coincident or collinear points.
Plane fit_plane(std::span<const Vec3> neighbors, const std::optional<Vec3>& toward = std::nullopt);

struct ProxyState {
    Vec3 proxy = Vec3::Zero();
    bool in_contact = false;
    Vec3 normal = Vec3::UnitZ();
    Vec3 anchor = Vec3::Zero();  ///< centroid of the plane the proxy sits on
};

/// Proxy follows the HIP in free space. Once the HIP is behind the plane
/// fitted around the proxy, the proxy is the HIP projected onto that plane.
/// Fewer than three neighbors within r_max counts as free space.
ProxyState update_proxy(const ProxyState& previous, const Vec3& hip, const PointCloudOctree& tree,
                        const HapticParams& params);

/// k (proxy - hip) minus normal damping, clamped to f_max, never pulling inward.
Vec3 haptic_force(const Vec3& hip, const Vec3& hip_velocity, const ProxyState& proxy, const HapticParams& params);

} // namespace vhmmt::haptics
