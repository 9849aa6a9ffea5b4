#include "vhmmt/haptics/proxy.hpp"

#include <Eigen/Eigenvalues>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::haptics {

void HapticParams::validate() const {
    if (k < 0 || d < 0 || n < 3 || !(r_max > 0) || !(f_max > 0)) {
        throw ConfigError("haptic params need k, d >= 0, n >= 3 and positive r_max, f_max");
    }
}

Plane fit_plane(std::span<const Vec3> neighbors, const std::optional<Vec3>& toward) {
    if (neighbors.size() < 3) {
        throw DegenerateNeighborhood("plane fit needs three points");
    }
    Plane pl;
    for (const Vec3& p : neighbors) {
        pl.centroid += p;
    }
    pl.centroid /= static_cast<double>(neighbors.size());
    Mat3 cov = Mat3::Zero();
    for (const Vec3& p : neighbors) {
        Vec3 r = p - pl.centroid;
        cov += r * r.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const Vec3 ev = es.eigenvalues();  // ascending
    // Second axis must carry real spread, else the points sit on a line.
    if (ev(2) <= 0.0 || ev(1) <= 1e-12 * ev(2)) {
        throw DegenerateNeighborhood("neighborhood is collinear or coincident");
    }
    pl.normal = es.eigenvectors().col(0).normalized();
    if (toward && pl.normal.dot(*toward - pl.centroid) < 0.0) {
        pl.normal = -pl.normal;
    }
    return pl;
}

ProxyState update_proxy(const ProxyState& previous, const Vec3& hip, const PointCloudOctree& tree,
                        const HapticParams& params) {
    ProxyState free;
    free.proxy = hip;
    free.normal = previous.normal;

    const Vec3 query = previous.in_contact ? previous.proxy : hip;
    std::vector<Vec3> near;
    for (const auto& nb : tree.knn(query, static_cast<std::size_t>(params.n))) {
        if (nb.distance <= params.r_max) {
            near.push_back(tree.points()[nb.index]);
        }
    }
    if (near.size() < 3) {
        return free;
    }
    Plane pl;
    try {
        pl = fit_plane(near, params.exterior_ref);
    } catch (const DegenerateNeighborhood&) {
        return free;
    }
    // Keep one side as "outside" for the whole contact episode.
    if (previous.in_contact && pl.normal.dot(previous.normal) < 0.0) {
        pl.normal = -pl.normal;
    }
    const double h = pl.height(hip);
    if (h >= 0.0) {
        free.normal = pl.normal;
        return free;
    }
    ProxyState c;
    c.in_contact = true;
    c.normal = pl.normal;
    c.proxy = hip - h * pl.normal;
    c.anchor = pl.centroid;
    return c;
}

Vec3 haptic_force(const Vec3& hip, const Vec3& hip_velocity, const ProxyState& proxy, const HapticParams& params) {
    if (!proxy.in_contact) {
        return Vec3::Zero();
    }
    const Vec3& n = proxy.normal;
    Vec3 f = params.k * (proxy.proxy - hip) - params.d * n.dot(hip_velocity) * n;
    const double outward = f.dot(n);
    if (outward < 0.0) {
        f -= outward * n;
    }
    const double mag = f.norm();
    if (mag > params.f_max) {
        f *= params.f_max / mag;
    }
    return f;
}

} // namespace vhmmt::haptics
