#include "vhmmt/usmodel/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::usmodel {

double IntensityModel::squash(double force) const {
    return std::max(1.0 - compression_per_newton * std::max(force, 0.0), compression_floor);
}

SyntheticPhantom SyntheticPhantom::standard(const Pose& pose) {
    SyntheticPhantom ph;
    ph.pose = pose;
    const Vec3 bifurcation(0.0, -0.012, -0.025);
    ph.vessels.push_back({"large", {Vec3(-0.06, -0.012, -0.025), bifurcation, Vec3(0.06, -0.012, -0.025)}, 0.006});
    ph.vessels.push_back({"branch", {bifurcation, Vec3(0.03, 0.012, -0.022), Vec3(0.06, 0.032, -0.02)}, 0.003});
    ph.validate();
    return ph;
}

double SyntheticPhantom::signed_distance_local(const Vec3& p) const {
    const Vec3 center(0.0, 0.0, -half_extent.z());
    Vec3 q = (p - center).cwiseAbs() - half_extent;
    return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

Vec3 SyntheticPhantom::surface_normal(const Vec3& p_base) const {
    const Vec3 p = to_local(p_base);
    const Vec3 center(0.0, 0.0, -half_extent.z());
    const Vec3 rel = p - center;
    Vec3 q = rel.cwiseAbs() - half_extent;
    Vec3 n = Vec3::Zero();
    if (q.maxCoeff() > 0.0) {
        n = q.cwiseMax(0.0);
    } else {
        Eigen::Index axis = 0;
        q.maxCoeff(&axis);
        n(axis) = 1.0;
    }
    for (int i = 0; i < 3; ++i) {
        n(i) = std::copysign(n(i), rel(i));
    }
    return pose.rotate(n.normalized());
}

Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) {
        return a;
    }
    double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return a + t * ab;
}

bool SyntheticPhantom::in_vessel(const Vec3& p, const Vec3& probe_axis, double squash) const {
    const double s2 = squash * squash;
    for (const Vessel& v : vessels) {
        const double r2 = v.radius * v.radius;
        for (std::size_t i = 0; i + 1 < v.centerline.size(); ++i) {
            Vec3 o = p - closest_on_segment(p, v.centerline[i], v.centerline[i + 1]);
            double along = o.dot(probe_axis);
            double across2 = std::max(o.squaredNorm() - along * along, 0.0);
            // Ellipse with semi-axis r*s along the probe and r/s across it.
            if (along * along / s2 + across2 * s2 <= r2) {
                return true;
            }
        }
    }
    return false;
}

double SyntheticPhantom::mean_intensity(const Vec3& p, const Vec3& probe_axis, double squash, bool* speckled) const {
    if (speckled) {
        *speckled = false;
    }
    if (signed_distance_local(p) > 0.0) {
        return 0.0;
    }
    const double depth = std::max(-p.z(), 0.0);
    if (depth < intensity.surface_thickness) {
        return intensity.surface;
    }
    const double atten = std::exp(-intensity.attenuation * depth);
    if (in_vessel(p, probe_axis, squash)) {
        return intensity.vessel * atten;
    }
    if (speckled) {
        *speckled = true;
    }
    return intensity.background * atten;
}

void SyntheticPhantom::validate() const {
    if (!(half_extent.array() > 0).all()) {
        throw ConfigError("phantom extent must be positive");
    }
    for (const Vessel& v : vessels) {
        if (v.radius <= 0.0 || v.centerline.size() < 2) {
            throw ConfigError("vessel '" + v.name + "' needs a radius and two centerline points");
        }
        for (const Vec3& c : v.centerline) {
            if (signed_distance_local(c) >= -v.radius) {
                throw ConfigError("vessel '" + v.name + "' leaves the block");
            }
        }
    }
}

const Vessel& SyntheticPhantom::vessel(const std::string& name) const {
    for (const Vessel& v : vessels) {
        if (v.name == name) {
            return v;
        }
    }
    throw ConfigError("no vessel named '" + name + "'");
}

} // namespace vhmmt::usmodel
