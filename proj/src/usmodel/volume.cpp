#include "vhmmt/usmodel/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::usmodel {

UsVolume UsVolume::zeros(std::array<int, 3> dims, double spacing, const Pose& pose) {
    UsVolume v;
    v.dims = dims;
    v.spacing = spacing;
    v.pose = pose;
    v.validate();
    v.voxels.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0.0);
    return v;
}

void UsVolume::validate() const {
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1 || !(spacing > 0) || !pose.is_valid()) {
        throw ConfigError("volume needs positive dims and spacing");
    }
}

UsVolume generate_sweep(const SyntheticPhantom& phantom, std::span<const ImagePlane> trajectory, std::uint64_t seed) {
    if (trajectory.empty()) {
        throw ConfigError("sweep trajectory is empty");
    }
    const ImagePlane& first = trajectory.front();
    const double spacing = first.pixel_width();
    const Pose frame(first.pose.rotation(), first.pose.translation());
    const Pose to_frame = frame.inverse();

    // Lattice bounds from the pixel-center extremes of every plane.
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const ImagePlane& p : trajectory) {
        for (int r : {0, p.rows - 1}) {
            for (int c : {0, p.cols - 1}) {
                Vec3 x = to_frame * p.world_point(c, r);
                lo = lo.cwiseMin(x);
                hi = hi.cwiseMax(x);
            }
        }
    }
    std::array<int, 3> dims;
    for (int a = 0; a < 3; ++a) {
        dims[a] = static_cast<int>(std::lround((hi(a) - lo(a)) / spacing)) + 1;
    }
    UsVolume vol = UsVolume::zeros(dims, spacing, frame * Pose::from_translation(lo));
    std::vector<std::uint32_t> hits(vol.voxels.size(), 0);

    const Pose world_to_voxel = vol.pose.inverse();
    for (std::size_t f = 0; f < trajectory.size(); ++f) {
        // Point samples, so every voxel holds the value at its own center.
        UsImage img = live_image(phantom, trajectory[f], 0.0, seed + f, 1);
        const Pose plane_to_voxel = world_to_voxel * trajectory[f].pose;
        for (int r = 0; r < img.plane.rows; ++r) {
            for (int c = 0; c < img.plane.cols; ++c) {
                Vec3 u = (plane_to_voxel * img.plane.local_point(c, r)) / spacing;
                long i = std::lround(u.x()), j = std::lround(u.y()), k = std::lround(u.z());
                if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2]) {
                    continue;
                }
                std::size_t idx = vol.index(static_cast<int>(i), static_cast<int>(j), static_cast<int>(k));
                vol.voxels[idx] += img.at(c, r);
                ++hits[idx];
            }
        }
    }
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (hits[i] > 1) {
            vol.voxels[i] /= hits[i];
        }
    }
    return vol;
}

std::vector<ImagePlane> linear_sweep(const Pose& start, const Vec3& end, double width, double height, int cols,
                                     int rows, double step) {
    const Vec3 delta = end - start.translation();
    const int n = static_cast<int>(std::floor(delta.norm() / step + 1e-9)) + 1;
    const Vec3 dir = delta.norm() > 0 ? Vec3(delta.normalized()) : Vec3::Zero();
    std::vector<ImagePlane> planes;
    planes.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        Pose tip(start.rotation(), start.translation() + (k * step) * dir);
        planes.push_back(plane_below_tip(tip, width, height, cols, rows));
    }
    return planes;
}

double sample_voxel(const UsVolume& vol, double u, double v, double w) {
    const int nx = vol.dims[0], ny = vol.dims[1], nz = vol.dims[2];
    // Lattice-aligned planes land on the boundary give or take round-off.
    constexpr double eps = 1e-9;
    if (!(u >= -eps && v >= -eps && w >= -eps && u <= nx - 1 + eps && v <= ny - 1 + eps && w <= nz - 1 + eps)) {
        return 0.0;
    }
    u = std::clamp(u, 0.0, nx - 1.0);
    v = std::clamp(v, 0.0, ny - 1.0);
    w = std::clamp(w, 0.0, nz - 1.0);
    int i = std::min(static_cast<int>(u), std::max(nx - 2, 0));
    int j = std::min(static_cast<int>(v), std::max(ny - 2, 0));
    int k = std::min(static_cast<int>(w), std::max(nz - 2, 0));
    double fu = u - i, fv = v - j, fw = w - k;
    // Degenerate single-voxel axes contribute only their one sample.
    const int di = nx > 1 ? 1 : 0;
    const std::size_t dj = ny > 1 ? static_cast<std::size_t>(nx) : 0;
    const std::size_t dk = nz > 1 ? static_cast<std::size_t>(nx) * ny : 0;
    const double* p = vol.voxels.data() + vol.index(i, j, k);
    double c00 = p[0] + fu * (p[di] - p[0]);
    double c10 = p[dj] + fu * (p[dj + di] - p[dj]);
    double c01 = p[dk] + fu * (p[dk + di] - p[dk]);
    double c11 = p[dk + dj] + fu * (p[dk + dj + di] - p[dk + dj]);
    double c0 = c00 + fv * (c10 - c00);
    double c1 = c01 + fv * (c11 - c01);
    return c0 + fw * (c1 - c0);
}

UsImage reslice(const UsVolume& volume, const ImagePlane& plane) {
    if (volume.empty()) {
        throw ConfigError("cannot reslice an empty volume");
    }
    UsImage img;
    img.plane = plane;
    img.source = ImageSource::Preview;
    img.pixels.assign(static_cast<std::size_t>(plane.cols) * plane.rows, 0.0);

    // Pixel (c, r) maps affinely to voxel coordinates: origin + c*dc + r*dr.
    const Pose m = volume.pose.inverse() * plane.pose;
    const double inv = 1.0 / volume.spacing;
    const Vec3 origin = (m * plane.local_point(0, 0)) * inv;
    const Vec3 dc = m.rotate(Vec3(plane.pixel_width(), 0, 0)) * inv;
    const Vec3 dr = m.rotate(Vec3(0, plane.pixel_height(), 0)) * inv;
    double* out = img.pixels.data();
    for (int r = 0; r < plane.rows; ++r) {
        Vec3 u = origin + r * dr;
        for (int c = 0; c < plane.cols; ++c, ++out) {
            *out = sample_voxel(volume, u.x() + c * dc.x(), u.y() + c * dc.y(), u.z() + c * dc.z());
        }
    }
    return img;
}

void integrate_frame(UsVolume& volume, const UsImage& frame, double alpha) {
    const Pose m = volume.pose.inverse() * frame.plane.pose;
    std::unordered_map<std::size_t, std::pair<double, int>> splat;
    for (int r = 0; r < frame.plane.rows; ++r) {
        for (int c = 0; c < frame.plane.cols; ++c) {
            Vec3 u = (m * frame.plane.local_point(c, r)) / volume.spacing;
            long i = std::lround(u.x()), j = std::lround(u.y()), k = std::lround(u.z());
            if (i < 0 || j < 0 || k < 0 || i >= volume.dims[0] || j >= volume.dims[1] || k >= volume.dims[2]) {
                continue;
            }
            auto& acc = splat[volume.index(static_cast<int>(i), static_cast<int>(j), static_cast<int>(k))];
            acc.first += frame.at(c, r);
            ++acc.second;
        }
    }
    for (const auto& [idx, acc] : splat) {
        double& v = volume.voxels[idx];
        v = (1.0 - alpha) * v + alpha * (acc.first / acc.second);
    }
}

} // namespace vhmmt::usmodel
