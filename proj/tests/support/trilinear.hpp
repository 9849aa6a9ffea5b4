#pragma once

#include <cmath>

#include "support/random_pose.hpp"
#include "vhmmt/usmodel/volume.hpp"

namespace vhmmt::testing {

/// Scalar trilinear lookup of a world point, written from scratch: explicit
/// matrix transform, floor, and a weighted sum over the eight corners.
inline double trilinear_oracle(const usmodel::UsVolume& vol, const Vec3& world) {
    Mat4 to_vox = oracle_inverse(oracle_matrix(vol.pose));
    Eigen::Vector4d h(world.x(), world.y(), world.z(), 1.0);
    Eigen::Vector4d l = to_vox * h;
    double g[3] = {l(0) / vol.spacing, l(1) / vol.spacing, l(2) / vol.spacing};
    int base[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
        if (g[a] < 0.0 || g[a] > vol.dims[a] - 1) {
            return 0.0;
        }
        base[a] = static_cast<int>(std::floor(g[a]));
        if (base[a] == vol.dims[a] - 1 && vol.dims[a] > 1) {
            base[a] -= 1;
        }
        frac[a] = g[a] - base[a];
    }
    double sum = 0.0;
    for (int c = 0; c < 8; ++c) {
        int idx[3];
        double w = 1.0;
        for (int a = 0; a < 3; ++a) {
            int bit = (c >> a) & 1;
            idx[a] = std::min(base[a] + bit, vol.dims[a] - 1);
            w *= bit ? frac[a] : 1.0 - frac[a];
        }
        sum += w * vol.at(idx[0], idx[1], idx[2]);
    }
    return sum;
}

/// World position of pixel (c, r) via the matrix oracle.
inline Vec3 pixel_world_oracle(const usmodel::ImagePlane& p, int c, int r) {
    double x = (c + 0.5 - 0.5 * p.cols) * p.width / p.cols;
    double y = (r + 0.5 - 0.5 * p.rows) * p.height / p.rows;
    Eigen::Vector4d w = oracle_matrix(p.pose) * Eigen::Vector4d(x, y, 0.0, 1.0);
    return w.head<3>();
}

} // namespace vhmmt::testing
