#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "vhmmt/core/pose.hpp"
#include "vhmmt/usmodel/imaging.hpp"

namespace vhmmt::usmodel {

/// Scalar voxel grid. Voxel (i, j, k) has its center at pose * (i, j, k) * spacing.
struct UsVolume {
    std::array<int, 3> dims{0, 0, 0};
    double spacing = 0.0005;
    Pose pose;
    std::vector<double> voxels;  ///< x fastest

    static UsVolume zeros(std::array<int, 3> dims, double spacing, const Pose& pose);

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
    }
    double at(int i, int j, int k) const { return voxels[index(i, j, k)]; }
    double& at(int i, int j, int k) { return voxels[index(i, j, k)]; }
    bool empty() const { return voxels.empty(); }
    void validate() const;
};

/// Compounds zero-force frames taken at `trajectory` into a volume whose
/// axes follow the first plane (lateral, depth, normal) at its pixel pitch.
/// Pixels are splatted onto the nearest voxel and averaged.
UsVolume generate_sweep(const SyntheticPhantom& phantom, std::span<const ImagePlane> trajectory, std::uint64_t seed);

/// Parallel planes stepping one pixel pitch along the normal, centered on the
/// tip path from `start` to `end` (both tip poses share one orientation).
std::vector<ImagePlane> linear_sweep(const Pose& start, const Vec3& end, double width, double height, int cols,
                                     int rows, double step);

/// Trilinear sample in voxel coordinates; 0 outside the lattice.
double sample_voxel(const UsVolume& volume, double u, double v, double w);

/// Preview image: trilinear interpolation at every pixel center.
UsImage reslice(const UsVolume& volume, const ImagePlane& plane);

/// Nearest-voxel splat of `frame`, then v <- (1 - alpha) v + alpha * pixel
/// (pixels landing in one voxel are averaged first).
void integrate_frame(UsVolume& volume, const UsImage& frame, double alpha = 0.5);

} // namespace vhmmt::usmodel
