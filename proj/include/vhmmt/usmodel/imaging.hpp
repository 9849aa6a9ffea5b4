#pragma once

#include <cstdint>
#include <vector>

#include "vhmmt/core/pose.hpp"
#include "vhmmt/usmodel/phantom.hpp"

namespace vhmmt::usmodel {

/// Rectangular image in space. Local frame at the image center: x to the
/// right, y down the image (into tissue along the probe axis), z = x cross y.
struct ImagePlane {
    Pose pose;
    double width = 0.06;   ///< m
    double height = 0.06;  ///< m
    int cols = 256;
    int rows = 256;

    double pixel_width() const { return width / cols; }
    double pixel_height() const { return height / rows; }
    /// Center of pixel (col, row) in the plane frame.
    Vec3 local_point(int col, int row) const;
    Vec3 world_point(int col, int row) const { return pose * local_point(col, row); }
    /// Probe axis (image y) in the base frame.
    Vec3 probe_axis() const { return pose.rotate(Vec3::UnitY()); }
    void validate() const;
};

/// Image plane hanging below a probe tip whose z axis points into tissue.
ImagePlane plane_below_tip(const Pose& tip, double width, double height, int cols, int rows);
/// Tip pose that produces `plane` (inverse of plane_below_tip).
Pose tip_of_plane(const ImagePlane& plane);

enum class ImageSource : std::uint8_t { Preview = 0, Live = 1 };

struct UsImage {
    std::vector<double> pixels;  ///< row-major, rows x cols
    ImagePlane plane;
    std::int64_t timestamp_us = 0;
    ImageSource source = ImageSource::Live;

    double at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * plane.cols + col]; }
    double& at(int col, int row) { return pixels[static_cast<std::size_t>(row) * plane.cols + col]; }
};

inline constexpr int kDefaultSupersample = 4;

/// Synthesized live frame. Vessels are compressed along the probe axis by the
/// normal force; speckle comes from a generator seeded with `seed`.
/// Pixels straddling a boundary average a supersample x supersample grid over
/// their footprint (1 samples the center only); speckle scales with the
/// tissue share of the footprint.
UsImage live_image(const SyntheticPhantom& phantom, const ImagePlane& plane, double normal_force, std::uint64_t seed,
                   int supersample = kDefaultSupersample);

/// 8-bit grayscale copy, nearest-neighbor resampled to out_cols x out_rows.
std::vector<std::uint8_t> to_gray8(const UsImage& image, int out_cols, int out_rows);

} // namespace vhmmt::usmodel
