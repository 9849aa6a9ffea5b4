#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "vhmmt/usmodel/imaging.hpp"

namespace vhmmt::metrics {

using Vec2 = Eigen::Vector2d;

/// Ellipse from second-order moments, in pixels. x runs along columns, y
/// along rows; a <= b; orientation is the angle of the b axis from +x
/// toward +y, in (-pi/2, pi/2].
struct EllipseFit {
    Vec2 centroid = Vec2::Zero();
    double a = 0.0;
    double b = 0.0;
    double orientation = 0.0;
    int area_px = 0;
    bool valid = false;
};

inline constexpr int kMinComponentPx = 30;

/// Pixels darker than `threshold` are grouped into 8-connected components.
/// Components touching the image border are ignored (they are cut off, or
/// are outside the phantom). The largest remaining one is fitted; fewer than
/// 30 pixels gives valid = false.
EllipseFit segment_vessel(std::span<const double> pixels, int cols, int rows, double threshold);
EllipseFit segment_vessel(const usmodel::UsImage& image, double threshold);

/// sqrt(1 - a^2 / b^2). Throws InvalidFit for an invalid fit or b <= 0.
double eccentricity(const EllipseFit& fit);
double eccentricity(double a, double b);

/// RMS of (x - target_x). Throws NoValidFrames when empty.
double lateral_rmse(std::span<const double> centroid_x, double target_x);
/// Invalid fits are skipped.
double lateral_rmse(std::span<const EllipseFit> fits, double target_x);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;   ///< sample standard deviation
    std::size_t n = 0;
};

/// Throws InsufficientSamples for fewer than two values.
MeanStd eccentricity_stats(std::span<const double> series);

struct Subtask {
    int id = 0;            ///< 1..5
    double start_s = 0.0;
    double end_s = 0.0;
    double duration() const { return end_s - start_s; }
};

/// Ordered, non-overlapping sub-task spans.
struct TaskTimeline {
    std::vector<Subtask> subtasks;
    /// Throws ConfigError when ids are outside 1..5, spans are reversed, out of order or overlap.
    void validate() const;
};

} // namespace vhmmt::metrics
