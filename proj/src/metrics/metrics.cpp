#include "vhmmt/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::metrics {

EllipseFit segment_vessel(std::span<const double> pixels, int cols, int rows, double threshold) {
    if (cols <= 0 || rows <= 0 || pixels.size() != static_cast<std::size_t>(cols) * rows) {
        throw ConfigError("image size does not match its pixel count");
    }
    const std::size_t n = pixels.size();
    std::vector<int> label(n, -1);
    std::vector<int> stack;
    std::vector<int> best;
    std::vector<int> current;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (label[seed] >= 0 || !(pixels[seed] < threshold)) {
            continue;
        }
        current.clear();
        bool touches_border = false;
        label[seed] = 1;
        stack.push_back(static_cast<int>(seed));
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            current.push_back(i);
            const int c = i % cols, r = i / cols;
            touches_border = touches_border || c == 0 || r == 0 || c == cols - 1 || r == rows - 1;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const int cc = c + dc, rr = r + dr;
                    if (cc < 0 || rr < 0 || cc >= cols || rr >= rows) {
                        continue;
                    }
                    const int j = rr * cols + cc;
                    if (label[j] < 0 && pixels[j] < threshold) {
                        label[j] = 1;
                        stack.push_back(j);
                    }
                }
            }
        }
        if (!touches_border && current.size() > best.size()) {
            best.swap(current);
        }
    }

    EllipseFit fit;
    fit.area_px = static_cast<int>(best.size());
    if (fit.area_px < kMinComponentPx) {
        return fit;
    }

    // Moments use fractional weights so pixels only partly covered by the
    // vessel count partly: w = (local background - v) / (background - vessel),
    // clipped to [0, 1], over the component grown by one pixel.
    std::vector<std::uint8_t> in(n, 0), band(n, 0);
    for (int i : best) {
        in[i] = 1;
    }
    std::vector<int> support;
    for (int i : best) {
        const int c = i % cols, r = i / cols;
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const int j = (r + dr) * cols + (c + dc);
                if (!band[j]) {
                    band[j] = 1;
                    support.push_back(j);
                }
            }
        }
    }
    double inner = 0.0;
    int inner_n = 0;
    for (int i : best) {
        const int c = i % cols, r = i / cols;
        bool core = true;
        for (int dr = -1; dr <= 1 && core; ++dr) {
            for (int dc = -1; dc <= 1 && core; ++dc) {
                core = in[(r + dr) * cols + (c + dc)] != 0;
            }
        }
        if (core) {
            inner += pixels[i];
            ++inner_n;
        }
    }
    // Background per row (tissue darkens with depth): median of the row away from the component.
    std::vector<double> row_bg(rows, threshold);
    std::vector<double> buf;
    for (int r = 0; r < rows; ++r) {
        buf.clear();
        for (int c = 0; c < cols; ++c) {
            const int j = r * cols + c;
            if (!band[j]) {
                buf.push_back(pixels[j]);
            }
        }
        if (!buf.empty()) {
            std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2), buf.end());
            row_bg[r] = buf[buf.size() / 2];
        }
    }
    const double vessel_level = inner_n > 0 ? inner / inner_n : threshold;

    double total = 0.0;
    Vec2 mean = Vec2::Zero();
    std::vector<double> w(support.size());
    for (std::size_t s = 0; s < support.size(); ++s) {
        const int j = support[s];
        const double bg = row_bg[j / cols];
        const double contrast = bg - vessel_level;
        // Without usable contrast fall back to the binary mask.
        w[s] = contrast > 1e-3 ? std::clamp((bg - pixels[j]) / contrast, 0.0, 1.0) : in[j] ? 1.0 : 0.0;
        total += w[s];
        mean += w[s] * Vec2(j % cols, j / cols);
    }
    mean /= total;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (std::size_t s = 0; s < support.size(); ++s) {
        const Vec2 d = Vec2(support[s] % cols, support[s] / cols) - mean;
        cov += w[s] * d * d.transpose();
    }
    cov /= total;
    // Each pixel is a unit square, not a point: add its own 1/12 spread.
    cov.diagonal().array() += 1.0 / 12.0;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    // A filled ellipse with semi-axis s has variance s^2 / 4 along it.
    fit.a = 2.0 * std::sqrt(std::max(es.eigenvalues()(0), 0.0));
    fit.b = 2.0 * std::sqrt(std::max(es.eigenvalues()(1), 0.0));
    const Vec2 major = es.eigenvectors().col(1);
    fit.orientation = std::atan2(major.y(), major.x());
    if (fit.orientation <= -M_PI / 2) {
        fit.orientation += M_PI;
    } else if (fit.orientation > M_PI / 2) {
        fit.orientation -= M_PI;
    }
    fit.centroid = mean;
    fit.valid = fit.a > 0.0;
    return fit;
}

EllipseFit segment_vessel(const usmodel::UsImage& image, double threshold) {
    return segment_vessel(image.pixels, image.plane.cols, image.plane.rows, threshold);
}

double eccentricity(double a, double b) {
    if (!(b > 0.0) || a < 0.0 || a > b) {
        throw InvalidFit("eccentricity needs 0 <= a <= b and b > 0");
    }
    return std::sqrt(1.0 - (a * a) / (b * b));
}

double eccentricity(const EllipseFit& fit) {
    if (!fit.valid) {
        throw InvalidFit("ellipse fit is not valid");
    }
    return eccentricity(fit.a, fit.b);
}

double lateral_rmse(std::span<const double> centroid_x, double target_x) {
    if (centroid_x.empty()) {
        throw NoValidFrames("no valid centroid");
    }
    double sum = 0.0;
    for (double x : centroid_x) {
        sum += (x - target_x) * (x - target_x);
    }
    return std::sqrt(sum / static_cast<double>(centroid_x.size()));
}

double lateral_rmse(std::span<const EllipseFit> fits, double target_x) {
    std::vector<double> xs;
    for (const auto& f : fits) {
        if (f.valid) {
            xs.push_back(f.centroid.x());
        }
    }
    return lateral_rmse(xs, target_x);
}

MeanStd eccentricity_stats(std::span<const double> series) {
    if (series.size() < 2) {
        throw InsufficientSamples("need at least two eccentricity samples");
    }
    MeanStd s;
    s.n = series.size();
    for (double e : series) {
        s.mean += e;
    }
    s.mean /= static_cast<double>(s.n);
    double ss = 0.0;
    for (double e : series) {
        ss += (e - s.mean) * (e - s.mean);
    }
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    return s;
}

void TaskTimeline::validate() const {
    double last_end = -INFINITY;
    int last_id = 0;
    for (const auto& s : subtasks) {
        if (s.id < 1 || s.id > 5 || s.id <= last_id) {
            throw ConfigError("sub-task ids must be increasing within 1..5");
        }
        if (!(s.end_s >= s.start_s) || s.start_s < last_end) {
            throw ConfigError("sub-task spans must be ordered and non-overlapping");
        }
        last_end = s.end_s;
        last_id = s.id;
    }
}

} // namespace vhmmt::metrics
