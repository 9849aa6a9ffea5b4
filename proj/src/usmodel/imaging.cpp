#include "vhmmt/usmodel/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::usmodel {

namespace {

// Image y runs along the tip z axis: a quarter turn about x.
const Pose& tip_to_image_rotation() {
    static const Pose r = Pose::from_axis_angle(Vec3::UnitX(), M_PI / 2);
    return r;
}

} // namespace

Vec3 ImagePlane::local_point(int col, int row) const {
    return {(col + 0.5 - 0.5 * cols) * pixel_width(), (row + 0.5 - 0.5 * rows) * pixel_height(), 0.0};
}

void ImagePlane::validate() const {
    if (cols < 16 || rows < 16 || !(width > 0) || !(height > 0) || !pose.is_valid()) {
        throw ConfigError("image plane needs at least 16x16 pixels and a positive size");
    }
}

ImagePlane plane_below_tip(const Pose& tip, double width, double height, int cols, int rows) {
    ImagePlane p;
    p.pose = tip * tip_to_image_rotation() * Pose::from_translation(0.0, 0.5 * height, 0.0);
    p.width = width;
    p.height = height;
    p.cols = cols;
    p.rows = rows;
    return p;
}

Pose tip_of_plane(const ImagePlane& plane) {
    return plane.pose * Pose::from_translation(0.0, -0.5 * plane.height, 0.0) * tip_to_image_rotation().inverse();
}

UsImage live_image(const SyntheticPhantom& phantom, const ImagePlane& plane, double normal_force, std::uint64_t seed,
                   int supersample) {
    plane.validate();
    if (supersample < 1) {
        throw ConfigError("supersample must be at least 1");
    }
    UsImage img;
    img.plane = plane;
    img.source = ImageSource::Live;
    const std::size_t n = static_cast<std::size_t>(plane.cols) * plane.rows;
    img.pixels.resize(n);

    const IntensityModel& im = phantom.intensity;
    const double squash = im.squash(normal_force);
    const Pose to_local = phantom.pose.inverse() * plane.pose;
    const Vec3 axis = to_local.rotate(Vec3::UnitY());

    // Center samples first; the value doubles as a region label.
    std::vector<double> center(n);
    std::vector<float> tissue(n);
    std::vector<std::uint8_t> region(n);  // 0 outside, 1 surface line, 2 vessel, 3 tissue
    for (int r = 0; r < plane.rows; ++r) {
        for (int c = 0; c < plane.cols; ++c) {
            bool speckled = false;
            const std::size_t i = static_cast<std::size_t>(r) * plane.cols + c;
            center[i] = phantom.mean_intensity(to_local * plane.local_point(c, r), axis, squash, &speckled);
            tissue[i] = speckled ? 1.0f : 0.0f;
            region[i] = speckled ? 3 : center[i] == 0.0 ? 0 : center[i] == im.surface ? 1 : 2;
        }
    }
    std::vector<double> mean = center;
    if (supersample > 1) {
        const double pw = plane.pixel_width(), ph = plane.pixel_height();
        const double k = supersample;
        for (int r = 0; r < plane.rows; ++r) {
            for (int c = 0; c < plane.cols; ++c) {
                const std::uint8_t here = region[static_cast<std::size_t>(r) * plane.cols + c];
                bool edge = false;
                for (int dr = -1; dr <= 1 && !edge; ++dr) {
                    for (int dc = -1; dc <= 1 && !edge; ++dc) {
                        const int cc = c + dc, rr = r + dr;
                        if (cc >= 0 && rr >= 0 && cc < plane.cols && rr < plane.rows) {
                            edge = region[static_cast<std::size_t>(rr) * plane.cols + cc] != here;
                        }
                    }
                }
                if (!edge) {
                    continue;
                }
                const Vec3 mid = plane.local_point(c, r);
                double sum = 0.0, share = 0.0;
                for (int a = 0; a < supersample; ++a) {
                    for (int b = 0; b < supersample; ++b) {
                        const Vec3 q = mid + Vec3(((a + 0.5) / k - 0.5) * pw, ((b + 0.5) / k - 0.5) * ph, 0.0);
                        bool speckled = false;
                        sum += phantom.mean_intensity(to_local * q, axis, squash, &speckled);
                        share += speckled ? 1.0 : 0.0;
                    }
                }
                const std::size_t i = static_cast<std::size_t>(r) * plane.cols + c;
                mean[i] = sum / (k * k);
                tissue[i] = static_cast<float>(share / (k * k));
            }
        }
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> speckle(0.0, im.speckle_sigma);
    for (int r = 0; r < plane.rows; ++r) {
        for (int c = 0; c < plane.cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * plane.cols + c;
            const Vec3 p = to_local * plane.local_point(c, r);
            // One draw per pixel keeps the noise field independent of geometry.
            const double noise = speckle(rng);
            const double v = mean[i] + tissue[i] * noise * std::exp(-im.attenuation * std::max(-p.z(), 0.0));
            img.pixels[i] = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

std::vector<std::uint8_t> to_gray8(const UsImage& image, int out_cols, int out_rows) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(out_cols) * out_rows);
    for (int r = 0; r < out_rows; ++r) {
        int sr = std::min(image.plane.rows - 1, r * image.plane.rows / out_rows);
        for (int c = 0; c < out_cols; ++c) {
            int sc = std::min(image.plane.cols - 1, c * image.plane.cols / out_cols);
            out[static_cast<std::size_t>(r) * out_cols + c] =
                static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(image.at(sc, sr), 0.0, 1.0)));
        }
    }
    return out;
}

} // namespace vhmmt::usmodel
