#include <doctest.h>

#include <cmath>
#include <random>

#include "support/random_pose.hpp"
#include "support/trilinear.hpp"
#include "vhmmt/core/errors.hpp"
#include "vhmmt/usmodel/volume.hpp"

using namespace vhmmt;
using namespace vhmmt::usmodel;
using vhmmt::testing::pixel_world_oracle;
using vhmmt::testing::random_pose;
using vhmmt::testing::trilinear_oracle;

namespace {

UsVolume random_volume(std::mt19937_64& rng, std::array<int, 3> dims, double spacing, const Pose& pose) {
    UsVolume v = UsVolume::zeros(dims, spacing, pose);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& x : v.voxels) {
        x = u(rng);
    }
    return v;
}

// Tip straight down onto the phantom top at local (x, y), image x along local -y.
Pose transverse_tip(const SyntheticPhantom& ph, double x, double y) {
    Mat3 r;
    r.col(0) = -Vec3::UnitY();
    r.col(1) = -Vec3::UnitX();
    r.col(2) = -Vec3::UnitZ();
    return ph.pose * Pose(Eigen::Quaterniond(r), Vec3(x, y, 0.0));
}

// Capsule membership written independently of the phantom code.
bool in_tube(const Vessel& v, const Vec3& p) {
    for (std::size_t i = 0; i + 1 < v.centerline.size(); ++i) {
        Vec3 a = v.centerline[i], b = v.centerline[i + 1];
        double t = std::clamp((p - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
        if ((p - (a + t * (b - a))).norm() <= v.radius) {
            return true;
        }
    }
    return false;
}

} // namespace

TEST_CASE("phantom geometry") {
    SyntheticPhantom ph = SyntheticPhantom::standard();
    CHECK_NOTHROW(ph.validate());
    CHECK(ph.signed_distance(ph.pose * Vec3(0, 0, 0.05)) == doctest::Approx(0.05));
    CHECK(ph.signed_distance(ph.pose * Vec3(0.01, 0.02, -0.001)) == doctest::Approx(-0.001));
    Vec3 n = ph.surface_normal(ph.pose * Vec3(0.01, 0.02, -0.001));
    CHECK((n - ph.pose.rotate(Vec3::UnitZ())).norm() < 1e-12);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (int i = 0; i < 2000; ++i) {
        Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
        CHECK(std::abs(ph.signed_distance_local(a) - ph.signed_distance_local(b)) <= (a - b).norm() + 1e-15);
    }

    SyntheticPhantom bad = ph;
    bad.vessels[0].centerline[0] = Vec3(-0.069, 0, -0.02);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("image plane hangs below the tip") {
    Pose tip = Pose::from_axis_angle(Vec3(1, 2, 3).normalized(), 0.7, Vec3(0.1, 0.2, 0.3));
    ImagePlane p = plane_below_tip(tip, 0.04, 0.06, 64, 96);
    CHECK((p.probe_axis() - tip.rotate(Vec3::UnitZ())).norm() < 1e-12);
    CHECK((p.pose.translation() - (tip * Vec3(0, 0, 0.03))).norm() < 1e-12);
    CHECK(pose_distance(tip_of_plane(p), tip) < 1e-12);
    // Top row sits half a pixel below the tip.
    Vec3 top = p.world_point(32, 0);
    CHECK((tip.inverse() * top - Vec3(0.5 * 0.04 / 64, 0, 0.5 * 0.06 / 96)).norm() < 1e-12);
}

TEST_CASE("live image intensities follow the model") {
    SyntheticPhantom ph = SyntheticPhantom::standard();
    ImagePlane plane = plane_below_tip(transverse_tip(ph, -0.03, -0.012), 0.06, 0.06, 128, 128);
    UsImage img = live_image(ph, plane, 0.0, 7);
    const Vessel& large = ph.vessel("large");
    int vessel_px = 0;
    for (int r = 0; r < 128; ++r) {
        for (int c = 0; c < 128; ++c) {
            Vec3 p = ph.to_local(plane.world_point(c, r));
            double v = img.at(c, r);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            if (in_tube(large, p)) {
                ++vessel_px;
                CHECK(v < ph.intensity.vessel_threshold());
            }
        }
    }
    // r = 6 mm at 0.47 mm pixels: about 514 pixels.
    CHECK(vessel_px > 450);
    CHECK(vessel_px < 580);

    UsImage again = live_image(ph, plane, 0.0, 7);
    CHECK(again.pixels == img.pixels);
    UsImage other = live_image(ph, plane, 0.0, 8);
    CHECK(other.pixels != img.pixels);
}

TEST_CASE("compression squashes the vessel along the probe axis") {
    SyntheticPhantom ph = SyntheticPhantom::standard();
    const Vec3 axis = -Vec3::UnitZ();
    const Vec3 c = ph.vessel("large").centerline[0] + Vec3(0.01, 0, 0);
    double s = ph.intensity.squash(10.0);
    CHECK(s == doctest::Approx(0.8));
    double r = 0.006;
    CHECK(ph.in_vessel(c + 0.999 * r * s * axis, axis, s));
    CHECK_FALSE(ph.in_vessel(c + 1.001 * r * s * axis, axis, s));
    CHECK(ph.in_vessel(c + Vec3(0, 0.999 * r / s, 0), axis, s));
    CHECK_FALSE(ph.in_vessel(c + Vec3(0, 1.001 * r / s, 0), axis, s));
    CHECK(ph.intensity.squash(100.0) == 0.2);
}

TEST_CASE("axis-aligned sweep stores every pixel verbatim") {
    SyntheticPhantom ph = SyntheticPhantom::standard();
    Pose start = transverse_tip(ph, -0.01, -0.012);
    auto planes = linear_sweep(start, (start * Vec3(0, 0, 0)) + ph.pose.rotate(Vec3(0.01, 0, 0)), 0.032, 0.016, 64,
                               32, 0.0005);
    REQUIRE(planes.size() == 21);
    UsVolume vol = generate_sweep(ph, planes, 100);
    CHECK(vol.dims == std::array<int, 3>{64, 32, 21});
    for (std::size_t k = 0; k < planes.size(); ++k) {
        UsImage img = live_image(ph, planes[k], 0.0, 100 + k, 1);
        for (int r = 0; r < 32; ++r) {
            for (int c = 0; c < 64; ++c) {
                REQUIRE(vol.at(c, r, static_cast<int>(k)) == img.at(c, r));
            }
        }
    }
    std::vector<ImagePlane> none;
    CHECK_THROWS_AS(generate_sweep(ph, none, 0), ConfigError);
}

TEST_CASE("reslice") {
    std::mt19937_64 rng(21);
    UsVolume vol = random_volume(rng, {20, 16, 12}, 0.001, random_pose(rng, 0.2));

    SUBCASE("lattice-aligned plane reproduces a voxel slice") {
        for (int k : {0, 5, 11}) {
            ImagePlane p;
            p.cols = 20;
            p.rows = 16;
            p.width = 0.020;
            p.height = 0.016;
            p.pose = vol.pose * Pose::from_translation(0.0095, 0.0075, k * 0.001);
            UsImage img = reslice(vol, p);
            CHECK(img.source == ImageSource::Preview);
            for (int r = 0; r < 16; ++r) {
                for (int c = 0; c < 20; ++c) {
                    REQUIRE(std::abs(img.at(c, r) - vol.at(c, r, k)) < 1e-6);
                }
            }
        }
    }
    SUBCASE("plane outside the volume is black") {
        ImagePlane p;
        p.pose = vol.pose * Pose::from_translation(1.0, 1.0, 1.0);
        UsImage img = reslice(vol, p);
        CHECK(std::all_of(img.pixels.begin(), img.pixels.end(), [](double v) { return v == 0.0; }));
    }
    SUBCASE("oblique planes match the scalar oracle") {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            ImagePlane p;
            p.cols = 32;
            p.rows = 24;
            p.width = 0.025;
            p.height = 0.02;
            Vec3 center(0.02 * u(rng), 0.016 * u(rng), 0.012 * u(rng));
            p.pose = vol.pose * Pose(testing::random_rotation(rng), center);
            UsImage img = reslice(vol, p);
            for (int r = 0; r < p.rows; ++r) {
                for (int c = 0; c < p.cols; ++c) {
                    REQUIRE(std::abs(img.at(c, r) - trilinear_oracle(vol, pixel_world_oracle(p, c, r))) < 1e-9);
                }
            }
        }
    }
    SUBCASE("linear in the voxel values") {
        UsVolume v2 = random_volume(rng, vol.dims, vol.spacing, vol.pose);
        UsVolume mix = vol;
        for (std::size_t i = 0; i < mix.voxels.size(); ++i) {
            mix.voxels[i] = 0.3 * vol.voxels[i] - 1.7 * v2.voxels[i];
        }
        ImagePlane p;
        p.cols = p.rows = 32;
        p.width = p.height = 0.02;
        p.pose = vol.pose * Pose(testing::random_rotation(rng), Vec3(0.01, 0.008, 0.006));
        UsImage a = reslice(vol, p), b = reslice(v2, p), m = reslice(mix, p);
        for (std::size_t i = 0; i < m.pixels.size(); ++i) {
            CHECK(std::abs(m.pixels[i] - (0.3 * a.pixels[i] - 1.7 * b.pixels[i])) < 1e-9);
        }
    }
}

TEST_CASE("integrate_frame") {
    std::mt19937_64 rng(4);
    UsVolume vol = random_volume(rng, {16, 16, 8}, 0.001, random_pose(rng, 0.1));
    ImagePlane p;
    p.cols = p.rows = 16;
    p.width = p.height = 0.016;
    p.pose = vol.pose * Pose::from_translation(0.0075, 0.0075, 3 * 0.001);

    SUBCASE("re-integrating the current slice changes nothing") {
        UsVolume before = vol;
        integrate_frame(vol, reslice(vol, p));
        for (std::size_t i = 0; i < vol.voxels.size(); ++i) {
            CHECK(std::abs(vol.voxels[i] - before.voxels[i]) < 1e-9);
        }
    }
    SUBCASE("two all-ones frames into zeros give 0.75") {
        std::fill(vol.voxels.begin(), vol.voxels.end(), 0.0);
        UsImage ones;
        ones.plane = p;
        ones.pixels.assign(256, 1.0);
        integrate_frame(vol, ones);
        integrate_frame(vol, ones);
        for (int j = 0; j < 16; ++j) {
            for (int i = 0; i < 16; ++i) {
                CHECK(vol.at(i, j, 3) == 0.75);
                CHECK(vol.at(i, j, 2) == 0.0);
            }
        }
    }
    SUBCASE("frame outside leaves the volume alone") {
        UsVolume before = vol;
        UsImage far;
        far.plane = p;
        far.plane.pose = vol.pose * Pose::from_translation(1, 1, 1);
        far.pixels.assign(256, 1.0);
        integrate_frame(vol, far);
        CHECK(vol.voxels == before.voxels);
    }
}

TEST_CASE("reslicing the sweep reproduces zero-force live frames") {
    SyntheticPhantom ph = SyntheticPhantom::standard();
    Pose start = transverse_tip(ph, -0.03, 0.0);
    auto planes = linear_sweep(start, start.translation() + ph.pose.rotate(Vec3(0.04, 0, 0)), 0.064, 0.032, 128,
                               64, 0.0005);
    UsVolume vol = generate_sweep(ph, planes, 1);
    for (std::size_t k : {std::size_t{0}, std::size_t{17}, planes.size() - 1}) {
        UsImage live = live_image(ph, planes[k], 0.0, 999);
        UsImage prev = reslice(vol, planes[k]);
        double mae = 0.0;
        for (std::size_t i = 0; i < live.pixels.size(); ++i) {
            mae += std::abs(live.pixels[i] - prev.pixels[i]);
        }
        mae /= static_cast<double>(live.pixels.size());
        CHECK(mae < 2.0 * ph.intensity.speckle_sigma);
    }
}

TEST_CASE("gray8 conversion") {
    UsImage img;
    img.plane.cols = img.plane.rows = 16;
    img.pixels.assign(256, 0.5);
    img.at(0, 0) = 1.0;
    auto g = to_gray8(img, 32, 32);
    REQUIRE(g.size() == 1024);
    CHECK(g[0] == 255);
    CHECK(g[1] == 255);
    CHECK(g[2] == 128);
}
