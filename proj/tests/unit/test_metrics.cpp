#include <doctest.h>

#include <cmath>
#include <random>

#include "vhmmt/core/errors.hpp"
#include "vhmmt/metrics/metrics.hpp"

using namespace vhmmt;
using namespace vhmmt::metrics;

namespace {

// Bright background with a dark filled ellipse (semi-axes sa along angle th, sb across it).
std::vector<double> painted(int cols, int rows, Vec2 c, double sa, double sb, double th) {
    std::vector<double> px(static_cast<std::size_t>(cols) * rows, 0.8);
    const double ct = std::cos(th), st = std::sin(th);
    for (int r = 0; r < rows; ++r) {
        for (int k = 0; k < cols; ++k) {
            const double dx = k - c.x(), dy = r - c.y();
            const double u = ct * dx + st * dy, v = -st * dx + ct * dy;
            if ((u * u) / (sa * sa) + (v * v) / (sb * sb) <= 1.0) {
                px[static_cast<std::size_t>(r) * cols + k] = 0.1;
            }
        }
    }
    return px;
}

double wrap_half_pi(double a) {
    while (a > M_PI / 2) a -= M_PI;
    while (a <= -M_PI / 2) a += M_PI;
    return a;
}

Pose transverse_tip(const usmodel::SyntheticPhantom& ph, double x, double y) {
    Mat3 r;
    r.col(0) = -Vec3::UnitY();
    r.col(1) = -Vec3::UnitX();
    r.col(2) = -Vec3::UnitZ();
    return ph.pose * Pose(Eigen::Quaterniond(r), Vec3(x, y, 0.0));
}

} // namespace

TEST_CASE("painted ellipses are recovered") {
    auto px = painted(256, 256, Vec2(120.3, 131.7), 50, 30, 0.0);
    auto fit = segment_vessel(px, 256, 256, 0.5);
    REQUIRE(fit.valid);
    CHECK(std::abs(fit.a - 30) < 2.0);
    CHECK(std::abs(fit.b - 50) < 2.0);
    CHECK((fit.centroid - Vec2(120.3, 131.7)).norm() < 1.0);
    CHECK(std::abs(wrap_half_pi(fit.orientation)) < 2.0 * M_PI / 180);

    auto circle = segment_vessel(painted(200, 200, Vec2(100, 90), 40, 40, 0.0), 200, 200, 0.5);
    REQUIRE(circle.valid);
    CHECK(std::abs(circle.a - circle.b) < 2.0);
    CHECK(std::abs(circle.a - 40) < 2.0);

    CHECK_FALSE(segment_vessel(std::vector<double>(64 * 64, 0.7), 64, 64, 0.5).valid);
    // Tiny blob: under 30 pixels.
    CHECK_FALSE(segment_vessel(painted(64, 64, Vec2(30, 30), 2.5, 2.5, 0), 64, 64, 0.5).valid);
    CHECK_THROWS_AS(segment_vessel(std::vector<double>(10, 0.0), 4, 4, 0.5), ConfigError);
}

TEST_CASE("largest interior component wins; border-touching regions are ignored") {
    auto px = painted(128, 128, Vec2(40, 40), 12, 12, 0);
    auto small = painted(128, 128, Vec2(95, 95), 6, 6, 0);
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = std::min(px[i], small[i]);
    }
    // A large dark band along the top edge.
    for (int k = 0; k < 128; ++k) {
        for (int r = 0; r < 20; ++r) {
            px[static_cast<std::size_t>(r) * 128 + k] = 0.0;
        }
    }
    auto fit = segment_vessel(px, 128, 128, 0.5);
    REQUIRE(fit.valid);
    CHECK((fit.centroid - Vec2(40, 40)).norm() < 0.5);
}

TEST_CASE("fit is rotation-equivariant") {
    for (double th : {0.0, 0.3, 0.7, 1.2, -0.5, -1.4}) {
        auto fit = segment_vessel(painted(256, 256, Vec2(128, 128), 50, 30, th), 256, 256, 0.5);
        REQUIRE(fit.valid);
        CHECK(std::abs(wrap_half_pi(fit.orientation - th)) < 2.0 * M_PI / 180);
        CHECK(std::abs(fit.a - 30) < 2.0);
        CHECK(std::abs(fit.b - 50) < 2.0);
    }
}

TEST_CASE("eccentricity") {
    CHECK(eccentricity(5, 5) == 0.0);
    CHECK(eccentricity(3, 5) == 0.8);
    CHECK(std::abs(eccentricity(4, 5) - 0.6) < 1e-15);
    for (double k : {0.5, 2.0, 4.0, 10.0}) {
        CHECK(eccentricity(3 * k, 5 * k) == eccentricity(3, 5));
    }
    CHECK_THROWS_AS(eccentricity(6, 5), InvalidFit);
    CHECK_THROWS_AS(eccentricity(0, 0), InvalidFit);
    CHECK_THROWS_AS(eccentricity(EllipseFit{}), InvalidFit);
}

TEST_CASE("lateral RMSE and eccentricity statistics") {
    const double on[] = {10, 10, 10};
    CHECK(lateral_rmse(on, 10) == 0.0);
    const double off[] = {13, 6};
    CHECK(std::abs(lateral_rmse(off, 10) - std::sqrt(12.5)) < 1e-12);
    const double one[] = {15};
    CHECK(lateral_rmse(one, 10) == 5.0);
    CHECK_THROWS_AS(lateral_rmse(std::span<const double>{}, 0), NoValidFrames);
    std::vector<EllipseFit> fits(3);
    fits[1].valid = true;
    fits[1].centroid = Vec2(7, 0);
    CHECK(lateral_rmse(fits, 10) == 3.0);
    fits[1].valid = false;
    CHECK_THROWS_AS(lateral_rmse(fits, 10), NoValidFrames);

    const double flat[] = {0.3, 0.3, 0.3};
    CHECK(eccentricity_stats(flat).stddev == 0.0);
    const double two[] = {0.2, 0.4};
    auto s = eccentricity_stats(two);
    CHECK(std::abs(s.mean - 0.3) < 1e-15);
    CHECK(std::abs(s.stddev - 0.1414213562) < 1e-9);
    CHECK_THROWS_AS(eccentricity_stats(one), InsufficientSamples);
}

TEST_CASE("task timeline validation") {
    TaskTimeline t{{{1, 0, 5}, {2, 5, 9}, {3, 10, 12}}};
    CHECK_NOTHROW(t.validate());
    t.subtasks[2].start_s = 8;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    const TaskTimeline backwards{{{2, 0, 1}, {1, 2, 3}}};
    CHECK_THROWS_AS(backwards.validate(), ConfigError);
    const TaskTimeline bad_id{{{6, 0, 1}}};
    CHECK_THROWS_AS(bad_id.validate(), ConfigError);
}

TEST_CASE("force to eccentricity chain on synthetic live images") {
    const auto ph = usmodel::SyntheticPhantom::standard();
    const auto plane = usmodel::plane_below_tip(transverse_tip(ph, -0.035, -0.012), 0.06, 0.06, 256, 256);
    const double thr = ph.intensity.vessel_threshold();
    double prev = -1.0;
    for (double f : {0.0, 5.0, 10.0, 15.0, 20.0}) {
        const auto img = usmodel::live_image(ph, plane, f, 11);
        const auto fit = segment_vessel(img, thr);
        REQUIRE(fit.valid);
        const double e = eccentricity(fit);
        MESSAGE("F = " << f << " N: e = " << e << " (a " << fit.a << ", b " << fit.b << ")");
        CHECK(e > prev);
        prev = e;
        if (f == 10.0) {
            CHECK(std::abs(e - std::sqrt(1 - 0.64 * 0.64)) < 0.03);
        }
    }
}

TEST_CASE("uncompressed vessel is circular at fine resolution") {
    // At 256 px the vessel spans ~50 px and speckle on its rim alone moves e by ~0.05.
    const auto ph = usmodel::SyntheticPhantom::standard();
    const double thr = ph.intensity.vessel_threshold();
    double worst = 0.0;
    for (unsigned seed = 1; seed <= 10; ++seed) {
        const auto plane = usmodel::plane_below_tip(transverse_tip(ph, -0.035, -0.012), 0.06, 0.06, 512, 512);
        const auto fit = segment_vessel(usmodel::live_image(ph, plane, 0.0, seed), thr);
        REQUIRE(fit.valid);
        worst = std::max(worst, eccentricity(fit));
    }
    MESSAGE("worst e at F = 0: " << worst);
    CHECK(worst < 0.05);
}
