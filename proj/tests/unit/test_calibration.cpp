#include <doctest.h>

#include <algorithm>
#include <random>

#include "support/random_pose.hpp"
#include "vhmmt/calib/calibration.hpp"
#include "vhmmt/core/errors.hpp"

using namespace vhmmt;
using namespace vhmmt::calib;
using vhmmt::testing::max_abs_diff;
using vhmmt::testing::oracle_inverse;
using vhmmt::testing::oracle_matrix;
using vhmmt::testing::random_pose;
using vhmmt::testing::random_rotation;

TEST_CASE("expert_to_follower: identity and single-term chains") {
    CalibrationSet c;
    CHECK(max_abs_diff(expert_to_follower(c, Pose::identity()).matrix(), Mat4::Identity()) == 0.0);
    c.hand_eye = Pose::from_translation(1, 0, 0);
    CHECK(max_abs_diff(expert_to_follower(c, Pose::identity()).matrix(),
                       Pose::from_translation(1, 0, 0).matrix()) == 0.0);
}

TEST_CASE("expert_to_follower matches the 4x4 chain oracle") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        CalibrationSet c{random_pose(rng), random_pose(rng), random_pose(rng)};
        Pose hand = random_pose(rng);
        Mat4 oracle = oracle_matrix(c.offset) * oracle_matrix(c.hand_eye) * oracle_matrix(hand) *
                      oracle_inverse(oracle_matrix(c.probe));
        CHECK(max_abs_diff(expert_to_follower(c, hand).matrix(), oracle) < 1e-12);
    }
}

TEST_CASE("reindex_offset") {
    SUBCASE("no motion during clutch keeps the offset") {
        std::mt19937_64 rng(12);
        Pose off = random_pose(rng), pre = random_pose(rng);
        Pose post = pre;
        CHECK(max_abs_diff(reindex_offset(off, pre, post).matrix(), off.matrix()) < 1e-12);
    }
    SUBCASE("hand-evaluated translation") {
        Pose off = reindex_offset(Pose::identity(), Pose::identity(), Pose::from_translation(0, 0, 0.1));
        CHECK(max_abs_diff(off.matrix(), Pose::from_translation(0, 0, -0.1).matrix()) < 1e-15);
    }
    SUBCASE("no-jump identity on random triples") {
        std::mt19937_64 rng(13);
        for (int i = 0; i < 1000; ++i) {
            CalibrationSet c{random_pose(rng), random_pose(rng), random_pose(rng)};
            Pose hand_before = random_pose(rng);
            Pose pre = expert_to_follower(c, hand_before);
            Pose hand_after = random_pose(rng);
            Pose post = expert_to_follower(c, hand_after);
            c.offset = reindex_offset(c.offset, pre, post);
            CHECK(max_abs_diff(expert_to_follower(c, hand_after).matrix(), pre.matrix()) < 1e-12);
        }
    }
}

namespace {

std::vector<MarkerObservation> synth_observations(std::mt19937_64& rng, const Pose& truth, int count,
                                                  double sigma_t = 0.0, double sigma_r = 0.0) {
    std::normal_distribution<double> nt(0.0, sigma_t > 0 ? sigma_t : 1.0);
    std::normal_distribution<double> nr(0.0, sigma_r > 0 ? sigma_r : 1.0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<MarkerObservation> obs;
    for (int i = 0; i < count; ++i) {
        MarkerObservation o;
        o.marker_in_flange = Pose(random_rotation(rng), Vec3(0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng)));
        o.flange_in_base = Pose(random_rotation(rng), Vec3(0.4 + 0.2 * u(rng), 0.3 * u(rng), 0.3 + 0.2 * u(rng)));
        Pose exact = truth.inverse() * o.flange_in_base * o.marker_in_flange;
        if (sigma_t > 0 || sigma_r > 0) {
            Vec3 rv(nr(rng), nr(rng), nr(rng));
            if (sigma_r == 0) rv.setZero();
            Vec3 dt(nt(rng), nt(rng), nt(rng));
            if (sigma_t == 0) dt.setZero();
            double angle = rv.norm();
            Pose noise = angle > 0 ? Pose::from_axis_angle(rv / angle, angle, dt) : Pose::from_translation(dt);
            exact = Pose(noise.rotation() * exact.rotation(), exact.translation() + dt);
        }
        o.marker_in_camera = exact;
        obs.push_back(o);
    }
    return obs;
}

Pose camera_truth(std::mt19937_64& rng) {
    // Camera about a meter from the robot, looking down at 45 degrees.
    return Pose(random_rotation(rng), Vec3(1.0, 0.2, 0.8));
}

} // namespace

TEST_CASE("solve_hand_eye: noise-free recovery is exact for any count >= 3") {
    std::mt19937_64 rng(21);
    for (int count : {3, 4, 8, 20, 50}) {
        for (int trial = 0; trial < 20; ++trial) {
            Pose truth = camera_truth(rng);
            auto obs = synth_observations(rng, truth, count);
            auto r = solve_hand_eye(obs);
            CHECK(angular_error(r.camera_to_base, truth) < 1e-9);
            CHECK((r.camera_to_base.translation() - truth.translation()).norm() < 1e-9);
            CHECK(r.residual_rms_m < 1e-9);
        }
    }
}

TEST_CASE("solve_hand_eye: noisy recovery within 5 mm / 1 deg at the 95th percentile") {
    std::mt19937_64 rng(22);
    std::vector<double> terr, rerr;
    for (int trial = 0; trial < 100; ++trial) {
        Pose truth = camera_truth(rng);
        auto obs = synth_observations(rng, truth, 20, 1e-3, 0.5 * M_PI / 180.0);
        auto r = solve_hand_eye(obs);
        terr.push_back((r.camera_to_base.translation() - truth.translation()).norm());
        rerr.push_back(angular_error(r.camera_to_base, truth));
    }
    std::sort(terr.begin(), terr.end());
    std::sort(rerr.begin(), rerr.end());
    MESSAGE("p95 translation " << terr[94] * 1e3 << " mm, rotation " << rerr[94] * 180 / M_PI << " deg");
    CHECK(terr[94] < 5e-3);
    CHECK(rerr[94] < M_PI / 180.0);
}

TEST_CASE("solve_hand_eye: degenerate inputs") {
    std::mt19937_64 rng(23);
    Pose truth = camera_truth(rng);
    std::vector<MarkerObservation> obs;
    for (int i = 0; i < 2; ++i) {
        MarkerObservation o;
        o.flange_in_base = Pose::from_axis_angle(Vec3::UnitZ(), 0.4 * (i + 1), Vec3(0.5, 0.0, 0.4));
        o.marker_in_camera = truth.inverse() * o.flange_in_base;
        obs.push_back(o);
    }
    CHECK_THROWS_AS(solve_hand_eye(obs), DegenerateObservations);

    // More observations that still all rotate about the same axis.
    for (int i = 2; i < 6; ++i) {
        MarkerObservation o;
        o.flange_in_base = Pose::from_axis_angle(Vec3::UnitZ(), 0.3 * i, Vec3(0.5, 0.1 * i, 0.4));
        o.marker_in_camera = truth.inverse() * o.flange_in_base;
        obs.push_back(o);
    }
    CHECK_THROWS_AS(solve_hand_eye(obs), DegenerateObservations);
}
