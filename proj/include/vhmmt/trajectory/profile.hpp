#pragma once

#include <array>
#include <cstddef>

namespace vhmmt::trajectory {

/// Kinematic state of one joint.
struct ScalarState {
    double p = 0.0;
    double v = 0.0;
    double a = 0.0;
};

struct ScalarLimits {
    double v_max = 2.0;
    double a_max = 10.0;
    double j_max = 1000.0;
};

/// Constant-jerk piece of a profile.
struct Segment {
    double duration = 0.0;
    double jerk = 0.0;
};

/// Piecewise constant-jerk motion from `start` that ends at rest on the target.
///
/// Shape: change velocity to a peak, cruise, brake to zero. At most seven
/// pieces; rest-to-rest moves give the classic seven-segment profile.
struct ScalarProfile {
    ScalarState start;
    std::array<Segment, 7> segments{};
    std::size_t count = 0;

    double duration() const;
    /// State after `t` seconds; clamps to the final state past the end.
    ScalarState at(double t) const;
    ScalarState end() const { return at(duration()); }
};

/// Integrates constant jerk for `t` seconds.
ScalarState integrate(const ScalarState& s, double jerk, double t);

/// Time-optimal jerk-limited velocity change from (v0, a0) to (v1, 0);
/// returns at most three segments.
std::size_t velocity_change(double v0, double a0, double v1, const ScalarLimits& lim, Segment* out);

/// Net displacement of "reach peak velocity `peak`, then brake to rest" from `s`.
double peak_displacement(const ScalarState& s, double peak, const ScalarLimits& lim);

/// Plans the fastest profile of the peak/cruise/brake family from `s` to rest at `target`.
ScalarProfile plan_to_rest(const ScalarState& s, double target, const ScalarLimits& lim);

} // namespace vhmmt::trajectory
