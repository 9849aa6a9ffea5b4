#pragma once

#include <algorithm>
#include <cmath>

namespace vhmmt::testing {

/// Time spent ramping 0 -> v (or v -> 0) under acceleration and jerk bounds.
inline double ramp_time(double v, double a, double j) {
    return v * j >= a * a ? v / a + a / j : 2.0 * std::sqrt(v / j);
}

/// Closed-form minimum time of a rest-to-rest move of length d.
inline double seven_segment_time(double d, double v, double a, double j) {
    d = std::abs(d);
    if (d == 0.0) {
        return 0.0;
    }
    double t_acc = ramp_time(v, a, j);
    if (d >= v * t_acc) {
        return 2.0 * t_acc + (d - v * t_acc) / v;
    }
    // Peak velocity below v_max: d = vp * ramp_time(vp).
    double vp = 0.5 * a * (-a / j + std::sqrt(a * a / (j * j) + 4.0 * d / a));
    if (vp * j < a * a) {
        vp = std::cbrt(d * d * j / 4.0);
    }
    return 2.0 * ramp_time(vp, a, j);
}

} // namespace vhmmt::testing
