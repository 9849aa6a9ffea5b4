#include "vhmmt/trajectory/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vhmmt::trajectory {

ScalarState integrate(const ScalarState& s, double jerk, double t) {
    ScalarState out;
    out.p = s.p + t * (s.v + t * (s.a / 2.0 + t * jerk / 6.0));
    out.v = s.v + t * (s.a + t * jerk / 2.0);
    out.a = s.a + t * jerk;
    return out;
}

double ScalarProfile::duration() const {
    double t = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        t += segments[i].duration;
    }
    return t;
}

ScalarState ScalarProfile::at(double t) const {
    ScalarState s = start;
    for (std::size_t i = 0; i < count && t > 0.0; ++i) {
        double d = std::min(t, segments[i].duration);
        s = integrate(s, segments[i].jerk, d);
        t -= d;
    }
    return s;
}

std::size_t velocity_change(double v0, double a0, double v1, const ScalarLimits& lim, Segment* out) {
    const double j = lim.j_max;
    // Velocity reached by ramping the current acceleration straight to zero.
    const double v_stop = v0 + a0 * std::abs(a0) / (2.0 * j);
    const double gap = v1 - v_stop;
    if (gap == 0.0) {
        if (a0 == 0.0) {
            return 0;
        }
        out[0] = {std::abs(a0) / j, a0 > 0 ? -j : j};
        return 1;
    }
    const double s = gap > 0 ? 1.0 : -1.0;
    const double a_start = s * a0;
    const double dv = s * (v1 - v0);
    double peak = std::sqrt(std::max(0.0, j * dv + 0.5 * a_start * a_start));
    double hold = 0.0;
    if (peak > lim.a_max) {
        peak = lim.a_max;
        hold = std::max(0.0, (dv - (2.0 * peak * peak - a_start * a_start) / (2.0 * j)) / peak);
    }
    out[0] = {std::max(0.0, (peak - a_start) / j), s * j};
    out[1] = {hold, 0.0};
    out[2] = {peak / j, -s * j};
    return 3;
}

namespace {

constexpr int kScanPoints = 32;

struct Candidate {
    ScalarProfile profile;
    double displacement = 0.0;
};

Candidate build(const ScalarState& s, double peak, double cruise, const ScalarLimits& lim) {
    Candidate c;
    c.profile.start = s;
    Segment buf[3];
    std::size_t n = velocity_change(s.v, s.a, peak, lim, buf);
    for (std::size_t i = 0; i < n; ++i) {
        c.profile.segments[c.profile.count++] = buf[i];
    }
    c.profile.segments[c.profile.count++] = {cruise, 0.0};
    n = velocity_change(peak, 0.0, 0.0, lim, buf);
    for (std::size_t i = 0; i < n; ++i) {
        c.profile.segments[c.profile.count++] = buf[i];
    }
    c.displacement = c.profile.end().p - s.p;
    return c;
}

} // namespace

double peak_displacement(const ScalarState& s, double peak, const ScalarLimits& lim) {
    return build(s, peak, 0.0, lim).displacement;
}

ScalarProfile plan_to_rest(const ScalarState& s, double target, const ScalarLimits& lim) {
    const double d = target - s.p;
    const double vm = lim.v_max;

    Candidate up = build(s, vm, 0.0, lim);
    if (up.displacement <= d) {
        return build(s, vm, (d - up.displacement) / vm, lim).profile;
    }
    Candidate down = build(s, -vm, 0.0, lim);
    if (down.displacement >= d) {
        return build(s, -vm, (down.displacement - d) / vm, lim).profile;
    }
    // Displacement is not monotone in the peak when the joint is still
    // accelerating, so bracket every root on a grid and keep the fastest one.
    std::array<double, kScanPoints + 3> grid;
    std::size_t n = 0;
    for (int k = 0; k <= kScanPoints; ++k) {
        grid[n++] = -vm + 2.0 * vm * k / kScanPoints;
    }
    grid[n++] = std::clamp(s.v + s.a * std::abs(s.a) / (2.0 * lim.j_max), -vm, vm);
    grid[n++] = 0.0;
    std::sort(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(n));

    ScalarProfile best;
    double best_time = std::numeric_limits<double>::infinity();
    auto consider = [&](double peak) {
        Candidate c = build(s, peak, 0.0, lim);
        double t = c.profile.duration();
        if (t < best_time) {
            best_time = t;
            best = c.profile;
        }
    };
    double f_prev = peak_displacement(s, grid[0], lim) - d;
    for (std::size_t k = 1; k < n; ++k) {
        double lo = grid[k - 1];
        double hi = grid[k];
        double f_hi = peak_displacement(s, hi, lim) - d;
        if (f_prev == 0.0) {
            consider(lo);
        } else if ((f_prev < 0.0) != (f_hi < 0.0) && hi > lo) {
            const bool rising = f_prev < 0.0;
            double f_lo = f_prev;
            double f_top = f_hi;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) {
                    break;
                }
                double f_mid = peak_displacement(s, mid, lim) - d;
                if ((f_mid < 0.0) == rising) {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                    f_top = f_mid;
                }
            }
            consider(std::abs(f_lo) <= std::abs(f_top) ? lo : hi);
        }
        f_prev = f_hi;
    }
    if (f_prev == 0.0) {
        consider(grid[n - 1]);
    }
    return best;
}

} // namespace vhmmt::trajectory
