#include "vhmmt/harness/script.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::harness {

using nlohmann::json;

std::string_view to_string(ScriptEvent::Type t) {
    switch (t) {
        case ScriptEvent::Type::Hand: return "hand";
        case ScriptEvent::Type::ButtonDown: return "button_down";
        case ScriptEvent::Type::ButtonUp: return "button_up";
        case ScriptEvent::Type::StepBegin: return "step_begin";
        case ScriptEvent::Type::StepEnd: return "step_end";
        case ScriptEvent::Type::Confirm: return "confirm";
        case ScriptEvent::Type::TrackBegin: return "track_begin";
        case ScriptEvent::Type::TrackEnd: return "track_end";
    }
    return "?";
}

namespace {

ScriptEvent::Type parse_type(const std::string& s) {
    for (auto t : {ScriptEvent::Type::Hand, ScriptEvent::Type::ButtonDown, ScriptEvent::Type::ButtonUp,
                   ScriptEvent::Type::StepBegin, ScriptEvent::Type::StepEnd, ScriptEvent::Type::Confirm,
                   ScriptEvent::Type::TrackBegin, ScriptEvent::Type::TrackEnd}) {
        if (to_string(t) == s) {
            return t;
        }
    }
    throw ConfigError("unknown script event type '" + s + "'");
}

} // namespace

std::vector<metrics::Subtask> OperatorScript::planned_subtasks() const {
    std::vector<metrics::Subtask> out;
    for (const ScriptEvent& e : events) {
        if (e.type == ScriptEvent::Type::StepBegin) {
            out.push_back({e.step, us_to_s(e.t), us_to_s(e.t)});
        } else if (e.type == ScriptEvent::Type::StepEnd && !out.empty()) {
            out.back().end_s = us_to_s(e.t);
        }
    }
    return out;
}

void OperatorScript::validate() const {
    if (!initial_hand.is_valid(1e-6)) {
        throw ConfigError("script initial_hand is not a valid pose");
    }
    TimeUs prev = 0;
    bool clutched = false;
    bool tracking = false;
    int open_step = 0;
    for (const ScriptEvent& e : events) {
        if (e.t < prev) {
            throw ConfigError("script events must be time-ordered");
        }
        prev = e.t;
        switch (e.type) {
            case ScriptEvent::Type::Hand:
            case ScriptEvent::Type::Confirm:
                if (!e.pose.is_valid(1e-6)) {
                    throw ConfigError("script pose is not valid");
                }
                break;
            case ScriptEvent::Type::ButtonDown:
            case ScriptEvent::Type::ButtonUp:
                if (clutched == (e.type == ScriptEvent::Type::ButtonUp)) {
                    clutched = !clutched;
                } else {
                    throw ConfigError("script button presses must alternate down/up");
                }
                break;
            case ScriptEvent::Type::StepBegin:
                if (open_step != 0 || e.step < 1 || e.step > 5) {
                    throw ConfigError("script step_begin out of place");
                }
                open_step = e.step;
                break;
            case ScriptEvent::Type::StepEnd:
                if (open_step != e.step) {
                    throw ConfigError("script step_end does not close the open step");
                }
                open_step = 0;
                break;
            case ScriptEvent::Type::TrackBegin:
            case ScriptEvent::Type::TrackEnd:
                if (tracking == (e.type == ScriptEvent::Type::TrackBegin)) {
                    throw ConfigError("script track_begin/track_end must alternate");
                }
                tracking = !tracking;
                break;
        }
    }
    if (open_step != 0 || tracking) {
        throw ConfigError("script ends inside a step or tracking span");
    }
}

json OperatorScript::to_json() const {
    json ev = json::array();
    for (const ScriptEvent& e : events) {
        json j{{"t", us_to_s(e.t)}, {"type", to_string(e.type)}};
        if (e.type == ScriptEvent::Type::Hand || e.type == ScriptEvent::Type::Confirm) {
            j["pose"] = e.pose;
        }
        if (e.type != ScriptEvent::Type::Hand && e.type != ScriptEvent::Type::ButtonDown &&
            e.type != ScriptEvent::Type::ButtonUp) {
            j["step"] = e.step;
        }
        ev.push_back(std::move(j));
    }
    return {{"initial_hand", initial_hand}, {"events", ev}};
}

OperatorScript OperatorScript::from_json(const json& j) {
    OperatorScript s;
    try {
        s.initial_hand = j.at("initial_hand").get<Pose>();
        for (const json& e : j.at("events")) {
            ScriptEvent ev;
            ev.t = s_to_us(e.at("t").get<double>());
            ev.type = parse_type(e.at("type").get<std::string>());
            if (e.contains("pose")) {
                ev.pose = e.at("pose").get<Pose>();
            } else if (ev.type == ScriptEvent::Type::Hand || ev.type == ScriptEvent::Type::Confirm) {
                throw ConfigError("script event '" + std::string(to_string(ev.type)) + "' needs a pose");
            }
            ev.step = e.value("step", 0);
            s.events.push_back(ev);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("script: ") + e.what());
    }
    s.validate();
    return s;
}

OperatorScript OperatorScript::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open script " + path.string());
    }
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError("script " + path.string() + ": " + e.what());
    }
}

Pose view_tip(const usmodel::SyntheticPhantom& phantom, double x, double y, double heading, double depth) {
    const double c = std::cos(heading), s = std::sin(heading);
    Mat3 r;
    r.col(0) = Vec3(c, s, 0.0);
    r.col(1) = Vec3(s, -c, 0.0);
    r.col(2) = Vec3(0.0, 0.0, -1.0);
    return phantom.pose * Pose(Eigen::Quaterniond(r), Vec3(x, y, -depth));
}

bool is_transverse_step(int step) {
    return step == 2 || step == 4;
}

namespace {

/// Accumulates hand samples at a fixed period while tracking the offset the
/// session will hold, so tip targets map to the right hand poses.
class Builder {
public:
    Builder(const TaskGeometry& g, const TaskParams& p, double pose_hz, std::uint64_t seed)
        : g_(g), dt_(s_to_us(1.0 / pose_hz)), rng_(seed), tip_(g.start_tip) {
        sigma_ = p.lateral_noise_px * g.pixel_m;
        decay_ = std::exp(-us_to_s(dt_) / p.noise_correlation_s);
        noise_ = sigma_ * gauss_(rng_);
        script_.initial_hand = hand_for(tip_, 0.0);
    }

    const Pose& tip() const { return tip_; }
    /// Tip actually commanded by the last sample, lateral wobble included.
    Pose commanded_tip() const { return tip_ * Pose::from_translation(noise_, 0.0, 0.0); }

    /// Smooth (minimum-jerk) or constant-speed move of the tip.
    void move_to(const Pose& target, double duration, bool linear = false) {
        const Pose from = tip_;
        const auto n = std::max<TimeUs>(1, s_to_us(duration) / dt_);
        for (TimeUs k = 1; k <= n; ++k) {
            const double u = static_cast<double>(k) / static_cast<double>(n);
            const double s = linear ? u : u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
            tip_ = Pose(from.rotation().slerp(s, target.rotation()),
                        (1.0 - s) * from.translation() + s * target.translation());
            sample();
        }
    }

    void hold(double duration) { move_to(tip_, duration, true); }

    void mark(ScriptEvent::Type type, int step, const Pose& pose = Pose()) {
        ScriptEvent e;
        e.t = t_;
        e.type = type;
        e.step = step;
        e.pose = pose;
        script_.events.push_back(e);
    }

    /// Button down, reposition the hand by `shift` (camera frame) while the
    /// follower holds still, button up. Updates the expected offset exactly as
    /// the session re-indexes.
    void clutch(const Pose& shift, double duration) {
        const Pose hand_pre = last_hand_;
        const Pose commanded = calib::expert_to_follower(calib(), hand_pre);
        mark(ScriptEvent::Type::ButtonDown, 0);
        const auto n = std::max<TimeUs>(1, s_to_us(duration) / dt_);
        Pose hand = hand_pre;
        for (TimeUs k = 1; k <= n; ++k) {
            const double u = static_cast<double>(k) / static_cast<double>(n);
            const double s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
            const Pose step(Eigen::Quaterniond::Identity().slerp(s, shift.rotation()), s * shift.translation());
            hand = step * hand_pre;
            t_ += dt_;
            push_hand(hand);
        }
        mark(ScriptEvent::Type::ButtonUp, 0);
        offset_ = calib::reindex_offset(offset_, commanded, calib::expert_to_follower(calib(), hand));
    }

    double auto_duration(const Pose& target, double speed) const {
        const double dist = (target.translation() - tip_.translation()).norm();
        const double turn = angular_error(tip_, target);
        return std::max({1.0, dist / speed, turn / 0.8});
    }

    OperatorScript finish() { return std::move(script_); }

private:
    calib::CalibrationSet calib() const {
        calib::CalibrationSet c = g_.calib;
        c.offset = offset_;
        return c;
    }

    // tip = offset * hand_eye * hand.
    Pose hand_for(const Pose& tip, double lateral) const {
        return (offset_ * g_.calib.hand_eye).inverse() * tip * Pose::from_translation(lateral, 0.0, 0.0);
    }

    void sample() {
        t_ += dt_;
        noise_ = decay_ * noise_ + sigma_ * std::sqrt(1.0 - decay_ * decay_) * gauss_(rng_);
        push_hand(hand_for(tip_, noise_));
    }

    void push_hand(const Pose& hand) {
        ScriptEvent e;
        e.t = t_;
        e.pose = hand;
        script_.events.push_back(e);
        last_hand_ = hand;
    }

    const TaskGeometry& g_;
    TimeUs dt_;
    TimeUs t_ = 0;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_;
    double sigma_ = 0.0;
    double decay_ = 0.0;
    double noise_ = 0.0;
    Pose tip_;
    Pose offset_;
    Pose last_hand_;
    OperatorScript script_;
};

} // namespace

OperatorScript five_step_task(const TaskGeometry& g, const TaskParams& p, double pose_hz, std::uint64_t seed) {
    p.validate();
    const auto& ph = g.phantom;
    const auto& large = ph.vessel("large");
    const auto& branch = ph.vessel("branch");
    const Vec3 bif = large.centerline[1];
    const double y_large = large.centerline[0].y();
    // The thin vessel's outer segment: far enough from the large vessel that
    // transverse images show only the branch.
    const Vec3 b0 = branch.centerline[1], b1 = branch.centerline[2];
    const double along = std::atan2(b1.y() - b0.y(), b1.x() - b0.x());
    auto on_branch = [&](double s) { return b0 + s * (b1 - b0); };
    auto depth = [&](int step) { return p.force_for_step(step) / p.contact_stiffness; };
    auto has = [&](int step) { return std::find(p.steps.begin(), p.steps.end(), step) != p.steps.end(); };

    Builder b(g, p, pose_hz, seed);
    auto confirm_and_end = [&](int step) {
        b.mark(ScriptEvent::Type::Confirm, step, b.commanded_tip());
        b.mark(ScriptEvent::Type::StepEnd, step);
    };
    auto travel = [&](const Pose& target) { b.move_to(target, b.auto_duration(target, p.travel_speed)); };
    auto sweep = [&](int step, const Pose& end) {
        // Let the follower settle on the start of the sweep before tracking counts.
        b.hold(0.5);
        b.mark(ScriptEvent::Type::TrackBegin, step);
        b.move_to(end, (end.translation() - b.tip().translation()).norm() / p.sweep_speed, true);
        b.mark(ScriptEvent::Type::TrackEnd, step);
    };

    // Approach: hover over the first view.
    const double x1 = -0.035;
    b.hold(0.2);
    travel(view_tip(ph, x1, y_large, 0.0, -0.02));

    int done = 0;
    for (int step : p.steps) {
        if (p.clutch && step >= 4 && done > 0 && done < 4) {
            // Out of workspace: re-index the hand 6 cm sideways and a little turned.
            b.clutch(Pose::from_axis_angle(Vec3::UnitZ(), 0.3, Vec3(0.0, 0.06, 0.0)), 1.0);
        }
        b.mark(ScriptEvent::Type::StepBegin, step);
        const double d = depth(step);
        switch (step) {
            case 1: {
                travel(view_tip(ph, x1, y_large, 0.0, d));
                b.hold(p.hold_s);
                break;
            }
            case 2: {
                travel(view_tip(ph, x1, y_large, -M_PI / 2, d));
                const Pose end = view_tip(ph, bif.x() - 0.008, y_large, -M_PI / 2, d);
                sweep(step, end);
                break;
            }
            case 3: {
                const Pose target = view_tip(ph, bif.x(), bif.y(), -M_PI / 2, d);
                b.move_to(target, b.auto_duration(target, p.sweep_speed));
                b.hold(p.hold_s);
                break;
            }
            case 4: {
                const Vec3 s0 = on_branch(0.2), s1 = on_branch(0.8);
                travel(view_tip(ph, s0.x(), s0.y(), along - M_PI / 2, d));
                sweep(step, view_tip(ph, s1.x(), s1.y(), along - M_PI / 2, d));
                break;
            }
            case 5: {
                const Vec3 m = on_branch(0.5);
                travel(view_tip(ph, m.x(), m.y(), along, d));
                b.hold(p.hold_s);
                break;
            }
            default: break;
        }
        if (p.confirm_views) {
            confirm_and_end(step);
        } else {
            b.mark(ScriptEvent::Type::StepEnd, step);
        }
        done = step;
    }
    // Lift off.
    Pose up = b.tip();
    up = Pose(up.rotation(), up.translation() + Vec3(0.0, 0.0, 0.03));
    b.move_to(up, 1.0);
    OperatorScript s = b.finish();
    s.validate();
    return s;
}

ScriptPlayer::ScriptPlayer(OperatorScript script) : script_(std::move(script)) {}

void ScriptPlayer::begin(TimeUs now) {
    started_ = true;
    origin_ = now;
}

std::vector<ScriptEvent> ScriptPlayer::due(TimeUs now) {
    std::vector<ScriptEvent> out;
    if (!started_ || waiting_) {
        return out;
    }
    const TimeUs tau = now - origin_;
    while (next_ < script_.events.size() && script_.events[next_].t <= tau) {
        const ScriptEvent& e = script_.events[next_++];
        out.push_back(e);
        if (e.type == ScriptEvent::Type::Confirm) {
            waiting_ = e;
            wait_start_ = now;
            break;
        }
    }
    return out;
}

void ScriptPlayer::resume(TimeUs now) {
    if (waiting_) {
        origin_ += now - wait_start_;
        waiting_.reset();
    }
}

TimeUs ScriptPlayer::script_time(TimeUs now) const {
    return (waiting_ ? wait_start_ : now) - origin_;
}

} // namespace vhmmt::harness
