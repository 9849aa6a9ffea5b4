#include "vhmmt/session/session.hpp"

#include "vhmmt/core/errors.hpp"

namespace vhmmt::session {

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::Idle: return "Idle";
        case Mode::Aligning: return "Aligning";
        case Mode::Teleop: return "Teleop";
        case Mode::Clutched: return "Clutched";
    }
    return "?";
}

std::string_view event_name(const Event& e) {
    static constexpr std::string_view names[] = {"start", "stop", "button_down", "button_up", "pose_update",
                                                 "follower_update"};
    return names[e.index()];
}

Session::Session(calib::CalibrationSet calib, double align_threshold)
    : calib_(calib), initial_offset_(calib.offset), align_threshold_(align_threshold) {
    if (!(align_threshold > 0.0)) {
        throw ConfigError("align threshold must be positive");
    }
}

double Session::alignment_error(const Pose& hand, const Pose& follower) const {
    return angular_error(calib::expert_to_follower(calib_, hand), follower);
}

Outcome Session::reject(const Event& e) {
    ++ignored_;
    if (warn_) {
        warn_(std::string("ignored ") + std::string(event_name(e)) + " in " + std::string(to_string(mode_)));
    }
    return Outcome{std::nullopt, true};
}

void Session::try_align() {
    if (!hand_ || !follower_) {
        return;
    }
    align_error_ = alignment_error(*hand_, *follower_);
    if (*align_error_ >= align_threshold_) {
        return;
    }
    // Offset that maps the current hand exactly onto the follower, so
    // teleoperation starts without a jump. Position is absorbed here too.
    const Pose chain = calib_.hand_eye * *hand_ * calib_.probe.inverse();
    calib_.offset = *follower_ * chain.inverse();
    mode_ = Mode::Teleop;
}

Outcome Session::on_pose(const Pose& hand) {
    hand_ = hand;
    switch (mode_) {
        case Mode::Idle:
        case Mode::Clutched:
            return {};
        case Mode::Aligning:
            try_align();
            if (mode_ != Mode::Teleop) {
                return {};
            }
            [[fallthrough]];
        case Mode::Teleop: {
            Pose cmd = calib::expert_to_follower(calib_, hand);
            last_commanded_ = cmd;
            return Outcome{cmd, false};
        }
    }
    return {};
}

Outcome Session::handle_event(const Event& e) {
    return std::visit(
        [&](const auto& ev) -> Outcome {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, event::Start>) {
                if (mode_ != Mode::Idle) {
                    return reject(e);
                }
                calib_.offset = initial_offset_;
                align_error_.reset();
                mode_ = Mode::Aligning;
                try_align();
                return {};
            } else if constexpr (std::is_same_v<T, event::Stop>) {
                if (mode_ == Mode::Idle) {
                    return reject(e);
                }
                mode_ = Mode::Idle;
                return {};
            } else if constexpr (std::is_same_v<T, event::ButtonDown>) {
                if (mode_ != Mode::Teleop) {
                    return reject(e);
                }
                mode_ = Mode::Clutched;
                return {};
            } else if constexpr (std::is_same_v<T, event::ButtonUp>) {
                if (mode_ != Mode::Clutched) {
                    return reject(e);
                }
                if (last_commanded_ && hand_) {
                    const Pose post = calib::expert_to_follower(calib_, *hand_);
                    calib_.offset = calib::reindex_offset(calib_.offset, *last_commanded_, post);
                }
                mode_ = Mode::Teleop;
                return {};
            } else if constexpr (std::is_same_v<T, event::PoseUpdate>) {
                if (!ev.hand.is_valid(1e-6)) {
                    return reject(e);
                }
                return on_pose(ev.hand);
            } else {
                if (!ev.flange.is_valid(1e-6)) {
                    return reject(e);
                }
                follower_ = ev.flange;
                if (mode_ == Mode::Aligning) {
                    try_align();
                    if (mode_ == Mode::Teleop) {
                        Pose cmd = calib::expert_to_follower(calib_, *hand_);
                        last_commanded_ = cmd;
                        return Outcome{cmd, false};
                    }
                }
                return {};
            }
        },
        e);
}

} // namespace vhmmt::session
