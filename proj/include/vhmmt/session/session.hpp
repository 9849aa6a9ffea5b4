#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "vhmmt/calib/calibration.hpp"

namespace vhmmt::session {

enum class Mode : std::uint8_t { Idle, Aligning, Teleop, Clutched };

std::string_view to_string(Mode m);

namespace event {
struct Start {};
struct Stop {};
struct ButtonDown {};
struct ButtonUp {};
/// Haptic device pose in the camera frame.
struct PoseUpdate {
    Pose hand;
};
/// Latest measured follower flange pose, needed while aligning.
struct FollowerUpdate {
    Pose flange;
};
} // namespace event

using Event = std::variant<event::Start, event::Stop, event::ButtonDown, event::ButtonUp, event::PoseUpdate,
                           event::FollowerUpdate>;

std::string_view event_name(const Event& e);

struct Outcome {
    std::optional<Pose> command;     ///< flange pose to send to the follower
    bool ignored = false;            ///< event was not valid in the current mode
};

/// Operator-side state machine: Idle -> Aligning -> Teleop <-> Clutched.
/// Events are handled one at a time by a single owner.
class Session {
public:
    static constexpr double kDefaultAlignThreshold = 0.05;

    explicit Session(calib::CalibrationSet calib, double align_threshold = kDefaultAlignThreshold);

    Outcome handle_event(const Event& e);

    /// Angle between the mapped hand orientation and the follower flange.
    double alignment_error(const Pose& hand, const Pose& follower) const;

    Mode mode() const { return mode_; }
    const calib::CalibrationSet& calibration() const { return calib_; }
    const std::optional<Pose>& last_commanded() const { return last_commanded_; }
    /// Most recent alignment error, or nullopt before the first computable one.
    std::optional<double> last_align_error() const { return align_error_; }
    double align_threshold() const { return align_threshold_; }
    std::uint64_t ignored_events() const { return ignored_; }

    /// Receives a line for every ignored event; silent by default.
    void set_warning_sink(std::function<void(std::string_view)> sink) { warn_ = std::move(sink); }

private:
    Outcome reject(const Event& e);
    Outcome on_pose(const Pose& hand);
    void try_align();

    calib::CalibrationSet calib_;
    Pose initial_offset_;
    double align_threshold_;
    Mode mode_ = Mode::Idle;
    std::optional<Pose> hand_;
    std::optional<Pose> follower_;
    std::optional<Pose> last_commanded_;
    std::optional<double> align_error_;
    std::uint64_t ignored_ = 0;
    std::function<void(std::string_view)> warn_;
};

} // namespace vhmmt::session
