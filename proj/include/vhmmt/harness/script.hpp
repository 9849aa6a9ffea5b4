#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vhmmt/calib/calibration.hpp"
#include "vhmmt/core/types.hpp"
#include "vhmmt/harness/scenario.hpp"
#include "vhmmt/metrics/metrics.hpp"
#include "vhmmt/usmodel/phantom.hpp"

namespace vhmmt::harness {

struct ScriptEvent {
    enum class Type { Hand, ButtonDown, ButtonUp, StepBegin, StepEnd, Confirm, TrackBegin, TrackEnd };
    TimeUs t = 0;   ///< script time; the script clock starts once teleoperation is engaged
    Type type = Type::Hand;
    Pose pose;      ///< Hand: hand pose. Confirm: the probe tip pose whose image must be seen.
    int step = 0;   ///< every type but Hand and buttons
};

std::string_view to_string(ScriptEvent::Type t);

/// Timed hand poses and button presses. A Confirm event pauses the script
/// clock until an image taken at the given tip pose shows the vessel.
/// TrackBegin/TrackEnd bracket the sweeps where the vessel should stay
/// centered in the image (the guidance lines of the task).
struct OperatorScript {
    Pose initial_hand;  ///< held from start until aligned
    std::vector<ScriptEvent> events;

    TimeUs duration() const { return events.empty() ? 0 : events.back().t; }
    /// Step spans at script time, i.e. without any waiting.
    std::vector<metrics::Subtask> planned_subtasks() const;
    /// Throws ConfigError unless events are time-ordered with valid poses and balanced steps/buttons.
    void validate() const;

    nlohmann::json to_json() const;
    static OperatorScript from_json(const nlohmann::json& j);
    static OperatorScript load(const std::filesystem::path& path);
};

/// What the script generator knows about the setup.
struct TaskGeometry {
    usmodel::SyntheticPhantom phantom;
    calib::CalibrationSet calib;  ///< offset is the identity
    Pose start_tip;               ///< probe tip in the follower base at the start
    double pixel_m = 0.06 / 256;  ///< lateral pixel pitch, scales the noise
};

/// Probe tip on the phantom's top face at (x, y) (phantom frame), pointing
/// into tissue, image lateral axis at `heading` from the phantom x axis,
/// pressed `depth` below the surface (negative hovers above it).
Pose view_tip(const usmodel::SyntheticPhantom& phantom, double x, double y, double heading, double depth);

/// Which steps give transverse vessel images (lateral tracking and eccentricity).
bool is_transverse_step(int step);

inline const char* step_name(int step) {
    switch (step) {
        case 1: return "longitudinal view, large vessel";
        case 2: return "transverse sweep, large vessel";
        case 3: return "center bifurcation";
        case 4: return "transverse sweep, thin vessel";
        case 5: return "longitudinal view, thin vessel";
        default: return "?";
    }
}

/// Scripted operator for the five-step scanning task on the standard phantom.
OperatorScript five_step_task(const TaskGeometry& geometry, const TaskParams& params, double pose_hz,
                              std::uint64_t seed);

/// Plays a script against a clock, honoring Confirm pauses.
class ScriptPlayer {
public:
    explicit ScriptPlayer(OperatorScript script);

    /// Starts the script clock at `now`.
    void begin(TimeUs now);
    bool started() const { return started_; }
    /// Events due at `now`. Stops at (and returns) a Confirm event, after
    /// which nothing is due until resume().
    std::vector<ScriptEvent> due(TimeUs now);
    /// The pending Confirm, if the script is paused.
    const std::optional<ScriptEvent>& waiting() const { return waiting_; }
    TimeUs waiting_since() const { return wait_start_; }
    void resume(TimeUs now);
    bool finished() const { return started_ && !waiting_ && next_ >= script_.events.size(); }
    TimeUs script_time(TimeUs now) const;
    const OperatorScript& script() const { return script_; }

private:
    OperatorScript script_;
    bool started_ = false;
    TimeUs origin_ = 0;   ///< wall time of script time 0, shifted by every pause
    std::size_t next_ = 0;
    std::optional<ScriptEvent> waiting_;
    TimeUs wait_start_ = 0;
};

} // namespace vhmmt::harness
