#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vhmmt/calib/calibration.hpp"
#include "vhmmt/control/controller.hpp"
#include "vhmmt/core/clock.hpp"
#include "vhmmt/core/spsc_queue.hpp"
#include "vhmmt/haptics/octree.hpp"
#include "vhmmt/harness/scenario.hpp"
#include "vhmmt/harness/script.hpp"
#include "vhmmt/metrics/metrics.hpp"
#include "vhmmt/netsim/endpoint.hpp"
#include "vhmmt/session/session.hpp"
#include "vhmmt/usmodel/volume.hpp"

namespace vhmmt::harness {

/// Pose command as sent by the operator context.
struct CommandRecord {
    TimeUs t = 0;
    Pose flange;
    Vec3 haptic_force = Vec3::Zero();  ///< local virtual-fixture force at that moment
    bool proxy_contact = false;
};

/// One displayed image. Preview frames are rendered locally from the command;
/// live frames are captured by the follower and shown on arrival.
struct FrameRecord {
    usmodel::ImageSource source = usmodel::ImageSource::Live;
    TimeUs capture_us = 0;
    TimeUs cause_us = -1;    ///< send time of the command the image reflects, -1 before any
    TimeUs display_us = -1;  ///< -1 while still in flight
    Pose plane;
    double force_n = 0.0;    ///< follower contact force at capture (live)
    metrics::EllipseFit fit;
};

struct EventRecord {
    TimeUs t = 0;
    std::string what;
    int step = 0;
};

struct DelayStats {
    std::uint64_t count = 0;
    double mean = 0.0, min = 0.0, max = 0.0;
    void add(double v);
    nlohmann::json to_json() const;
    static DelayStats from_json(const nlohmann::json& j);

private:
    double sum_ = 0.0;
};

/// Everything a run produced. Plant ticks and commands go to CSV; the rest
/// round-trips through log.json so reports can be rebuilt from disk.
struct RunLog {
    nlohmann::json scenario;
    double delay_ms = 0.0;       ///< smallest one-way delay in force during the run
    double jitter_ms = 0.0;
    double control_period_ms = 1.0;
    bool preview_enabled = true;
    bool completed = false;
    bool truncated = false;
    TimeUs end_us = 0;

    std::vector<control::TickRecord> ticks;
    std::vector<CommandRecord> commands;
    std::vector<FrameRecord> frames;
    std::vector<EventRecord> events;
    std::vector<metrics::Subtask> planned;

    DelayStats pose_delay_ms, state_delay_ms, frame_delay_ms, rtt_ms;
    std::uint64_t stale_drops = 0, corrupt_drops = 0, control_failures = 0;
    std::uint64_t unreachable_poses = 0, rejected_goals = 0, ignored_events = 0;
    std::uint64_t unconfirmed_steps = 0;

    bool empty() const { return events.empty() && frames.empty() && ticks.empty(); }

    nlohmann::json to_json() const;  ///< without ticks and commands
    static RunLog from_json(const nlohmann::json& j);
    void write(const std::filesystem::path& dir) const;
    static RunLog load(const std::filesystem::path& dir);
};

/// Operator input from an interactive client.
namespace input {
struct Hand {
    Pose pose;
};
struct Button {
    bool down = false;
};
struct Start {};
struct Stop {};
struct SetDelay {
    double ms = 0.0;
};
struct SetMode {
    Mode mode = Mode::Vhmmt;
};
} // namespace input
using OperatorInput = std::variant<input::Hand, input::Button, input::Start, input::Stop, input::SetDelay, input::SetMode>;
using InputQueue = SpscQueue<OperatorInput, 256>;

/// Follower telemetry as the operator sees it.
struct StateSnapshot {
    TimeUs t = 0;
    Pose follower;
    Vec3 force = Vec3::Zero();          ///< follower contact force
    Vec3 haptic_force = Vec3::Zero();   ///< local model
    session::Mode fsm = session::Mode::Idle;
    std::optional<double> align_error;
    double delay_ms = 0.0;
    Mode mode = Mode::Vhmmt;
};
struct ImageOut {
    usmodel::ImageSource source = usmodel::ImageSource::Live;
    TimeUs t = 0;  ///< capture time
    int width = 0, height = 0;
    std::vector<std::uint8_t> gray;
};
struct StatsOut {
    double rtt_ms = 0.0;
    std::uint64_t drops = 0;
};

/// Receives telemetry on the simulation thread; implementations must not block.
class TelemetrySink {
public:
    virtual ~TelemetrySink() = default;
    virtual void on_state(const StateSnapshot&) {}
    virtual void on_image(const ImageOut&) {}
    virtual void on_stats(const StatsOut&) {}
};

struct SimulationOptions {
    /// Reuse a pre-acquired sweep instead of generating one (copied, since
    /// live frames are blended into it).
    std::shared_ptr<const usmodel::UsVolume> volume;
    bool keep_ticks = true;
    InputQueue* input = nullptr;      ///< required for interactive scenarios
    TelemetrySink* telemetry = nullptr;
    double telemetry_hz = 30.0;
};

/// Fixed transforms of the simulated setup.
calib::CalibrationSet default_calibration();

/// Builds the sweep a scenario would acquire (pure function of its seed and geometry).
usmodel::UsVolume acquire_sweep(const Scenario& scenario, const usmodel::SyntheticPhantom& phantom);

/// Deterministic per-purpose seed derived from the scenario seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

struct RealtimeStats {
    std::uint64_t ticks = 0;
    double worst_late_ms = 0.0;  ///< control tick start after its due time
    double p99_late_ms = 0.0;
    bool fixed_priority = false;  ///< control thread got SCHED_FIFO
};

/// Operator, delayed link, follower command, control and state-out contexts,
/// run round-robin on one simulated clock. They talk only through queues
/// and the link, so each step() is one control period for every context.
class Simulation {
public:
    explicit Simulation(Scenario scenario, SimulationOptions options = {});
    ~Simulation();

    void step();
    /// Script finished and in-flight messages drained, or the duration limit hit.
    bool done() const { return done_.load(std::memory_order_acquire); }
    /// Steps until done. Throws SimulationDiverged.
    RunLog run();
    /// Runs against the wall clock until done or `stop` is set. The control
    /// context gets its own thread; the others share a second one.
    RealtimeStats run_realtime(const std::atomic<bool>& stop);

    TimeUs now() const { return clock_.now_us(); }
    const RunLog& log() const { return log_; }
    RunLog take_log();
    const Scenario& scenario() const { return scenario_; }
    const session::Session& session() const { return session_; }
    const OperatorScript* script() const;
    const control::PlantState& plant() const { return plant_; }
    const calib::CalibrationSet& calibration() const { return calib_; }
    /// Hand pose that maps exactly onto the follower's start pose.
    Pose home_hand() const;

private:
    void operator_context(TimeUs now);
    void follower_command_context(TimeUs now);
    void control_context();
    void state_out_context(TimeUs now);

    void handle_script_event(const ScriptEvent& e, TimeUs now);
    void handle_input(const OperatorInput& in, TimeUs now);
    void on_hand(const Pose& hand, TimeUs now);
    void apply(const session::Outcome& out, TimeUs now);
    void render_preview(TimeUs now);
    bool vessel_visible(const usmodel::UsImage& img) const;
    void check_confirm(const Pose& plane_tip, bool vessel_seen, TimeUs now);
    void update_haptics(TimeUs now);
    void publish_telemetry(TimeUs now);
    void set_delay(double ms, TimeUs now);
    void event(TimeUs t, std::string what, int step = 0);

    Scenario scenario_;
    SimulationOptions options_;
    SimClock clock_;
    RunLog log_;
    std::atomic<bool> done_{false};
    TimeUs period_us_;

    usmodel::SyntheticPhantom phantom_;
    calib::CalibrationSet calib_;
    kinematics::RobotModel model_;
    Pose probe_;

    // Operator side.
    session::Session session_;
    std::optional<ScriptPlayer> player_;
    std::optional<Pose> hand_;
    TimeUs next_hand_us_ = 0;
    usmodel::UsVolume volume_;
    std::unique_ptr<haptics::PointCloudOctree> cloud_;
    haptics::ProxyState proxy_;
    std::optional<Vec3> last_hip_;
    Vec3 haptic_force_ = Vec3::Zero();
    std::optional<Pose> preview_tip_;  ///< tip of the newest command not yet previewed
    TimeUs preview_cause_us_ = 0;
    TimeUs last_preview_us_;
    TimeUs next_ping_us_ = 0;
    TimeUs next_telemetry_us_ = 0;
    TimeUs script_done_us_ = -1;
    int current_step_ = 0;
    std::optional<netsim::StatePayload> last_state_;
    std::size_t live_seen_ = 0;

    // Link.
    netsim::Link link_;

    // Follower side.
    control::CommandQueue goals_;
    std::unique_ptr<control::CommandStage> command_stage_;
    std::unique_ptr<control::Controller> controller_;
    control::PlantState plant_;
    control::Environment env_;
    /// Control context -> the rest: newest plant sample.
    SpscQueue<control::TickRecord, 64> ticks_out_;
    control::TickRecord latest_;
    TimeUs last_cause_us_ = -1;
    TimeUs next_state_us_ = 0;
    TimeUs next_live_us_ = 0;
    std::uint64_t live_index_ = 0;
    std::vector<std::size_t> inflight_;  ///< indices of live frames not yet displayed
};

/// run_scenario: builds, runs and returns the log.
RunLog run_scenario(const Scenario& scenario, const SimulationOptions& options = {});

} // namespace vhmmt::harness
