#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vhmmt/haptics/proxy.hpp"

namespace vhmmt::harness {

/// MMT shows only the delayed live image; VH-MMT adds the local preview.
enum class Mode { Mmt, Vhmmt };

std::string_view to_string(Mode m);
/// Accepts "mmt" or "vhmmt" (also "vh-mmt"); throws ConfigError otherwise.
Mode parse_mode(std::string_view s);

/// Knobs of the generated five-step operator.
struct TaskParams {
    std::vector<int> steps{1, 2, 3, 4, 5};
    double lateral_noise_px = 0.0;   ///< stationary std of the lateral hand wobble
    double noise_correlation_s = 0.5;
    std::vector<double> force_n{5.0};  ///< one value for all steps, or one per step
    /// Operator's estimate of probe-in-tissue stiffness, used to turn a force
    /// target into a press depth.
    double contact_stiffness = 2200.0;  ///< N/m
    double sweep_speed = 0.005;         ///< m/s along the vessel
    double travel_speed = 0.03;         ///< m/s between steps
    double hold_s = 2.0;
    bool clutch = true;                 ///< reposition the hand once between steps 3 and 4
    bool confirm_views = true;          ///< end each step only once an image confirms the view
    double confirm_timeout_s = 5.0;

    double force_for_step(int step) const;
    void validate() const;
};

struct Scenario {
    std::string name = "scenario";
    Mode mode = Mode::Vhmmt;
    double delay_ms = 0.0;
    double jitter_ms = 0.0;
    std::string transport = "loopback";
    std::uint64_t seed = 1;
    double duration_s = 120.0;

    /// Empty script file plus interactive == false means the generated task.
    bool interactive = false;
    std::filesystem::path script_file;
    TaskParams task;

    std::filesystem::path robot;  ///< robot model JSON

    double control_hz = 1000.0;
    double pose_hz = 100.0;
    double state_hz = 100.0;
    double live_hz = 15.0;
    double preview_hz = 30.0;
    double ping_hz = 10.0;

    int image_px = 256;
    double fov_m = 0.06;
    double volume_spacing = 0.0005;  ///< m, pre-acquired sweep
    double integrate_alpha = 0.3;    ///< live-frame blend into the local volume, 0 disables
    double cloud_spacing = 0.002;    ///< m
    double cloud_noise = 0.0002;     ///< m
    haptics::HapticParams haptic;
    double align_threshold = 0.05;   ///< rad

    double control_period_s() const { return 1.0 / control_hz; }
    double pixel_m() const { return fov_m / image_px; }

    /// Throws ConfigError on bad values or missing referenced files.
    void validate() const;

    /// Relative paths resolve against `base_dir`.
    static Scenario from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static Scenario load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

/// Robot model shipped with the build.
std::filesystem::path default_robot_path();

} // namespace vhmmt::harness
