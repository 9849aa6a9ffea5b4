#include "vhmmt/harness/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::harness {

using nlohmann::json;

std::string_view to_string(Mode m) {
    return m == Mode::Mmt ? "mmt" : "vhmmt";
}

Mode parse_mode(std::string_view s) {
    if (s == "mmt") {
        return Mode::Mmt;
    }
    if (s == "vhmmt" || s == "vh-mmt") {
        return Mode::Vhmmt;
    }
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected mmt or vhmmt)");
}

std::filesystem::path default_robot_path() {
    return std::filesystem::path(VHMMT_CONFIG_DIR) / "panda.json";
}

double TaskParams::force_for_step(int step) const {
    if (force_n.size() == 1) {
        return force_n[0];
    }
    return force_n.at(static_cast<std::size_t>(step - 1));
}

void TaskParams::validate() const {
    int prev = 0;
    for (int s : steps) {
        if (s < 1 || s > 5 || s <= prev) {
            throw ConfigError("task steps must be increasing ids in 1..5");
        }
        prev = s;
    }
    if (steps.empty()) {
        throw ConfigError("task needs at least one step");
    }
    if (force_n.size() != 1 && force_n.size() != 5) {
        throw ConfigError("force_n takes one value or one per step");
    }
    for (double f : force_n) {
        if (!(f >= 0.0 && f <= 40.0)) {
            throw ConfigError("force_n must lie in [0, 40] N");
        }
    }
    if (!(lateral_noise_px >= 0.0) || !(noise_correlation_s > 0.0) || !(contact_stiffness > 0.0) ||
        !(sweep_speed > 0.0) || !(travel_speed > 0.0) || !(hold_s >= 0.0) || !(confirm_timeout_s >= 0.0)) {
        throw ConfigError("task parameters out of range");
    }
}

void Scenario::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError(std::string(what) + " must be positive");
        }
    };
    if (!(delay_ms >= 0.0) || !(jitter_ms >= 0.0) || jitter_ms > delay_ms) {
        throw ConfigError("need 0 <= jitter_ms <= delay_ms");
    }
    if (transport != "loopback" && transport != "socketpair") {
        throw ConfigError("transport must be loopback or socketpair");
    }
    positive(duration_s, "duration_s");
    positive(control_hz, "control_hz");
    for (auto [v, what] : {std::pair{pose_hz, "pose_hz"}, {state_hz, "state_hz"}, {live_hz, "live_hz"},
                           {preview_hz, "preview_hz"}, {ping_hz, "ping_hz"}}) {
        positive(v, what);
        if (v > control_hz) {
            throw ConfigError(std::string(what) + " exceeds the control rate");
        }
    }
    if (image_px < 16 || image_px > 1024) {
        throw ConfigError("image_px must lie in [16, 1024]");
    }
    positive(fov_m, "fov_m");
    positive(volume_spacing, "volume_spacing");
    positive(cloud_spacing, "cloud_spacing");
    positive(align_threshold, "align_threshold");
    if (!(integrate_alpha >= 0.0 && integrate_alpha <= 1.0)) {
        throw ConfigError("integrate_alpha must lie in [0, 1]");
    }
    if (!(cloud_noise >= 0.0)) {
        throw ConfigError("cloud_noise must be >= 0");
    }
    haptic.validate();
    task.validate();
    if (!std::filesystem::exists(robot)) {
        throw ConfigError("robot model not found: " + robot.string());
    }
    if (!script_file.empty() && !std::filesystem::exists(script_file)) {
        throw ConfigError("script file not found: " + script_file.string());
    }
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j.items()) {
        if (!ok.count(item.key())) {
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    return p.is_absolute() || base.empty() ? p : base / p;
}

TaskParams task_from_json(const json& j) {
    check_keys(j,
               {"task", "steps", "lateral_noise_px", "noise_correlation_s", "force_n", "contact_stiffness",
                "sweep_speed", "travel_speed", "hold_s", "clutch", "confirm_views", "confirm_timeout_s"},
               "script");
    if (j.contains("task") && j.at("task") != "five_step") {
        throw ConfigError("only the five_step task is available");
    }
    TaskParams t;
    read(j, "steps", t.steps);
    read(j, "lateral_noise_px", t.lateral_noise_px);
    read(j, "noise_correlation_s", t.noise_correlation_s);
    if (j.contains("force_n")) {
        const json& f = j.at("force_n");
        t.force_n = f.is_array() ? f.get<std::vector<double>>() : std::vector<double>{f.get<double>()};
    }
    read(j, "contact_stiffness", t.contact_stiffness);
    read(j, "sweep_speed", t.sweep_speed);
    read(j, "travel_speed", t.travel_speed);
    read(j, "hold_s", t.hold_s);
    read(j, "clutch", t.clutch);
    read(j, "confirm_views", t.confirm_views);
    read(j, "confirm_timeout_s", t.confirm_timeout_s);
    return t;
}

json task_to_json(const TaskParams& t) {
    return {{"task", "five_step"},
            {"steps", t.steps},
            {"lateral_noise_px", t.lateral_noise_px},
            {"noise_correlation_s", t.noise_correlation_s},
            {"force_n", t.force_n},
            {"contact_stiffness", t.contact_stiffness},
            {"sweep_speed", t.sweep_speed},
            {"travel_speed", t.travel_speed},
            {"hold_s", t.hold_s},
            {"clutch", t.clutch},
            {"confirm_views", t.confirm_views},
            {"confirm_timeout_s", t.confirm_timeout_s}};
}

} // namespace

Scenario Scenario::from_json(const json& j, const std::filesystem::path& base_dir) {
    check_keys(j,
               {"name", "mode", "delay_ms", "jitter_ms", "transport", "seed", "duration_s", "script", "robot",
                "control_hz", "pose_hz", "state_hz", "live_hz", "preview_hz", "ping_hz", "image_px", "fov_m",
                "volume_spacing", "integrate_alpha", "cloud_spacing", "cloud_noise", "haptic", "align_threshold"},
               "scenario");
    Scenario s;
    s.robot = default_robot_path();
    try {
        read(j, "name", s.name);
        if (j.contains("mode")) {
            s.mode = parse_mode(j.at("mode").get<std::string>());
        }
        read(j, "delay_ms", s.delay_ms);
        read(j, "jitter_ms", s.jitter_ms);
        read(j, "transport", s.transport);
        read(j, "seed", s.seed);
        read(j, "duration_s", s.duration_s);
        if (j.contains("script")) {
            const json& sc = j.at("script");
            if (sc.is_string()) {
                const auto name = sc.get<std::string>();
                if (name == "interactive") {
                    s.interactive = true;
                } else if (name != "five_step") {
                    throw ConfigError("script must be five_step, interactive, or an object");
                }
            } else if (sc.is_object() && sc.contains("file")) {
                check_keys(sc, {"file"}, "script");
                s.script_file = resolve(sc.at("file").get<std::string>(), base_dir);
            } else {
                s.task = task_from_json(sc);
            }
        }
        if (j.contains("robot")) {
            s.robot = resolve(j.at("robot").get<std::string>(), base_dir);
        }
        read(j, "control_hz", s.control_hz);
        read(j, "pose_hz", s.pose_hz);
        read(j, "state_hz", s.state_hz);
        read(j, "live_hz", s.live_hz);
        read(j, "preview_hz", s.preview_hz);
        read(j, "ping_hz", s.ping_hz);
        read(j, "image_px", s.image_px);
        read(j, "fov_m", s.fov_m);
        read(j, "volume_spacing", s.volume_spacing);
        read(j, "integrate_alpha", s.integrate_alpha);
        read(j, "cloud_spacing", s.cloud_spacing);
        read(j, "cloud_noise", s.cloud_noise);
        read(j, "align_threshold", s.align_threshold);
        if (j.contains("haptic")) {
            const json& h = j.at("haptic");
            check_keys(h, {"k", "d", "n", "r_max", "f_max"}, "haptic");
            read(h, "k", s.haptic.k);
            read(h, "d", s.haptic.d);
            read(h, "n", s.haptic.n);
            read(h, "r_max", s.haptic.r_max);
            read(h, "f_max", s.haptic.f_max);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    s.validate();
    return s;
}

Scenario Scenario::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("scenario " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

json Scenario::to_json() const {
    json script;
    if (interactive) {
        script = "interactive";
    } else if (!script_file.empty()) {
        script = {{"file", script_file.string()}};
    } else {
        script = task_to_json(task);
    }
    return {{"name", name},
            {"mode", to_string(mode)},
            {"delay_ms", delay_ms},
            {"jitter_ms", jitter_ms},
            {"transport", transport},
            {"seed", seed},
            {"duration_s", duration_s},
            {"script", script},
            {"robot", robot.filename().string()},
            {"control_hz", control_hz},
            {"pose_hz", pose_hz},
            {"state_hz", state_hz},
            {"live_hz", live_hz},
            {"preview_hz", preview_hz},
            {"ping_hz", ping_hz},
            {"image_px", image_px},
            {"fov_m", fov_m},
            {"volume_spacing", volume_spacing},
            {"integrate_alpha", integrate_alpha},
            {"cloud_spacing", cloud_spacing},
            {"cloud_noise", cloud_noise},
            {"haptic", {{"k", haptic.k}, {"d", haptic.d}, {"n", haptic.n}, {"r_max", haptic.r_max}, {"f_max", haptic.f_max}}},
            {"align_threshold", align_threshold}};
}

} // namespace vhmmt::harness
