#include <fstream>
#include <sstream>

#include "vhmmt/core/errors.hpp"
#include "vhmmt/harness/simulation.hpp"

namespace vhmmt::harness {

using nlohmann::json;

namespace {

json fit_to_json(const metrics::EllipseFit& f) {
    return {{"cx", f.centroid.x()}, {"cy", f.centroid.y()}, {"a", f.a},           {"b", f.b},
            {"orientation", f.orientation}, {"area_px", f.area_px}, {"valid", f.valid}};
}

metrics::EllipseFit fit_from_json(const json& j) {
    metrics::EllipseFit f;
    f.centroid = metrics::Vec2(j.at("cx").get<double>(), j.at("cy").get<double>());
    f.a = j.at("a").get<double>();
    f.b = j.at("b").get<double>();
    f.orientation = j.at("orientation").get<double>();
    f.area_px = j.at("area_px").get<int>();
    f.valid = j.at("valid").get<bool>();
    return f;
}

const char* source_name(usmodel::ImageSource s) {
    return s == usmodel::ImageSource::Preview ? "preview" : "live";
}

} // namespace

json RunLog::to_json() const {
    json frames_j = json::array();
    for (const FrameRecord& f : frames) {
        frames_j.push_back({{"source", source_name(f.source)},
                            {"capture_us", f.capture_us},
                            {"cause_us", f.cause_us},
                            {"display_us", f.display_us},
                            {"plane", f.plane},
                            {"force_n", f.force_n},
                            {"fit", fit_to_json(f.fit)}});
    }
    json events_j = json::array();
    for (const EventRecord& e : events) {
        events_j.push_back({{"t_us", e.t}, {"what", e.what}, {"step", e.step}});
    }
    json planned_j = json::array();
    for (const metrics::Subtask& s : planned) {
        planned_j.push_back({{"id", s.id}, {"start_s", s.start_s}, {"end_s", s.end_s}});
    }
    return {{"scenario", scenario},
            {"delay_ms", delay_ms},
            {"jitter_ms", jitter_ms},
            {"control_period_ms", control_period_ms},
            {"preview_enabled", preview_enabled},
            {"completed", completed},
            {"truncated", truncated},
            {"end_us", end_us},
            {"frames", frames_j},
            {"events", events_j},
            {"planned", planned_j},
            {"pose_delay_ms", pose_delay_ms.to_json()},
            {"state_delay_ms", state_delay_ms.to_json()},
            {"frame_delay_ms", frame_delay_ms.to_json()},
            {"rtt_ms", rtt_ms.to_json()},
            {"stale_drops", stale_drops},
            {"corrupt_drops", corrupt_drops},
            {"control_failures", control_failures},
            {"unreachable_poses", unreachable_poses},
            {"rejected_goals", rejected_goals},
            {"ignored_events", ignored_events},
            {"unconfirmed_steps", unconfirmed_steps}};
}

RunLog RunLog::from_json(const json& j) {
    RunLog r;
    try {
        r.scenario = j.at("scenario");
        r.delay_ms = j.at("delay_ms").get<double>();
        r.jitter_ms = j.at("jitter_ms").get<double>();
        r.control_period_ms = j.at("control_period_ms").get<double>();
        r.preview_enabled = j.at("preview_enabled").get<bool>();
        r.completed = j.at("completed").get<bool>();
        r.truncated = j.at("truncated").get<bool>();
        r.end_us = j.at("end_us").get<TimeUs>();
        for (const json& f : j.at("frames")) {
            FrameRecord fr;
            fr.source = f.at("source") == "preview" ? usmodel::ImageSource::Preview : usmodel::ImageSource::Live;
            fr.capture_us = f.at("capture_us").get<TimeUs>();
            fr.cause_us = f.at("cause_us").get<TimeUs>();
            fr.display_us = f.at("display_us").get<TimeUs>();
            fr.plane = f.at("plane").get<Pose>();
            fr.force_n = f.at("force_n").get<double>();
            fr.fit = fit_from_json(f.at("fit"));
            r.frames.push_back(fr);
        }
        for (const json& e : j.at("events")) {
            r.events.push_back({e.at("t_us").get<TimeUs>(), e.at("what").get<std::string>(), e.at("step").get<int>()});
        }
        for (const json& s : j.at("planned")) {
            r.planned.push_back({s.at("id").get<int>(), s.at("start_s").get<double>(), s.at("end_s").get<double>()});
        }
        r.pose_delay_ms = DelayStats::from_json(j.at("pose_delay_ms"));
        r.state_delay_ms = DelayStats::from_json(j.at("state_delay_ms"));
        r.frame_delay_ms = DelayStats::from_json(j.at("frame_delay_ms"));
        r.rtt_ms = DelayStats::from_json(j.at("rtt_ms"));
        r.stale_drops = j.at("stale_drops").get<std::uint64_t>();
        r.corrupt_drops = j.at("corrupt_drops").get<std::uint64_t>();
        r.control_failures = j.at("control_failures").get<std::uint64_t>();
        r.unreachable_poses = j.at("unreachable_poses").get<std::uint64_t>();
        r.rejected_goals = j.at("rejected_goals").get<std::uint64_t>();
        r.ignored_events = j.at("ignored_events").get<std::uint64_t>();
        r.unconfirmed_steps = j.at("unconfirmed_steps").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run log: ") + e.what());
    }
    return r;
}

void RunLog::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "log.json");
        out << to_json().dump(1) << '\n';
    }
    {
        std::ofstream out(dir / "state.csv");
        control::write_state_csv(out, ticks);
    }
    std::ofstream out(dir / "commands.csv");
    out << "t_us,qw,qx,qy,qz,x,y,z,hfx,hfy,hfz,proxy_contact\n";
    out.precision(17);
    for (const CommandRecord& c : commands) {
        out << c.t;
        for (double x : c.flange.to_array()) {
            out << ',' << x;
        }
        out << ',' << c.haptic_force.x() << ',' << c.haptic_force.y() << ',' << c.haptic_force.z() << ','
            << (c.proxy_contact ? 1 : 0) << '\n';
        if (!out) {
            throw ConfigError("cannot write " + (dir / "commands.csv").string());
        }
    }
}

RunLog RunLog::load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "log.json");
    if (!in) {
        throw ConfigError("no log.json in " + dir.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError((dir / "log.json").string() + ": " + e.what());
    }
    RunLog r = from_json(j);

    std::ifstream cin(dir / "commands.csv");
    std::string line;
    if (cin && std::getline(cin, line)) {
        while (std::getline(cin, line)) {
            std::istringstream ls(line);
            std::array<double, 12> v{};
            char comma = 0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i > 0) {
                    ls >> comma;
                }
                ls >> v[i];
            }
            if (!ls) {
                throw ConfigError("malformed line in commands.csv: " + line);
            }
            CommandRecord c;
            c.t = static_cast<TimeUs>(v[0]);
            c.flange = Pose::from_array({v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
            c.haptic_force = Vec3(v[8], v[9], v[10]);
            c.proxy_contact = v[11] != 0.0;
            r.commands.push_back(c);
        }
    }
    return r;
}

} // namespace vhmmt::harness
