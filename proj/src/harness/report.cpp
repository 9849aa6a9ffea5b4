#include "vhmmt/harness/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::harness {

using nlohmann::json;

namespace {

std::string ms_str(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

struct Window {
    int step = 0;
    TimeUs begin = 0;
    TimeUs end = 0;
};

double ms(TimeUs us) {
    return static_cast<double>(us) / static_cast<double>(kUsPerMs);
}

std::vector<Window> windows(const RunLog& log, const std::string& begin, const std::string& end) {
    std::vector<Window> out;
    std::map<int, TimeUs> open;
    for (const EventRecord& e : log.events) {
        if (e.what == begin) {
            open[e.step] = e.t;
        } else if (e.what == end && open.count(e.step)) {
            out.push_back({e.step, open[e.step], e.t});
            open.erase(e.step);
        }
    }
    return out;
}

json stats_json(const std::vector<double>& v) {
    if (v.empty()) {
        return nullptr;
    }
    double sum = 0.0;
    for (double x : v) {
        sum += x;
    }
    return {{"count", v.size()},
            {"mean", sum / static_cast<double>(v.size())},
            {"min", *std::min_element(v.begin(), v.end())},
            {"max", *std::max_element(v.begin(), v.end())}};
}

int image_px(const RunLog& log) {
    return log.scenario.value("image_px", 256);
}

void flatten(const json& j, const std::string& key, const std::string& section, std::ostringstream& out) {
    if (j.is_object()) {
        for (const auto& item : j.items()) {
            flatten(item.value(), key.empty() ? item.key() : key + "." + item.key(), section, out);
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            flatten(j[i], key + "." + std::to_string(i), section, out);
        }
    } else {
        std::string v = j.is_string() ? j.get<std::string>() : j.dump();
        if (v.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char c : v) {
                q += c == '"' ? std::string("\"\"") : std::string(1, c);
            }
            v = q + "\"";
        }
        out << section << ',' << key << ',' << v << '\n';
    }
}

} // namespace

std::vector<InvariantResult> check_invariants(const RunLog& log) {
    std::vector<InvariantResult> out;
    const double d = log.delay_ms;
    const double j = log.jitter_ms;

    {
        InvariantResult r{"monotone_timestamps", true, "events, commands, ticks and frames in order"};
        auto check = [&](const char* what, auto begin, auto end, auto key) {
            TimeUs prev = std::numeric_limits<TimeUs>::min();
            for (auto it = begin; it != end; ++it) {
                const TimeUs t = key(*it);
                if (t < prev && r.ok) {
                    r.ok = false;
                    r.detail = std::string(what) + " goes back in time at " + std::to_string(t) + " us";
                }
                prev = std::max(prev, t);
            }
        };
        check("events", log.events.begin(), log.events.end(), [](const EventRecord& e) { return e.t; });
        check("commands", log.commands.begin(), log.commands.end(), [](const CommandRecord& c) { return c.t; });
        check("ticks", log.ticks.begin(), log.ticks.end(),
              [](const control::TickRecord& t) { return static_cast<TimeUs>(std::llround(t.t * 1e6)); });
        for (auto src : {usmodel::ImageSource::Live, usmodel::ImageSource::Preview}) {
            std::vector<TimeUs> cap;
            for (const FrameRecord& f : log.frames) {
                if (f.source == src) {
                    cap.push_back(f.capture_us);
                }
            }
            check("frames", cap.begin(), cap.end(), [](TimeUs t) { return t; });
        }
        out.push_back(r);
    }

    {
        InvariantResult r{"causality", true, ""};
        double worst = std::numeric_limits<double>::infinity();
        for (const FrameRecord& f : log.frames) {
            if (f.source == usmodel::ImageSource::Live && f.cause_us >= 0) {
                worst = std::min(worst, ms(f.capture_us - f.cause_us));
            }
        }
        if (std::isfinite(worst)) {
            r.ok = worst >= d - j;
            r.detail = "min capture - cause " + ms_str(worst) + " ms, bound " + ms_str(d - j) + " ms";
        } else {
            r.detail = "no live frame had a cause";
        }
        out.push_back(r);
    }

    {
        InvariantResult r{"preview_freshness", true, ""};
        double worst = 0.0;
        std::size_t n = 0;
        for (const FrameRecord& f : log.frames) {
            if (f.source == usmodel::ImageSource::Preview) {
                worst = std::max(worst, ms(f.display_us - f.cause_us));
                ++n;
            }
        }
        const double bound = 2.0 * log.control_period_ms;
        r.ok = worst < bound;
        r.detail = std::to_string(n) + " previews, max lag " + ms_str(worst) + " ms, bound " +
                   ms_str(bound) + " ms";
        if (log.preview_enabled && n == 0 && log.completed) {
            r.ok = false;
            r.detail = "preview enabled but no preview frame rendered";
        }
        out.push_back(r);
    }

    {
        // Lag of a displayed live frame behind its capture; the poll tick allows 10 ms.
        InvariantResult r{"live_lag", true, ""};
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const FrameRecord& f : log.frames) {
            if (f.source == usmodel::ImageSource::Live && f.display_us >= 0) {
                const double lag = ms(f.display_us - f.capture_us);
                lo = std::min(lo, lag);
                hi = std::max(hi, lag);
            }
        }
        if (std::isfinite(lo)) {
            const double max_d = log.scenario.value("delay_ms", d);
            r.ok = lo >= d - j && hi <= max_d + j + 10.0;
            r.detail = "live lag in [" + ms_str(lo) + ", " + ms_str(hi) + "] ms";
        } else {
            r.detail = "no live frame displayed";
        }
        out.push_back(r);
    }
    return out;
}

json make_report(const RunLog& log) {
    if (log.empty()) {
        throw ConfigError("cannot report on an empty log");
    }
    json rep;
    rep["scenario"] = {{"name", log.scenario.value("name", "")},
                       {"mode", log.preview_enabled ? "vhmmt" : "mmt"},
                       {"delay_ms", log.delay_ms},
                       {"jitter_ms", log.jitter_ms},
                       {"seed", log.scenario.value("seed", std::uint64_t{0})}};
    rep["completed"] = log.completed;
    rep["truncated"] = log.truncated;
    rep["sim_time_s"] = us_to_s(log.end_us);

    // Completion times.
    std::map<int, double> planned;
    for (const metrics::Subtask& s : log.planned) {
        planned[s.id] = s.duration();
    }
    std::map<int, bool> confirmed;
    for (const EventRecord& e : log.events) {
        if (e.what == "confirmed") {
            confirmed[e.step] = true;
        }
    }
    json subtasks = json::array();
    double total = 0.0;
    for (const Window& w : windows(log, "step begin", "step end")) {
        const double t = us_to_s(w.end - w.begin);
        total += t;
        json s = {{"id", w.step}, {"name", step_name(w.step)}, {"time_s", t}, {"confirmed", confirmed[w.step]}};
        s["planned_s"] = planned.count(w.step) ? json(planned[w.step]) : json(nullptr);
        subtasks.push_back(s);
    }
    rep["subtasks"] = subtasks;
    rep["total_time_s"] = total;

    // Image metrics over live frames caused during the tracked sweeps.
    const double target_x = image_px(log) / 2.0 - 0.5;
    const auto tracks = windows(log, "track begin", "track end");
    std::map<int, std::vector<double>> xs, ecc;
    std::map<int, std::size_t> invalid;
    for (const FrameRecord& f : log.frames) {
        if (f.source != usmodel::ImageSource::Live || f.cause_us < 0) {
            continue;
        }
        for (const Window& w : tracks) {
            if (f.cause_us >= w.begin && f.cause_us <= w.end) {
                if (f.fit.valid && f.fit.b > 0.0) {
                    xs[w.step].push_back(f.fit.centroid.x());
                    xs[0].push_back(f.fit.centroid.x());
                    ecc[w.step].push_back(metrics::eccentricity(f.fit));
                } else {
                    ++invalid[w.step];
                }
                break;
            }
        }
    }
    json lateral = json::object(), eccj = json::object();
    for (const auto& [step, v] : xs) {
        const std::string key = step == 0 ? "all" : "step" + std::to_string(step);
        lateral[key] = metrics::lateral_rmse(v, target_x);
        if (step == 0) {
            continue;
        }
        const auto& e = ecc[step];
        if (e.size() >= 2) {
            const metrics::MeanStd ms = metrics::eccentricity_stats(e);
            eccj[key] = {{"mean", ms.mean}, {"std", ms.stddev}, {"n", ms.n}};
        }
    }
    rep["lateral_rmse_px"] = lateral;
    rep["lateral_target_px"] = target_x;
    rep["eccentricity"] = eccj;
    std::size_t invalid_total = 0;
    for (const auto& [step, n] : invalid) {
        invalid_total += n;
    }
    rep["tracked_frames_without_fit"] = invalid_total;

    // Forces while in contact.
    std::vector<double> follower, haptic;
    for (const FrameRecord& f : log.frames) {
        if (f.source == usmodel::ImageSource::Live && f.force_n > 0.0) {
            follower.push_back(f.force_n);
        }
    }
    for (const CommandRecord& c : log.commands) {
        if (c.proxy_contact) {
            haptic.push_back(c.haptic_force.norm());
        }
    }
    rep["force_n"] = {{"follower", stats_json(follower)}, {"haptic", stats_json(haptic)}};

    // Delays.
    std::vector<double> live_lag, preview_lag, causal;
    for (const FrameRecord& f : log.frames) {
        if (f.source == usmodel::ImageSource::Live) {
            if (f.display_us >= 0) {
                live_lag.push_back(ms(f.display_us - f.capture_us));
            }
            if (f.cause_us >= 0) {
                causal.push_back(ms(f.capture_us - f.cause_us));
            }
        } else {
            preview_lag.push_back(ms(f.display_us - f.cause_us));
        }
    }
    rep["delay_ms"] = {{"pose_one_way", log.pose_delay_ms.to_json()},
                       {"state_one_way", log.state_delay_ms.to_json()},
                       {"frame_one_way", log.frame_delay_ms.to_json()},
                       {"rtt", log.rtt_ms.to_json()},
                       {"live_lag", stats_json(live_lag)},
                       {"preview_lag", stats_json(preview_lag)},
                       {"capture_after_cause", stats_json(causal)}};
    rep["drops"] = {{"stale", log.stale_drops},
                    {"corrupt", log.corrupt_drops},
                    {"control_failures", log.control_failures},
                    {"unreachable_poses", log.unreachable_poses},
                    {"rejected_goals", log.rejected_goals},
                    {"ignored_events", log.ignored_events},
                    {"unconfirmed_steps", log.unconfirmed_steps}};

    json inv = json::array();
    bool ok = true;
    for (const InvariantResult& r : check_invariants(log)) {
        inv.push_back({{"name", r.name}, {"ok", r.ok}, {"detail", r.detail}});
        ok = ok && r.ok;
    }
    rep["invariants"] = inv;
    rep["ok"] = ok;
    return rep;
}

std::string report_csv(const json& report) {
    std::ostringstream out;
    out << "section,key,value\n";
    for (const auto& item : report.items()) {
        if (item.value().is_primitive()) {
            flatten(item.value(), "value", item.key(), out);
        } else {
            flatten(item.value(), "", item.key(), out);
        }
    }
    return out.str();
}

void write_report(const json& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "report.json") << report.dump(2) << '\n';
    std::ofstream(dir / "report.csv") << report_csv(report);
}

bool report_ok(const json& report) {
    return report.value("ok", false);
}

} // namespace vhmmt::harness
