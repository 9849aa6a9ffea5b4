#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "vhmmt/core/errors.hpp"
#include "vhmmt/harness/report.hpp"
#include "vhmmt/harness/simulation.hpp"
#include "vhmmt/kinematics/kinematics.hpp"

using namespace vhmmt;
using namespace vhmmt::harness;
using nlohmann::json;

namespace {

Scenario base() {
    Scenario s;
    s.robot = default_robot_path();
    return s;
}

Scenario single_step(int step) {
    Scenario s = base();
    s.task.steps = {step};
    return s;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("vhmmt_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

TaskGeometry geometry() {
    const auto model = kinematics::RobotModel::load(default_robot_path());
    const auto calib = default_calibration();
    return {usmodel::SyntheticPhantom::standard(), calib,
            kinematics::forward_kinematics(model, model.home) * calib.probe, 0.06 / 256};
}

} // namespace

TEST_CASE("scenario defaults validate and round-trip") {
    const Scenario s = base();
    CHECK_NOTHROW(s.validate());
    const Scenario back = Scenario::from_json(s.to_json(), VHMMT_CONFIG_DIR);
    CHECK(back.to_json() == s.to_json());
}

TEST_CASE("scenario rejects bad input") {
    CHECK_THROWS_AS(Scenario::from_json(json{{"delay", 500}}, ""), ConfigError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"delay_ms", 100}, {"jitter_ms", 200}}, ""), ConfigError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"mode", "fast"}}, ""), ConfigError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"script", {{"file", "/nonexistent/script.json"}}}}, ""), ConfigError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"script", {{"steps", {3, 2}}}}}, ""), ConfigError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"script", {{"force_n", {1, 2}}}}}, ""), ConfigError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"haptic", {{"stiffness", 1}}}}, ""), ConfigError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"pose_hz", 5000}}, ""), ConfigError);
    CHECK_THROWS_AS(Scenario::load("/nonexistent.json"), ConfigError);
    CHECK(Scenario::from_json(json{{"mode", "vh-mmt"}}, "").mode == Mode::Vhmmt);
    CHECK(Scenario::from_json(json{{"script", "interactive"}}, "").interactive);
}

TEST_CASE("derived seeds differ by purpose and by seed") {
    CHECK(derive_seed(1, 1) != derive_seed(1, 2));
    CHECK(derive_seed(1, 1) != derive_seed(2, 1));
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("five-step script is valid and starts on the follower") {
    const TaskGeometry g = geometry();
    const OperatorScript script = five_step_task(g, TaskParams{}, 100.0, 1);
    CHECK_NOTHROW(script.validate());
    const auto planned = script.planned_subtasks();
    REQUIRE(planned.size() == 5);
    for (std::size_t i = 0; i < planned.size(); ++i) {
        CHECK(planned[i].id == static_cast<int>(i) + 1);
        CHECK(planned[i].duration() > 0.0);
        if (i > 0) {
            CHECK(planned[i].start_s >= planned[i - 1].end_s);
        }
    }
    const Pose tip = calib::expert_to_follower(g.calib, script.initial_hand) * g.calib.probe;
    CHECK(pose_distance(tip, g.start_tip) < 1e-9);

    const OperatorScript back = OperatorScript::from_json(script.to_json());
    REQUIRE(back.events.size() == script.events.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < back.events.size(); ++i) {
        CHECK(back.events[i].t == script.events[i].t);
        CHECK(back.events[i].type == script.events[i].type);
        worst = std::max(worst, pose_distance(back.events[i].pose, script.events[i].pose));
    }
    CHECK(worst < 1e-12);

    TaskParams only4;
    only4.steps = {4};
    const auto p4 = five_step_task(g, only4, 100.0, 1).planned_subtasks();
    REQUIRE(p4.size() == 1);
    CHECK(p4[0].id == 4);
}

TEST_CASE("script player pauses at a confirm and shifts its clock") {
    OperatorScript s;
    ScriptEvent a;
    a.t = 1000;
    ScriptEvent c = a;
    c.t = 2000;
    c.type = ScriptEvent::Type::Confirm;
    c.step = 1;
    ScriptEvent b = a;
    b.t = 3000;
    s.events = {a, c, b};
    ScriptPlayer p(s);
    p.begin(10000);
    CHECK(p.due(10500).empty());
    CHECK(p.due(12000).size() == 2);
    REQUIRE(p.waiting());
    CHECK(p.due(50000).empty());
    p.resume(20000);
    CHECK(p.script_time(20000) == 2000);
    CHECK(p.due(20999).empty());
    CHECK(p.due(21000).size() == 1);
    CHECK(p.finished());
}

TEST_CASE("report of an empty log is an error") {
    CHECK_THROWS_AS(make_report(RunLog{}), ConfigError);
}

TEST_CASE("perfect five-step run at zero delay") {
    const Scenario s = base();
    const RunLog log = run_scenario(s);
    CHECK(log.completed);
    CHECK_FALSE(log.truncated);
    CHECK(log.unconfirmed_steps == 0);
    const json rep = make_report(log);
    CHECK(report_ok(rep));
    REQUIRE(rep["subtasks"].size() == 5);
    for (const auto& st : rep["subtasks"]) {
        INFO("step " << st["id"]);
        CHECK(std::abs(st["time_s"].get<double>() - st["planned_s"].get<double>()) < 0.1);
        CHECK(st["confirmed"].get<bool>());
    }
    CHECK(rep["lateral_rmse_px"]["all"].get<double>() < 2.0);
    CHECK(log.stale_drops + log.corrupt_drops == 0);

    const auto dir = temp_dir("perfect");
    log.write(dir);
    CHECK(make_report(RunLog::load(dir)).dump() == rep.dump());
    CHECK(std::filesystem::file_size(dir / "state.csv") > 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("runs are deterministic and causal under jitter") {
    Scenario s = single_step(3);
    s.delay_ms = 150.0;
    s.jitter_ms = 20.0;
    s.seed = 11;
    const json a = make_report(run_scenario(s));
    const json b = make_report(run_scenario(s));
    CHECK(a.dump() == b.dump());
    CHECK(report_ok(a));
    CHECK(a["delay_ms"]["capture_after_cause"]["min"].get<double>() >= 130.0);
    CHECK(a["delay_ms"]["live_lag"]["min"].get<double>() >= 130.0);
    CHECK(a["delay_ms"]["live_lag"]["max"].get<double>() <= 180.0);

    s.seed = 12;
    CHECK(make_report(run_scenario(s)).dump() != a.dump());
}

TEST_CASE("preview stays fresh while live frames carry the delay") {
    Scenario s = single_step(2);
    s.delay_ms = 1000.0;
    const json rep = make_report(run_scenario(s));
    CHECK(report_ok(rep));
    CHECK(rep["delay_ms"]["preview_lag"]["max"].get<double>() < 2.0);
    CHECK(rep["delay_ms"]["live_lag"]["min"].get<double>() >= 1000.0);
    CHECK(rep["delay_ms"]["live_lag"]["max"].get<double>() <= 1020.0);
    CHECK(rep["delay_ms"]["rtt"]["mean"].get<double>() == doctest::Approx(2000.0).epsilon(0.015));
}

TEST_CASE("mmt and vhmmt drive the plant identically") {
    Scenario s = single_step(2);
    s.delay_ms = 200.0;
    s.task.confirm_views = false;
    s.mode = Mode::Mmt;
    const RunLog a = run_scenario(s);
    s.mode = Mode::Vhmmt;
    const RunLog b = run_scenario(s);
    REQUIRE(a.ticks.size() == b.ticks.size());
    for (std::size_t i = 0; i < a.ticks.size(); ++i) {
        REQUIRE(a.ticks[i].q == b.ticks[i].q);
    }
    CHECK_FALSE(a.preview_enabled);
    for (const FrameRecord& f : a.frames) {
        CHECK(f.source == usmodel::ImageSource::Live);
    }
}

TEST_CASE("constant 10 N keeps the eccentricity steady") {
    Scenario s = base();
    s.mode = Mode::Mmt;
    s.task.steps = {2, 4};
    s.task.force_n = {10.0};
    s.task.confirm_views = false;
    SimulationOptions opt;
    opt.keep_ticks = false;
    const json rep = make_report(run_scenario(s, opt));
    for (const char* k : {"step2", "step4"}) {
        INFO(k);
        REQUIRE(rep["eccentricity"].contains(k));
        CHECK(rep["eccentricity"][k]["std"].get<double>() < 0.03);
        CHECK(rep["eccentricity"][k]["mean"].get<double>() > 0.7);
    }
    CHECK(rep["force_n"]["follower"]["mean"].get<double>() == doctest::Approx(10.0).epsilon(0.15));
}

TEST_CASE("duration limit truncates the log") {
    Scenario s = base();
    s.duration_s = 2.0;
    const RunLog log = run_scenario(s);
    CHECK(log.truncated);
    CHECK_FALSE(log.completed);
    CHECK(log.end_us == 2'000'000);
}

TEST_CASE("interactive input reaches teleoperation and changes delay") {
    Scenario s = base();
    s.interactive = true;
    s.mode = Mode::Mmt;
    InputQueue q;
    SimulationOptions opt;
    opt.input = &q;
    Simulation sim(s, opt);
    q.push(input::Start{});
    for (int i = 0; i < 200; ++i) {
        if (i % 10 == 0) {
            q.push(input::Hand{sim.home_hand()});
        }
        sim.step();
    }
    CHECK(sim.session().mode() == session::Mode::Teleop);
    q.push(input::SetDelay{300.0});
    q.push(input::SetDelay{-1.0});
    sim.step();
    const RunLog& log = sim.log();
    bool set = false, rejected = false;
    for (const auto& e : log.events) {
        set = set || e.what == "delay 300 ms";
        rejected = rejected || e.what.rfind("rejected delay", 0) == 0;
    }
    CHECK(set);
    CHECK(rejected);
    CHECK_FALSE(log.commands.empty());
}

TEST_CASE("interactive scenario needs an input queue") {
    Scenario s = base();
    s.interactive = true;
    CHECK_THROWS_AS(Simulation{s}, ConfigError);
}

TEST_CASE("wall-clock run keeps the control tick") {
    Scenario s = base();
    s.mode = Mode::Mmt;
    s.duration_s = 0.5;
    Simulation sim(s);
    std::atomic<bool> stop{false};
    const RealtimeStats st = sim.run_realtime(stop);
    CHECK(st.ticks > 300);
    CHECK(sim.take_log().truncated);
}
