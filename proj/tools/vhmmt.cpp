#include <chrono>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "vhmmt/core/errors.hpp"
#include "vhmmt/harness/report.hpp"
#include "vhmmt/harness/selftest.hpp"
#include "vhmmt/gateway/server.hpp"
#include "vhmmt/harness/simulation.hpp"

using namespace vhmmt;
using namespace vhmmt::harness;

namespace {

struct Overrides {
    std::string scenario;
    std::optional<double> delay_ms;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;
};

Scenario load_scenario(const Overrides& o) {
    Scenario s;
    if (!o.scenario.empty()) {
        s = Scenario::load(o.scenario);
    } else {
        s.robot = default_robot_path();
    }
    if (o.delay_ms) {
        s.delay_ms = *o.delay_ms;
        s.jitter_ms = std::min(s.jitter_ms, s.delay_ms);
    }
    if (o.mode) {
        s.mode = parse_mode(*o.mode);
    }
    if (o.seed) {
        s.seed = *o.seed;
    }
    s.validate();
    return s;
}

void print_summary(const nlohmann::json& rep) {
    std::printf("%s: %s, %.1f s simulated\n", rep["scenario"]["name"].get<std::string>().c_str(),
                rep["completed"].get<bool>() ? "completed" : "truncated", rep["sim_time_s"].get<double>());
    for (const auto& s : rep["subtasks"]) {
        std::printf("  step %d %-34s %6.2f s%s\n", s["id"].get<int>(), s["name"].get<std::string>().c_str(),
                    s["time_s"].get<double>(), s["confirmed"].get<bool>() ? "" : "  (not confirmed)");
    }
    std::printf("  total %43.2f s\n", rep["total_time_s"].get<double>());
    for (const auto& [k, v] : rep["lateral_rmse_px"].items()) {
        std::printf("  lateral rmse %-8s %.2f px\n", k.c_str(), v.get<double>());
    }
    for (const auto& [k, v] : rep["eccentricity"].items()) {
        std::printf("  eccentricity %-8s %.3f +- %.3f (n=%zu)\n", k.c_str(), v["mean"].get<double>(),
                    v["std"].get<double>(), v["n"].get<std::size_t>());
    }
    const auto& ll = rep["delay_ms"]["live_lag"];
    if (!ll.is_null()) {
        std::printf("  live lag %.1f ms (max %.1f)\n", ll["mean"].get<double>(), ll["max"].get<double>());
    }
    const auto& pl = rep["delay_ms"]["preview_lag"];
    if (!pl.is_null()) {
        std::printf("  preview lag max %.1f ms\n", pl["max"].get<double>());
    }
    for (const auto& inv : rep["invariants"]) {
        std::printf("  [%s] %s: %s\n", inv["ok"].get<bool>() ? "ok" : "VIOLATED", inv["name"].get<std::string>().c_str(),
                    inv["detail"].get<std::string>().c_str());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Visual-haptic model-mediated teleoperation simulator"};
    app.require_subcommand(1);

    Overrides o;
    std::string out = "run_out";
    auto add_common = [&](CLI::App* c) {
        c->add_option("--scenario", o.scenario, "scenario JSON file")->check(CLI::ExistingFile);
        c->add_option("--delay-ms", o.delay_ms, "one-way delay override");
        c->add_option("--mode", o.mode, "mmt or vhmmt")->check(CLI::IsMember({"mmt", "vhmmt", "vh-mmt"}));
        c->add_option("--seed", o.seed, "seed override");
    };

    auto* run = app.add_subcommand("run", "run a scenario, write the log and report");
    add_common(run);
    run->add_option("--out", out, "output directory");
    bool realtime = false;
    run->add_flag("--realtime", realtime, "pace against the wall clock");

    auto* report = app.add_subcommand("report", "rebuild the report from a run directory");
    report->add_option("--out", out, "run directory")->check(CLI::ExistingDirectory);

    auto* selftest = app.add_subcommand("selftest", "run the invariant suites");
    add_common(selftest);
    selftest->add_option("--out", out, "directory for suite logs");

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string web_root;
    auto* serve = app.add_subcommand("serve", "start the gateway for the browser console");
    add_common(serve);
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--web-root", web_root, "static files served at /");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const Scenario s = load_scenario(o);
            const auto t0 = std::chrono::steady_clock::now();
            RunLog log;
            if (realtime) {
                Simulation sim(s);
                std::atomic<bool> stop{false};
                const RealtimeStats st = sim.run_realtime(stop);
                std::printf("control ticks %llu, late p99 %.3f ms, worst %.3f ms\n",
                            static_cast<unsigned long long>(st.ticks), st.p99_late_ms, st.worst_late_ms);
                log = sim.take_log();
            } else {
                log = run_scenario(s);
            }
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            log.write(out);
            const auto rep = make_report(log);
            write_report(rep, out);
            print_summary(rep);
            std::printf("wall %.2f s, output in %s\n", wall, out.c_str());
            return report_ok(rep) && !log.truncated ? 0 : 1;
        }
        if (report->parsed()) {
            const auto rep = make_report(RunLog::load(out));
            write_report(rep, out);
            print_summary(rep);
            return report_ok(rep) ? 0 : 1;
        }
        if (selftest->parsed()) {
            const Scenario s = load_scenario(o);
            const auto results = run_selftest(s, out, std::cout);
            return all_passed(results) ? 0 : 1;
        }
        if (serve->parsed()) {
            Scenario s = load_scenario(o);
            s.interactive = true;
            if (o.scenario.empty()) {
                s.duration_s = 24 * 3600.0;  // a session, not a run
            }
            gateway::ServerOptions opt;
            opt.host = host;
            opt.port = static_cast<std::uint16_t>(port);
            opt.web_root = web_root;
            return gateway::serve(s, opt);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
