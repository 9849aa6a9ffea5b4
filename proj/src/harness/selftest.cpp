#include "vhmmt/harness/selftest.hpp"

#include <cmath>
#include <sstream>

#include "vhmmt/harness/report.hpp"
#include "vhmmt/harness/simulation.hpp"

namespace vhmmt::harness {

namespace {

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

} // namespace

std::vector<SuiteResult> run_selftest(const Scenario& base, const std::filesystem::path& out, std::ostream& print) {
    std::vector<SuiteResult> results;
    auto record = [&](SuiteResult r) {
        print << (r.ok ? "PASS " : "FAIL ") << r.name << ": " << r.detail << std::endl;
        results.push_back(std::move(r));
    };

    std::string dump_1000;
    for (double d : {0.0, 500.0, 1000.0}) {
        Scenario s = base;
        s.mode = Mode::Vhmmt;
        s.delay_ms = d;
        s.jitter_ms = 0.0;
        s.name = base.name + "_vhmmt_" + std::to_string(static_cast<int>(d));
        const auto dir = out / s.name;
        RunLog log = run_scenario(s);
        log.write(dir);
        const auto rep = make_report(log);
        write_report(rep, dir);
        if (d == 1000.0) {
            dump_1000 = rep.dump();
        }

        SuiteResult inv{"invariants at " + fmt(d) + " ms", report_ok(rep) && log.completed, ""};
        for (const auto& i : rep["invariants"]) {
            if (!i["ok"].get<bool>()) {
                inv.detail += i["name"].get<std::string>() + " violated (" + i["detail"].get<std::string>() + "); ";
            }
        }
        if (!log.completed) {
            inv.detail += "run truncated; ";
        }
        if (inv.ok) {
            inv.detail = "all hold, " + std::to_string(rep["subtasks"].size()) + " subtasks";
        }
        record(inv);

        const auto& ll = rep["delay_ms"]["live_lag"];
        const auto& pl = rep["delay_ms"]["preview_lag"];
        SuiteResult lag{"lags at " + fmt(d) + " ms", false, "missing frames"};
        if (!ll.is_null() && !pl.is_null()) {
            const double lo = ll["min"].get<double>(), hi = ll["max"].get<double>();
            const double prev = pl["max"].get<double>();
            lag.ok = std::abs(lo - d) <= 20.0 && std::abs(hi - d) <= 20.0 && prev < 2.0 * log.control_period_ms;
            lag.detail = "live [" + fmt(lo) + ", " + fmt(hi) + "] ms, preview max " + fmt(prev) + " ms";
        }
        record(lag);

        const auto again = make_report(RunLog::load(dir));
        record({"report from disk at " + fmt(d) + " ms", again.dump() == rep.dump(),
                again.dump() == rep.dump() ? "identical" : "differs from the in-memory report"});
    }

    {
        Scenario s = base;
        s.mode = Mode::Vhmmt;
        s.delay_ms = 1000.0;
        s.jitter_ms = 0.0;
        s.name = base.name + "_vhmmt_1000";
        const auto rep = make_report(run_scenario(s));
        const bool same = rep.dump() == dump_1000;
        record({"determinism", same, same ? "second run gives a byte-identical report" : "reports differ"});
    }

    {
        Scenario s = base;
        s.delay_ms = 500.0;
        s.jitter_ms = 0.0;
        s.task.confirm_views = false;
        s.mode = Mode::Mmt;
        const RunLog a = run_scenario(s);
        s.mode = Mode::Vhmmt;
        const RunLog b = run_scenario(s);
        bool same = a.ticks.size() == b.ticks.size();
        for (std::size_t i = 0; same && i < a.ticks.size(); ++i) {
            same = a.ticks[i].q == b.ticks[i].q && a.ticks[i].qdot == b.ticks[i].qdot;
        }
        record({"mmt and vhmmt plant equal", same,
                std::to_string(a.ticks.size()) + " vs " + std::to_string(b.ticks.size()) + " ticks" +
                    (same ? ", identical" : ", trajectories differ")});
    }
    return results;
}

} // namespace vhmmt::harness
