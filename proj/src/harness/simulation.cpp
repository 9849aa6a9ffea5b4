#include "vhmmt/harness/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <pthread.h>

#include "vhmmt/core/errors.hpp"
#include "vhmmt/haptics/cloud_io.hpp"
#include "vhmmt/haptics/proxy.hpp"
#include "vhmmt/kinematics/kinematics.hpp"
#include "vhmmt/netsim/payloads.hpp"
#include "vhmmt/usmodel/imaging.hpp"

namespace vhmmt::harness {

namespace {

constexpr double kConfirmDistance = 0.0015;  // m, in the surface plane
constexpr double kConfirmHeading = 3.0 * M_PI / 180.0;
constexpr int kVisiblePx = 400;  // at 256 x 256
// Commands arrive at pose rate close to the last goal, so the warm start almost
// always wins; one random seed keeps a fallback without paying for eight.
constexpr int kIkRandomSeeds = 1;

double ms_between(TimeUs later, TimeUs earlier) {
    return static_cast<double>(later - earlier) / static_cast<double>(kUsPerMs);
}

TimeUs period_of(double hz) {
    return std::max<TimeUs>(1, s_to_us(1.0 / hz));
}

usmodel::ImagePlane image_plane(const Scenario& s, const Pose& tip) {
    return usmodel::plane_below_tip(tip, s.fov_m, s.fov_m, s.image_px, s.image_px);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
    // splitmix64 over (seed, purpose).
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (purpose + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

calib::CalibrationSet default_calibration() {
    calib::CalibrationSet c;
    // Camera beside the table, looking back at the robot.
    c.hand_eye = Pose::from_axis_angle(Vec3(0.3, 1.0, 0.2).normalized(), 2.3, Vec3(1.2, 0.4, 0.8));
    c.probe = Pose::from_translation(0.0, 0.0, 0.15);
    return c;
}

usmodel::UsVolume acquire_sweep(const Scenario& s, const usmodel::SyntheticPhantom& ph) {
    const double h = ph.half_extent.x() - 0.005;
    const double above = 0.005;
    const Pose start = view_tip(ph, -h, 0.0, -M_PI / 2, -above);
    const Vec3 end = view_tip(ph, h, 0.0, -M_PI / 2, -above).translation();
    const double width = 2.0 * ph.half_extent.y();
    const double height = ph.depth() + above;
    const int cols = static_cast<int>(std::lround(width / s.volume_spacing));
    const int rows = static_cast<int>(std::lround(height / s.volume_spacing));
    const auto planes = usmodel::linear_sweep(start, end, width, height, cols, rows, s.volume_spacing);
    return usmodel::generate_sweep(ph, planes, derive_seed(s.seed, 1));
}

void DelayStats::add(double v) {
    if (count == 0) {
        min = max = v;
    }
    min = std::min(min, v);
    max = std::max(max, v);
    sum_ += v;
    ++count;
    mean = sum_ / static_cast<double>(count);
}

nlohmann::json DelayStats::to_json() const {
    return {{"count", count}, {"mean", mean}, {"min", min}, {"max", max}};
}

DelayStats DelayStats::from_json(const nlohmann::json& j) {
    DelayStats d;
    d.count = j.at("count").get<std::uint64_t>();
    d.mean = j.at("mean").get<double>();
    d.min = j.at("min").get<double>();
    d.max = j.at("max").get<double>();
    d.sum_ = d.mean * static_cast<double>(d.count);
    return d;
}

Simulation::Simulation(Scenario scenario, SimulationOptions options)
    : scenario_(std::move(scenario)),
      options_(options),
      period_us_(period_of(scenario_.control_hz)),
      phantom_(usmodel::SyntheticPhantom::standard()),
      calib_(default_calibration()),
      model_(kinematics::RobotModel::load(scenario_.robot)),
      probe_(calib_.probe),
      session_(calib_, scenario_.align_threshold),
      last_preview_us_(std::numeric_limits<TimeUs>::min() / 2),
      link_(netsim::make_link({scenario_.delay_ms, scenario_.jitter_ms, true}, scenario_.transport, clock_,
                              derive_seed(scenario_.seed, 3))) {
    scenario_.validate();
    if (scenario_.interactive && options_.input == nullptr) {
        throw ConfigError("an interactive scenario needs an input queue");
    }

    log_.scenario = scenario_.to_json();
    log_.delay_ms = scenario_.delay_ms;
    log_.jitter_ms = scenario_.jitter_ms;
    log_.control_period_ms = 1e3 / scenario_.control_hz;
    log_.preview_enabled = scenario_.mode == Mode::Vhmmt;
    session_.set_warning_sink([this](std::string_view w) { event(clock_.now_us(), std::string(w)); });

    // Follower.
    control::ControllerConfig cfg;
    cfg.dt = scenario_.control_period_s();
    controller_ = std::make_unique<control::Controller>(model_, cfg, model_.home);
    command_stage_ = std::make_unique<control::CommandStage>(
        kinematics::IkSolver(model_, derive_seed(scenario_.seed, 4), kIkRandomSeeds), goals_);
    plant_.q = model_.home;
    env_.phantom = &phantom_;
    env_.probe = probe_;
    latest_.q = plant_.q;
    latest_.tip = kinematics::forward_kinematics(model_, plant_.q) * probe_;

    // Operator: local models.
    if (scenario_.mode == Mode::Vhmmt || scenario_.interactive) {
        volume_ = options_.volume ? *options_.volume : acquire_sweep(scenario_, phantom_);
    }
    cloud_ = std::make_unique<haptics::PointCloudOctree>(haptics::PointCloudOctree::build(
        haptics::sample_phantom_surface(phantom_, scenario_.cloud_spacing, scenario_.cloud_noise,
                                        derive_seed(scenario_.seed, 2))));

    if (!scenario_.interactive) {
        OperatorScript script;
        if (!scenario_.script_file.empty()) {
            script = OperatorScript::load(scenario_.script_file);
        } else {
            TaskGeometry g{phantom_, calib_, latest_.tip, scenario_.pixel_m()};
            script = five_step_task(g, scenario_.task, scenario_.pose_hz, derive_seed(scenario_.seed, 5));
        }
        log_.planned = script.planned_subtasks();
        player_.emplace(std::move(script));
    }
    event(0, "mode " + std::string(to_string(scenario_.mode)));
}

Simulation::~Simulation() = default;

const OperatorScript* Simulation::script() const {
    return player_ ? &player_->script() : nullptr;
}

Pose Simulation::home_hand() const {
    const Pose tip = kinematics::forward_kinematics(model_, model_.home) * probe_;
    return calib_.hand_eye.inverse() * tip;
}

void Simulation::event(TimeUs t, std::string what, int step) {
    log_.events.push_back({t, std::move(what), step});
}

void Simulation::step() {
    const TimeUs now = clock_.now_us();
    operator_context(now);
    link_.service();
    follower_command_context(now);
    control_context();
    state_out_context(now);
    clock_.advance(period_us_);
    if (now + period_us_ >= s_to_us(scenario_.duration_s) && !done()) {
        log_.truncated = true;
        event(now, "duration limit reached");
        done_.store(true, std::memory_order_release);
    }
}

RunLog Simulation::run() {
    while (!done()) {
        step();
    }
    return take_log();
}

RunLog Simulation::take_log() {
    log_.end_us = clock_.now_us();
    const auto op = link_.operator_side->stats();
    const auto fo = link_.follower_side->stats();
    log_.stale_drops = op.stale_drops + fo.stale_drops;
    log_.corrupt_drops = op.corrupt_drops + fo.corrupt_drops;
    log_.control_failures = op.control_failures + fo.control_failures;
    log_.unreachable_poses = command_stage_->unreachable();
    log_.rejected_goals = controller_->rejected_goals();
    log_.ignored_events = session_.ignored_events();
    return std::move(log_);
}

void Simulation::operator_context(TimeUs now) {
    if (options_.input != nullptr) {
        while (auto in = options_.input->pop()) {
            handle_input(*in, now);
        }
    }

    auto& ep = *link_.operator_side;
    while (auto m = ep.receive()) {
        if (m->kind == netsim::Kind::StateFeedback) {
            log_.state_delay_ms.add(ms_between(now, m->timestamp_us));
            last_state_ = netsim::decode_state(m->payload);
            apply(session_.handle_event(session::event::FollowerUpdate{last_state_->flange}), now);
        } else if (m->kind == netsim::Kind::UsFrame) {
            log_.frame_delay_ms.add(ms_between(now, m->timestamp_us));
            netsim::FramePayload f = netsim::decode_frame(m->payload);
            for (std::size_t k = live_seen_; k < inflight_.size(); ++k) {
                FrameRecord& r = log_.frames[inflight_[k]];
                if (r.capture_us == m->timestamp_us) {
                    r.display_us = now;
                    live_seen_ = k + 1;
                    break;
                }
            }
            usmodel::UsImage img;
            img.plane = usmodel::ImagePlane{f.plane, scenario_.fov_m, scenario_.fov_m, f.width, f.height};
            img.pixels.resize(f.gray.size());
            std::transform(f.gray.begin(), f.gray.end(), img.pixels.begin(),
                           [](std::uint8_t v) { return v / 255.0; });
            img.timestamp_us = m->timestamp_us;
            if (!volume_.empty() && log_.preview_enabled && scenario_.integrate_alpha > 0.0) {
                usmodel::integrate_frame(volume_, img, scenario_.integrate_alpha);
            }
            if (player_ && player_->waiting()) {
                check_confirm(usmodel::tip_of_plane(img.plane), vessel_visible(img), now);
            }
            if (options_.telemetry != nullptr) {
                options_.telemetry->on_image({usmodel::ImageSource::Live, m->timestamp_us, f.width, f.height, f.gray});
            }
        }
    }
    while (auto r = ep.pop_rtt_sample()) {
        log_.rtt_ms.add(*r);
    }

    if (player_) {
        if (now == 0) {
            apply(session_.handle_event(session::event::Start{}), now);
            event(now, "start");
        }
        if (!player_->started() && session_.mode() == session::Mode::Teleop) {
            const Pose& off = session_.calibration().offset;
            event(now, "aligned, offset " + std::to_string(off.translation().norm() * 1e3) + " mm " +
                           std::to_string(angular_error(off, Pose()) * 180.0 / M_PI) + " deg");
            player_->begin(now);
            event(now, "script start");
        }
        if (!player_->started()) {
            if (now >= next_hand_us_) {
                on_hand(player_->script().initial_hand, now);
            }
        } else {
            for (const ScriptEvent& e : player_->due(now)) {
                handle_script_event(e, now);
            }
            // The device keeps streaming the resting hand while the operator looks.
            if (player_->waiting() && hand_ && now >= next_hand_us_) {
                on_hand(*hand_, now);
            }
            if (player_->waiting() && now - player_->waiting_since() >= s_to_us(scenario_.task.confirm_timeout_s)) {
                ++log_.unconfirmed_steps;
                event(now, "confirm timeout", player_->waiting()->step);
                player_->resume(now);
            }
            if (player_->finished() && script_done_us_ < 0) {
                script_done_us_ = now;
                event(now, "script end");
            }
        }
        // Let frames still in flight land before closing the log.
        const TimeUs drain = 2 * s_to_us((scenario_.delay_ms + scenario_.jitter_ms) * 1e-3) + s_to_us(0.2);
        if (script_done_us_ >= 0 && now >= script_done_us_ + drain && !done()) {
            log_.completed = true;
            done_.store(true, std::memory_order_release);
        }
    }

    update_haptics(now);

    if (now >= next_ping_us_) {
        ep.ping();
        next_ping_us_ = now + period_of(scenario_.ping_hz);
    }
    if (options_.telemetry != nullptr && now >= next_telemetry_us_) {
        publish_telemetry(now);
        next_telemetry_us_ = now + period_of(options_.telemetry_hz);
    }
}

void Simulation::handle_script_event(const ScriptEvent& e, TimeUs now) {
    using T = ScriptEvent::Type;
    switch (e.type) {
        case T::Hand: on_hand(e.pose, now); break;
        case T::ButtonDown:
            event(now, "button down");
            apply(session_.handle_event(session::event::ButtonDown{}), now);
            break;
        case T::ButtonUp:
            event(now, "button up");
            apply(session_.handle_event(session::event::ButtonUp{}), now);
            break;
        case T::StepBegin:
            current_step_ = e.step;
            event(now, "step begin", e.step);
            break;
        case T::StepEnd:
            event(now, "step end", e.step);
            current_step_ = 0;
            break;
        case T::TrackBegin: event(now, "track begin", e.step); break;
        case T::TrackEnd: event(now, "track end", e.step); break;
        case T::Confirm: event(now, "confirm wait", e.step); break;
    }
}

bool Simulation::vessel_visible(const usmodel::UsImage& img) const {
    // Dark pixels in the central box; speckle alone gives a few dozen.
    const int c = img.plane.cols, r = img.plane.rows;
    const double thr = phantom_.intensity.vessel_threshold();
    int dark = 0;
    for (int row = r / 10; row < r - r / 10; ++row) {
        for (int col = c / 4; col < c - c / 4; ++col) {
            dark += img.at(col, row) < thr ? 1 : 0;
        }
    }
    return dark >= kVisiblePx * r * c / (256 * 256);
}

void Simulation::check_confirm(const Pose& plane_tip, bool vessel_seen, TimeUs now) {
    if (!player_ || !player_->waiting() || !vessel_seen) {
        return;
    }
    const Pose& want = player_->waiting()->pose;
    const Vec3 a = phantom_.to_local(plane_tip.translation());
    const Vec3 b = phantom_.to_local(want.translation());
    const Vec3 xa = phantom_.pose.inverse().rotate(plane_tip.rotate(Vec3::UnitX()));
    const Vec3 xb = phantom_.pose.inverse().rotate(want.rotate(Vec3::UnitX()));
    const double heading = std::abs(std::remainder(std::atan2(xa.y(), xa.x()) - std::atan2(xb.y(), xb.x()), 2 * M_PI));
    if ((a - b).head<2>().norm() < kConfirmDistance && heading < kConfirmHeading) {
        event(now, "confirmed", player_->waiting()->step);
        player_->resume(now);
    }
}

void Simulation::handle_input(const OperatorInput& in, TimeUs now) {
    std::visit(
        [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, input::Hand>) {
                on_hand(v.pose, now);
            } else if constexpr (std::is_same_v<V, input::Button>) {
                event(now, v.down ? "button down" : "button up");
                if (v.down) {
                    apply(session_.handle_event(session::event::ButtonDown{}), now);
                } else {
                    apply(session_.handle_event(session::event::ButtonUp{}), now);
                }
            } else if constexpr (std::is_same_v<V, input::Start>) {
                event(now, "start");
                apply(session_.handle_event(session::event::Start{}), now);
            } else if constexpr (std::is_same_v<V, input::Stop>) {
                event(now, "stop");
                apply(session_.handle_event(session::event::Stop{}), now);
            } else if constexpr (std::is_same_v<V, input::SetDelay>) {
                set_delay(v.ms, now);
            } else if constexpr (std::is_same_v<V, input::SetMode>) {
                const bool preview = v.mode == Mode::Vhmmt;
                if (preview && volume_.empty()) {
                    volume_ = options_.volume ? *options_.volume : acquire_sweep(scenario_, phantom_);
                }
                log_.preview_enabled = preview;
                event(now, "mode " + std::string(to_string(v.mode)));
            }
        },
        in);
}

void Simulation::set_delay(double ms, TimeUs now) {
    if (!(ms >= 0.0) || ms < scenario_.jitter_ms) {
        event(now, "rejected delay " + std::to_string(ms));
        return;
    }
    link_.set_delay(ms, scenario_.jitter_ms);
    log_.delay_ms = std::min(log_.delay_ms, ms);
    scenario_.delay_ms = ms;
    event(now, "delay " + std::to_string(static_cast<long long>(std::lround(ms))) + " ms");
}

void Simulation::on_hand(const Pose& hand, TimeUs now) {
    hand_ = hand;
    next_hand_us_ = now + period_of(scenario_.pose_hz);
    apply(session_.handle_event(session::event::PoseUpdate{hand}), now);
}

void Simulation::apply(const session::Outcome& out, TimeUs now) {
    if (!out.command) {
        return;
    }
    link_.operator_side->send(netsim::Kind::PoseCmd, netsim::encode_pose(*out.command));
    log_.commands.push_back({now, *out.command, haptic_force_, proxy_.in_contact});
    preview_tip_ = *out.command * probe_;
    preview_cause_us_ = now;
    if (log_.preview_enabled && now - last_preview_us_ >= period_of(scenario_.preview_hz)) {
        render_preview(now);
    }
}

void Simulation::render_preview(TimeUs now) {
    const usmodel::ImagePlane plane = image_plane(scenario_, *preview_tip_);
    usmodel::UsImage img = usmodel::reslice(volume_, plane);
    FrameRecord r;
    r.source = usmodel::ImageSource::Preview;
    r.capture_us = now;
    r.cause_us = preview_cause_us_;
    r.display_us = now;
    r.plane = plane.pose;
    r.fit = metrics::segment_vessel(img, phantom_.intensity.vessel_threshold());
    log_.frames.push_back(r);
    last_preview_us_ = now;
    if (player_ && player_->waiting()) {
        check_confirm(*preview_tip_, r.fit.valid || vessel_visible(img), now);
    }
    if (options_.telemetry != nullptr) {
        options_.telemetry->on_image({usmodel::ImageSource::Preview, now, scenario_.image_px, scenario_.image_px,
                                      usmodel::to_gray8(img, scenario_.image_px, scenario_.image_px)});
    }
}

void Simulation::update_haptics(TimeUs now) {
    (void)now;
    std::optional<Vec3> hip;
    if (session_.last_commanded() && session_.mode() != session::Mode::Aligning) {
        hip = (*session_.last_commanded() * probe_).translation();
    } else if (hand_) {
        hip = (calib::expert_to_follower(session_.calibration(), *hand_) * probe_).translation();
    }
    if (!hip) {
        return;
    }
    const Vec3 v = last_hip_ ? Vec3((*hip - *last_hip_) / scenario_.control_period_s()) : Vec3::Zero();
    last_hip_ = hip;
    proxy_ = haptics::update_proxy(proxy_, *hip, *cloud_, scenario_.haptic);
    haptic_force_ = haptics::haptic_force(*hip, v, proxy_, scenario_.haptic);
}

void Simulation::publish_telemetry(TimeUs now) {
    StateSnapshot s;
    s.t = now;
    if (last_state_) {
        s.follower = last_state_->flange;
        s.force = last_state_->tip_force;
    }
    s.haptic_force = haptic_force_;
    s.fsm = session_.mode();
    s.align_error = session_.last_align_error();
    s.delay_ms = scenario_.delay_ms;
    s.mode = log_.preview_enabled ? Mode::Vhmmt : Mode::Mmt;
    options_.telemetry->on_state(s);
    const auto st = link_.operator_side->stats();
    options_.telemetry->on_stats({st.last_rtt_ms, st.drops() + link_.follower_side->stats().drops()});
}

void Simulation::follower_command_context(TimeUs now) {
    while (auto t = ticks_out_.pop()) {
        latest_ = *t;
    }
    while (auto m = link_.follower_side->receive()) {
        if (m->kind != netsim::Kind::PoseCmd) {
            continue;
        }
        log_.pose_delay_ms.add(ms_between(now, m->timestamp_us));
        const Pose target = Pose::from_array(netsim::decode_pose_raw(m->payload));
        if (command_stage_->on_pose(target, latest_.q)) {
            last_cause_us_ = m->timestamp_us;
        }
    }
}

void Simulation::control_context() {
    control::TickRecord rec = controller_->tick(goals_, plant_, env_);
    if (options_.keep_ticks) {
        log_.ticks.push_back(rec);
    }
    // Tip after the step, so state-out reports where the probe is now.
    rec.tip = kinematics::forward_kinematics(model_, plant_.q) * probe_;
    ticks_out_.push(rec);
}

void Simulation::state_out_context(TimeUs now) {
    while (auto t = ticks_out_.pop()) {
        latest_ = *t;
    }
    auto& ep = *link_.follower_side;
    if (now >= next_state_us_) {
        netsim::StatePayload s;
        s.q = latest_.q;
        s.qdot = latest_.qdot;
        s.flange = latest_.tip * probe_.inverse();
        s.tip_force = latest_.contact_force;
        s.sim_time_us = now;
        ep.send(netsim::Kind::StateFeedback, netsim::encode_state(s));
        next_state_us_ = now + period_of(scenario_.state_hz);
    }
    if (now >= next_live_us_) {
        const usmodel::ImagePlane plane = image_plane(scenario_, latest_.tip);
        const double force = latest_.contact_force.norm();
        const usmodel::UsImage img =
            usmodel::live_image(phantom_, plane, force, derive_seed(scenario_.seed, 6) + live_index_++);
        FrameRecord r;
        r.source = usmodel::ImageSource::Live;
        r.capture_us = now;
        r.cause_us = last_cause_us_;
        r.plane = plane.pose;
        r.force_n = force;
        r.fit = metrics::segment_vessel(img, phantom_.intensity.vessel_threshold());
        inflight_.push_back(log_.frames.size());
        log_.frames.push_back(r);
        netsim::FramePayload f;
        f.width = static_cast<std::uint16_t>(scenario_.image_px);
        f.height = static_cast<std::uint16_t>(scenario_.image_px);
        f.plane = plane.pose;
        f.gray = usmodel::to_gray8(img, scenario_.image_px, scenario_.image_px);
        ep.send(netsim::Kind::UsFrame, netsim::encode_frame(f));
        next_live_us_ = now + period_of(scenario_.live_hz);
    }
}

namespace {

// The control thread sleeps for most of each period, so a fixed priority only
// shortens its wake-up latency. Without the privilege it runs as a normal thread.
bool raise_priority() {
    sched_param p{};
    p.sched_priority = 20;
    return pthread_setschedparam(pthread_self(), SCHED_FIFO, &p) == 0;
}

} // namespace

RealtimeStats Simulation::run_realtime(const std::atomic<bool>& stop) {
    using namespace std::chrono;
    const auto period = microseconds(period_us_);
    const auto epoch = steady_clock::now();
    std::vector<double> late;
    late.reserve(1 << 16);

    bool elevated = false;
    std::thread control([&] {
        elevated = raise_priority();
        auto due = epoch;
        while (!stop.load(std::memory_order_acquire) && !done()) {
            due += period;
            std::this_thread::sleep_until(due);
            const double l = duration<double, std::milli>(steady_clock::now() - due).count();
            if (late.size() < late.capacity()) {
                late.push_back(l);
            }
            control_context();
        }
    });

    auto due = epoch;
    while (!stop.load(std::memory_order_acquire) && !done()) {
        due += period;
        std::this_thread::sleep_until(due);
        const TimeUs now = duration_cast<microseconds>(steady_clock::now() - epoch).count();
        clock_.set(now);
        operator_context(now);
        link_.service();
        follower_command_context(now);
        state_out_context(now);
        if (now >= s_to_us(scenario_.duration_s) && !done()) {
            log_.truncated = true;
            done_.store(true, std::memory_order_release);
        }
    }
    done_.store(true, std::memory_order_release);
    control.join();

    RealtimeStats st;
    st.fixed_priority = elevated;
    st.ticks = late.size();
    if (!late.empty()) {
        std::sort(late.begin(), late.end());
        st.worst_late_ms = late.back();
        st.p99_late_ms = late[static_cast<std::size_t>(0.99 * static_cast<double>(late.size() - 1))];
    }
    return st;
}

RunLog run_scenario(const Scenario& scenario, const SimulationOptions& options) {
    Simulation sim(scenario, options);
    return sim.run();
}

} // namespace vhmmt::harness
