#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "vhmmt/gateway/protocol.hpp"
#include "vhmmt/harness/simulation.hpp"

namespace vhmmt::gateway {

/// Bounded buffer that drops its oldest entry when full. Producers never wait
/// on consumers beyond a short critical section.
template <typename T>
class DropOldest {
public:
    explicit DropOldest(std::size_t depth) : depth_(depth) {}
    void push(T v) {
        std::lock_guard lock(mu_);
        if (items_.size() == depth_) {
            items_.pop_front();
            ++dropped_;
        }
        items_.push_back(std::move(v));
    }
    std::optional<T> pop() {
        std::lock_guard lock(mu_);
        if (items_.empty()) {
            return std::nullopt;
        }
        T v = std::move(items_.front());
        items_.pop_front();
        return v;
    }
    std::size_t size() const {
        std::lock_guard lock(mu_);
        return items_.size();
    }
    std::uint64_t dropped() const {
        std::lock_guard lock(mu_);
        return dropped_;
    }
    std::size_t depth() const { return depth_; }

private:
    std::size_t depth_;
    mutable std::mutex mu_;
    std::deque<T> items_;
    std::uint64_t dropped_ = 0;
};

/// Telemetry from the simulation thread, serialized and parked per channel.
class TelemetryBridge final : public harness::TelemetrySink {
public:
    explicit TelemetryBridge(std::size_t depth = 3)
        : state(depth), stats(depth), preview(depth), live(depth) {}
    void on_state(const harness::StateSnapshot& s) override { state.push(state_message(s)); }
    void on_stats(const harness::StatsOut& s) override { stats.push(stats_message(s)); }
    void on_image(const harness::ImageOut& img) override {
        (img.source == usmodel::ImageSource::Preview ? preview : live).push(frame_message(img));
    }
    /// Next message to send, live frames first.
    std::optional<std::string> next();
    void clear();

    DropOldest<std::string> state, stats, preview, live;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8080;  ///< 0 picks a free port
    std::filesystem::path web_root;  ///< static files for "/", empty serves a stub page
    std::size_t frame_depth = 3;
    std::size_t max_message_bytes = 64 * 1024;
    std::function<void(const std::string&)> log;  ///< warnings; stderr when empty
};

/// HTTP + WebSocket endpoint in front of an interactive simulation running
/// against the wall clock. One operator connection at a time at /ws; a second
/// upgrade is refused with 409. Static files are served from web_root.
class Server {
public:
    Server(harness::Scenario scenario, ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds (throws BindError), starts the I/O and simulation threads.
    void start();
    void stop();
    /// Blocks until stop() or the simulation ends.
    void wait();
    std::uint16_t port() const;
    const harness::Simulation& simulation() const;
    const TelemetryBridge& bridge() const;
    /// Control-tick timing; filled in once the simulation thread has ended.
    harness::RealtimeStats realtime_stats() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

/// Runs a server until SIGINT/SIGTERM. Returns the process exit code.
int serve(const harness::Scenario& scenario, const ServerOptions& options);

} // namespace vhmmt::gateway
