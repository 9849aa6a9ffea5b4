#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "vhmmt/core/clock.hpp"
#include "vhmmt/core/spsc_queue.hpp"
#include "vhmmt/netsim/delay.hpp"
#include "vhmmt/netsim/payloads.hpp"
#include "vhmmt/netsim/transport.hpp"
#include "vhmmt/netsim/validate.hpp"

namespace vhmmt::netsim {

struct EndpointConfig {
    DelayConfig outgoing;
    double incoming_delay_ms = 0.0;  ///< peer's one-way delay; sets the default max age
    double max_age_ms = -1.0;        ///< negative: use 2 * incoming delay + 100 ms
    double control_retry_ms = 200.0; ///< waited beyond the emulated round trip
    int control_retries = 3;
    std::uint64_t seed = 0;
};

struct ChannelStats {
    std::array<std::uint64_t, kKindCount> sent{};
    std::array<std::uint64_t, kKindCount> received{};
    std::uint64_t stale_drops = 0;
    std::uint64_t corrupt_drops = 0;
    std::uint64_t control_retries = 0;
    std::uint64_t control_failures = 0;
    std::uint64_t inbox_drops = 0;
    double last_rtt_ms = 0.0;   ///< most recent ping round trip, 0 before the first
    double elapsed_s = 0.0;

    double rate_hz(Kind k) const {
        return elapsed_s > 0 ? static_cast<double>(received[static_cast<std::size_t>(k)]) / elapsed_s : 0.0;
    }
    std::uint64_t drops() const { return stale_drops + corrupt_drops; }
};

/// One side of a delayed link.
///
/// Three contexts may use an endpoint concurrently: a single producer
/// (send, send_control, ping), the delay scheduler (service), and a single
/// consumer (receive, pop_rtt_sample). Outgoing messages wait in per-kind
/// delay lines; incoming ones are decoded, validated and, for Control,
/// answered (ping -> pong, reliable op -> ack) before delivery.
class Endpoint {
public:
    Endpoint(std::unique_ptr<Transport> transport, EndpointConfig cfg, const Clock& clock);

    // Producer context.
    void send(Kind kind, Bytes payload);
    /// Reliable ops are retried until acknowledged. Returns the control id.
    std::uint32_t send_control(ControlOp op, Bytes body = {});
    void ping();

    // Scheduler context.
    void service();

    // Consumer context.
    std::optional<Message> receive();
    std::optional<double> pop_rtt_sample();

    /// Takes effect on the next service(); queued messages keep their release time.
    void set_delay(double one_way_ms, double jitter_ms = 0.0);

    ChannelStats stats() const;
    const EndpointConfig& config() const { return cfg_; }

private:
    void enqueue_out(Message m, TimeUs now);
    void handle_control(const Message& m, TimeUs now);
    void retry_controls(TimeUs now);
    TimeUs retry_interval() const;

    std::unique_ptr<Transport> transport_;
    EndpointConfig cfg_;
    const Clock& clock_;
    TimeUs epoch_;

    SpscQueue<Message, 1024> outbox_;
    SpscQueue<Message, 1024> inbox_;
    SpscQueue<double, 256> rtt_;
    std::atomic<std::uint32_t> next_control_id_{1};

    // Scheduler-owned.
    DelayBank bank_;
    FrameAssembler assembler_;
    IncomingValidator validator_;
    std::array<std::uint32_t, kKindCount> next_seq_{};
    std::array<TimeUs, kKindCount> last_ts_;
    struct Pending {
        Message msg;
        TimeUs next_retry;
        int retries_left;
    };
    std::map<std::uint32_t, Pending> pending_;
    std::set<std::uint32_t> seen_controls_;
    std::deque<std::uint32_t> seen_order_;
    Bytes wire_;

    std::mutex delay_mu_;
    std::optional<DelayConfig> delay_update_;

    std::array<std::atomic<std::uint64_t>, kKindCount> sent_{};
    std::array<std::atomic<std::uint64_t>, kKindCount> received_{};
    std::atomic<std::uint64_t> corrupt_{0}, stale_{0}, retries_{0}, failures_{0};
    std::atomic<double> last_rtt_ms_{0.0};
};

/// Mean round trip of `samples` pings sent every `interval`. `pump` must move
/// time forward and service both endpoints (or just sleep when a scheduler
/// thread does that). Throws Timeout.
double measure_rtt(Endpoint& ep, const Clock& clock, const std::function<void()>& pump, int samples = 100,
                   TimeUs interval = 10 * kUsPerMs, TimeUs timeout = 10 * kUsPerSec);

/// Operator and follower endpoints over one transport with the same delay both ways.
struct Link {
    std::unique_ptr<Endpoint> operator_side;
    std::unique_ptr<Endpoint> follower_side;

    void service() {
        operator_side->service();
        follower_side->service();
    }
    void set_delay(double one_way_ms, double jitter_ms = 0.0) {
        operator_side->set_delay(one_way_ms, jitter_ms);
        follower_side->set_delay(one_way_ms, jitter_ms);
    }
};

Link make_link(const DelayConfig& delay, const std::string& transport, const Clock& clock, std::uint64_t seed);

/// Services endpoints on a fixed wall-clock tick from its own thread.
class ServiceThread {
public:
    ServiceThread(std::vector<Endpoint*> endpoints, std::chrono::microseconds tick = std::chrono::milliseconds(1));
    ~ServiceThread();
    ServiceThread(const ServiceThread&) = delete;
    ServiceThread& operator=(const ServiceThread&) = delete;
    void stop();

private:
    std::vector<Endpoint*> endpoints_;
    std::atomic<bool> running_{true};
    std::thread thread_;
};

} // namespace vhmmt::netsim
