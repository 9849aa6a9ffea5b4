#include "vhmmt/netsim/endpoint.hpp"

#include <cmath>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::netsim {

namespace {

constexpr std::size_t kSeenWindow = 4096;

TimeUs max_age_us(const EndpointConfig& cfg) {
    if (cfg.max_age_ms >= 0) {
        return s_to_us(cfg.max_age_ms * 1e-3);
    }
    DelayConfig in;
    in.one_way_delay_ms = cfg.incoming_delay_ms;
    return s_to_us(in.default_max_age_ms() * 1e-3);
}

Bytes time_body(TimeUs t) {
    Bytes b;
    ByteWriter(b).put_uint<std::uint64_t>(static_cast<std::uint64_t>(t));
    return b;
}

} // namespace

Endpoint::Endpoint(std::unique_ptr<Transport> transport, EndpointConfig cfg, const Clock& clock)
    : transport_(std::move(transport)),
      cfg_(cfg),
      clock_(clock),
      epoch_(clock.now_us()),
      bank_(cfg.outgoing, cfg.seed),
      validator_(max_age_us(cfg), cfg.outgoing.drop_stale) {
    if (!transport_) {
        throw ConfigError("endpoint needs a transport");
    }
    if (cfg.control_retries < 0 || !(cfg.control_retry_ms > 0)) {
        throw ConfigError("control retry settings must be positive");
    }
    last_ts_.fill(std::numeric_limits<TimeUs>::min());
}

void Endpoint::send(Kind kind, Bytes payload) {
    Message m;
    m.kind = kind;
    m.timestamp_us = clock_.now_us();
    m.payload = std::move(payload);
    outbox_.push(std::move(m));
}

std::uint32_t Endpoint::send_control(ControlOp op, Bytes body) {
    const std::uint32_t id = next_control_id_.fetch_add(1);
    send(Kind::Control, encode_control(ControlPayload{op, id, std::move(body)}));
    return id;
}

void Endpoint::ping() { send_control(ControlOp::Ping, time_body(clock_.now_us())); }

void Endpoint::set_delay(double one_way_ms, double jitter_ms) {
    DelayConfig c = cfg_.outgoing;
    c.one_way_delay_ms = one_way_ms;
    c.jitter_ms = jitter_ms;
    c.validate();
    std::lock_guard lock(delay_mu_);
    delay_update_ = c;
}

TimeUs Endpoint::retry_interval() const {
    return s_to_us((cfg_.control_retry_ms + 2.0 * bank_.config().one_way_delay_ms + 2.0 * bank_.config().jitter_ms) *
                   1e-3);
}

void Endpoint::enqueue_out(Message m, TimeUs now) {
    const auto k = static_cast<std::size_t>(m.kind);
    m.seq = next_seq_[k]++;
    // Strictly increasing per kind so the receiver's order check never
    // rejects two messages stamped in the same microsecond.
    m.timestamp_us = std::max(m.timestamp_us, last_ts_[k] == std::numeric_limits<TimeUs>::min() ? m.timestamp_us
                                                                                                : last_ts_[k] + 1);
    last_ts_[k] = m.timestamp_us;
    if (m.kind == Kind::Control) {
        try {
            auto c = decode_control(m.payload);
            if (is_reliable(c.op) && !pending_.contains(c.id)) {
                pending_[c.id] = Pending{m, now + retry_interval(), cfg_.control_retries};
            }
        } catch (const Error&) {
            // Malformed control payloads still travel; the peer drops them.
        }
    }
    sent_[k].fetch_add(1, std::memory_order_relaxed);
    bank_.enqueue(std::move(m), now);
}

void Endpoint::retry_controls(TimeUs now) {
    for (auto it = pending_.begin(); it != pending_.end();) {
        Pending& p = it->second;
        if (now < p.next_retry) {
            ++it;
            continue;
        }
        if (p.retries_left == 0) {
            failures_.fetch_add(1, std::memory_order_relaxed);
            it = pending_.erase(it);
            continue;
        }
        --p.retries_left;
        p.next_retry = now + retry_interval();
        retries_.fetch_add(1, std::memory_order_relaxed);
        Message again = p.msg;
        again.timestamp_us = now;
        enqueue_out(std::move(again), now);
        ++it;
    }
}

void Endpoint::handle_control(const Message& m, TimeUs now) {
    ControlPayload c;
    try {
        c = decode_control(m.payload);
    } catch (const Error&) {
        corrupt_.fetch_add(1, std::memory_order_relaxed);
        return;
    }
    switch (c.op) {
        case ControlOp::Ping: {
            Message pong{Kind::Control, 0, 0, now, encode_control(ControlPayload{ControlOp::Pong, c.id, c.body})};
            enqueue_out(std::move(pong), now);
            return;
        }
        case ControlOp::Pong: {
            if (c.body.size() == 8) {
                ByteReader r(c.body);
                const auto sent = static_cast<TimeUs>(r.get_uint<std::uint64_t>());
                const double ms = static_cast<double>(now - sent) * 1e-3;
                last_rtt_ms_.store(ms, std::memory_order_relaxed);
                rtt_.push(ms);
            }
            return;
        }
        case ControlOp::Ack:
            pending_.erase(c.id);
            return;
        default:
            break;
    }
    Message ack{Kind::Control, 0, 0, now, encode_control(ControlPayload{ControlOp::Ack, c.id, {}})};
    enqueue_out(std::move(ack), now);
    if (seen_controls_.contains(c.id)) {
        return;  // a retry of something already delivered
    }
    seen_controls_.insert(c.id);
    seen_order_.push_back(c.id);
    if (seen_order_.size() > kSeenWindow) {
        seen_controls_.erase(seen_order_.front());
        seen_order_.pop_front();
    }
    inbox_.push(m);
}

void Endpoint::service() {
    const TimeUs now = clock_.now_us();
    {
        std::lock_guard lock(delay_mu_);
        if (delay_update_) {
            bank_.set_config(*delay_update_);
            // Links are symmetric, so the peer's delay changes the same way.
            if (cfg_.max_age_ms < 0) {
                EndpointConfig peer = cfg_;
                peer.incoming_delay_ms = delay_update_->one_way_delay_ms + delay_update_->jitter_ms;
                validator_.set_max_age(max_age_us(peer));
            }
            delay_update_.reset();
        }
    }
    while (auto m = outbox_.pop()) {
        enqueue_out(std::move(*m), now);
    }
    retry_controls(now);

    Bytes in;
    transport_->read(in);
    if (!in.empty()) {
        assembler_.feed(in);
    }
    while (auto frame = assembler_.next()) {
        Message m;
        try {
            m = decode(*frame);
        } catch (const Error&) {
            corrupt_.fetch_add(1, std::memory_order_relaxed);
            continue;
        }
        switch (validator_.check(m, now)) {
            case Verdict::DropStale: stale_.fetch_add(1, std::memory_order_relaxed); continue;
            case Verdict::DropCorrupt: corrupt_.fetch_add(1, std::memory_order_relaxed); continue;
            case Verdict::Accept: break;
        }
        received_[static_cast<std::size_t>(m.kind)].fetch_add(1, std::memory_order_relaxed);
        if (m.kind == Kind::Control) {
            handle_control(m, now);
        } else {
            inbox_.push(std::move(m));
        }
    }

    // Replies produced above leave in this same tick.
    wire_.clear();
    for (const Message& m : bank_.release(now)) {
        encode_into(m, wire_);
    }
    if (!wire_.empty()) {
        transport_->write(wire_);
    }
}

std::optional<Message> Endpoint::receive() { return inbox_.pop(); }

std::optional<double> Endpoint::pop_rtt_sample() { return rtt_.pop(); }

ChannelStats Endpoint::stats() const {
    ChannelStats s;
    for (std::size_t k = 0; k < kKindCount; ++k) {
        s.sent[k] = sent_[k].load(std::memory_order_relaxed);
        s.received[k] = received_[k].load(std::memory_order_relaxed);
    }
    s.stale_drops = stale_.load(std::memory_order_relaxed);
    s.corrupt_drops = corrupt_.load(std::memory_order_relaxed);
    s.control_retries = retries_.load(std::memory_order_relaxed);
    s.control_failures = failures_.load(std::memory_order_relaxed);
    s.inbox_drops = inbox_.dropped();
    s.last_rtt_ms = last_rtt_ms_.load(std::memory_order_relaxed);
    s.elapsed_s = us_to_s(clock_.now_us() - epoch_);
    return s;
}

double measure_rtt(Endpoint& ep, const Clock& clock, const std::function<void()>& pump, int samples, TimeUs interval,
                   TimeUs timeout) {
    if (samples <= 0) {
        throw ConfigError("need at least one RTT sample");
    }
    while (ep.pop_rtt_sample()) {
    }
    const TimeUs start = clock.now_us();
    TimeUs next_ping = start;
    int sent = 0, got = 0;
    double sum = 0.0;
    while (got < samples) {
        const TimeUs now = clock.now_us();
        if (now - start > timeout) {
            throw Timeout("RTT measurement got " + std::to_string(got) + " of " + std::to_string(samples) +
                          " samples");
        }
        if (sent < samples && now >= next_ping) {
            ep.ping();
            ++sent;
            next_ping = now + interval;
        }
        pump();
        while (auto s = ep.pop_rtt_sample()) {
            sum += *s;
            ++got;
        }
    }
    return sum / got;
}

Link make_link(const DelayConfig& delay, const std::string& transport, const Clock& clock, std::uint64_t seed) {
    auto [a, b] = make_transport_pair(transport);
    EndpointConfig ca;
    ca.outgoing = delay;
    ca.incoming_delay_ms = delay.one_way_delay_ms + delay.jitter_ms;
    ca.seed = seed;
    EndpointConfig cb = ca;
    cb.seed = seed ^ 0x9e3779b97f4a7c15ULL;
    return Link{std::make_unique<Endpoint>(std::move(a), ca, clock),
                std::make_unique<Endpoint>(std::move(b), cb, clock)};
}

ServiceThread::ServiceThread(std::vector<Endpoint*> endpoints, std::chrono::microseconds tick)
    : endpoints_(std::move(endpoints)) {
    thread_ = std::thread([this, tick] {
        auto next = std::chrono::steady_clock::now();
        while (running_.load(std::memory_order_acquire)) {
            for (Endpoint* e : endpoints_) {
                e->service();
            }
            next += tick;
            std::this_thread::sleep_until(next);
        }
    });
}

ServiceThread::~ServiceThread() { stop(); }

void ServiceThread::stop() {
    running_.store(false, std::memory_order_release);
    if (thread_.joinable()) {
        thread_.join();
    }
}

} // namespace vhmmt::netsim
