#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "vhmmt/core/errors.hpp"
#include "vhmmt/netsim/endpoint.hpp"

using namespace vhmmt;
using namespace vhmmt::netsim;

namespace {

Message random_message(std::mt19937_64& rng, std::size_t max_payload) {
    std::uniform_int_distribution<int> kind(0, static_cast<int>(kKindCount) - 1), byte(0, 255);
    std::uniform_int_distribution<std::size_t> len(0, max_payload);
    Message m;
    m.kind = static_cast<Kind>(kind(rng));
    m.flags = static_cast<std::uint8_t>(byte(rng));
    m.seq = static_cast<std::uint32_t>(rng());
    m.timestamp_us = static_cast<TimeUs>(rng() >> 1);
    m.payload.resize(len(rng));
    for (auto& b : m.payload) {
        b = static_cast<std::uint8_t>(byte(rng));
    }
    return m;
}

Message pose_message(TimeUs t, const Pose& p = Pose::identity()) {
    return Message{Kind::PoseCmd, 0, 0, t, encode_pose(p)};
}

/// Drops every write whose index is listed; used to force control retries.
class LossyTransport final : public Transport {
public:
    LossyTransport(std::unique_ptr<Transport> inner, std::set<int> drop) : inner_(std::move(inner)), drop_(drop) {}
    void write(std::span<const std::uint8_t> bytes) override {
        if (!drop_.contains(writes_++)) {
            inner_->write(bytes);
        }
    }
    void read(Bytes& out) override { inner_->read(out); }

private:
    std::unique_ptr<Transport> inner_;
    std::set<int> drop_;
    int writes_ = 0;
};

/// Advances a simulated clock one tick at a time, servicing the link.
struct SimLink {
    SimClock clock;
    Link link;
    TimeUs tick;

    SimLink(double delay_ms, double jitter_ms = 0.0, TimeUs tick_us = kUsPerMs, const std::string& t = "loopback")
        : link(make_link(DelayConfig{delay_ms, jitter_ms, true}, t, clock, 7)), tick(tick_us) {}

    void step() {
        clock.advance(tick);
        link.service();
    }
};

} // namespace

TEST_CASE("frame layout") {
    Message empty{Kind::Control, 0, 1, 2, {}};
    CHECK(encode(empty).size() == 24);

    Message pose = pose_message(123456789, Pose::from_axis_angle(Vec3(1, 2, 3).normalized(), 0.7, Vec3(0.1, 0.2, 0.3)));
    pose.seq = 42;
    const Bytes b = encode(pose);
    CHECK(b.size() == 80);
    CHECK(b[0] == 0x48);
    CHECK(b[1] == 0x56);
    CHECK(b[2] == 0);
    CHECK(b[16] == 56);
    CHECK(decode(b) == pose);

    CHECK_THROWS_AS(encode(Message{Kind::UsFrame, 0, 0, 0, Bytes(kMaxPayload + 1)}), ConfigError);
    CHECK_NOTHROW(decode(encode(Message{Kind::UsFrame, 0, 0, 0, Bytes(kMaxPayload)})));
}

TEST_CASE("codec fuzz: round trip of 1e5 messages, random single-bit flips caught") {
    std::mt19937_64 rng(1);
    int caught = 0;
    for (int i = 0; i < 100000; ++i) {
        const Message m = random_message(rng, 96);
        Bytes b = encode(m);
        REQUIRE(decode(b) == m);
        const std::size_t bit = rng() % (b.size() * 8);
        b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        try {
            decode(b);
        } catch (const CorruptFrame&) {
            ++caught;
        } catch (const TruncatedFrame&) {
            ++caught;
        }
    }
    CHECK(caught == 100000);
}

TEST_CASE("codec: every single-bit flip of a frame is rejected") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 300; ++i) {
        const Message m = random_message(rng, 64);
        const Bytes clean = encode(m);
        for (std::size_t bit = 0; bit < clean.size() * 8; ++bit) {
            Bytes b = clean;
            b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
            bool rejected = false;
            try {
                decode(b);
            } catch (const CorruptFrame&) {
                rejected = true;
            } catch (const TruncatedFrame&) {
                rejected = true;
            }
            REQUIRE(rejected);
        }
    }
}

TEST_CASE("codec errors") {
    CHECK_THROWS_AS(decode(Bytes(10)), TruncatedFrame);
    Bytes b = encode(pose_message(5));
    b.pop_back();
    CHECK_THROWS_AS(decode(b), TruncatedFrame);
    b = encode(pose_message(5));
    b.push_back(0);
    CHECK_THROWS_AS(decode(b), CorruptFrame);

    // A well-formed frame of an unknown kind, CRC recomputed by hand.
    Message m{Kind::Control, 0, 0, 0, {}};
    Bytes u = encode(m);
    u[2] = 9;
    u.resize(20);
    const std::uint32_t crc = [&] {
        std::uint32_t c = 0xffffffffu;
        for (std::uint8_t byte : u) {
            c ^= byte;
            for (int k = 0; k < 8; ++k) {
                c = (c >> 1) ^ (0xedb88320u & (0u - (c & 1u)));
            }
        }
        return ~c;
    }();
    for (int k = 0; k < 4; ++k) {
        u.push_back(static_cast<std::uint8_t>(crc >> (8 * k)));
    }
    CHECK_THROWS_AS(decode(u), UnknownKind);
}

TEST_CASE("frame assembler splits arbitrary chunks and resyncs after garbage") {
    std::mt19937_64 rng(3);
    std::vector<Message> sent;
    Bytes stream = {0x01, 0x02, 0x48, 0x00};  // junk, including a half magic
    for (int i = 0; i < 200; ++i) {
        sent.push_back(random_message(rng, 300));
        encode_into(sent.back(), stream);
    }
    FrameAssembler fa;
    std::vector<Message> got;
    std::size_t at = 0;
    while (at < stream.size()) {
        const std::size_t n = std::min<std::size_t>(1 + rng() % 97, stream.size() - at);
        fa.feed(std::span(stream).subspan(at, n));
        at += n;
        while (auto f = fa.next()) {
            got.push_back(decode(*f));
        }
    }
    CHECK(got == sent);
    CHECK(fa.skipped_bytes() == 4);
}

TEST_CASE("payload codecs") {
    StatePayload s;
    s.q << 1, 2, 3, 4, 5, 6, 7;
    s.qdot.setConstant(-0.5);
    s.flange = Pose::from_translation(0.4, 0, 0.5);
    s.tip_force = Vec3(0, 0, 3);
    s.sim_time_us = 99;
    auto back = decode_state(encode_state(s));
    CHECK(back.q == s.q);
    CHECK(back.qdot == s.qdot);
    CHECK(back.flange.translation() == s.flange.translation());
    CHECK(back.tip_force == s.tip_force);
    CHECK(back.sim_time_us == 99);

    FramePayload f{4, 2, Pose::from_translation(1, 2, 3), {1, 2, 3, 4, 5, 6, 7, 8}};
    auto fb = decode_frame(encode_frame(f));
    CHECK(fb.gray == f.gray);
    CHECK(fb.width == 4);
    CHECK_THROWS_AS(encode_frame(FramePayload{4, 4, {}, {1}}), ConfigError);

    CloudChunk c{10, 100, {Vec3(0.5, 0.25, -1)}};
    auto cb = decode_cloud_chunk(encode_cloud_chunk(c));
    CHECK(cb.points[0] == Vec3(0.5, 0.25, -1));
    CHECK(cb.total == 100);

    auto ctl = decode_control(encode_control(ControlPayload{ControlOp::SetDelay, 77, {9}}));
    CHECK(ctl.op == ControlOp::SetDelay);
    CHECK(ctl.id == 77);
    CHECK(ctl.body == Bytes{9});
    CHECK(is_reliable(ControlOp::Start));
    CHECK_FALSE(is_reliable(ControlOp::Ping));
    CHECK(decode_force(encode_force(Vec3(1, 2, 3))) == Vec3(1, 2, 3));
}

TEST_CASE("delay lines: release timing on a 10 ms poll") {
    DelayConfig zero;
    DelayBank b0(zero, 1);
    b0.enqueue(pose_message(0), 0);
    CHECK(b0.release(0).size() == 1);  // due on the very next poll

    std::mt19937_64 rng(4);
    for (double delay : {0.0, 100.0, 500.0, 1000.0}) {
        DelayBank bank(DelayConfig{delay, 0.0, true}, 2);
        const TimeUs poll = 10 * kUsPerMs;
        std::vector<TimeUs> sent_at;
        std::vector<double> delays;
        for (TimeUs now = 0; now < 5 * kUsPerSec; now += poll) {
            // Sends land at arbitrary instants between polls.
            const TimeUs t = now + static_cast<TimeUs>(rng() % poll);
            if (now < 3 * kUsPerSec) {
                bank.enqueue(pose_message(t), t);
                sent_at.push_back(t);
            }
            for (const auto& m : bank.release(now + poll)) {
                delays.push_back(static_cast<double>(now + poll - m.timestamp_us) * 1e-3);
            }
        }
        REQUIRE(delays.size() == sent_at.size());
        double mean = 0;
        for (double d : delays) {
            CHECK(d >= delay);
            CHECK(d <= delay + 10.0);
            mean += d / static_cast<double>(delays.size());
        }
        CHECK(std::abs(mean - delay) <= 10.0);
    }
}

TEST_CASE("delay lines: jitter never reorders") {
    DelayBank bank(DelayConfig{1000.0, 50.0, true}, 9);
    std::vector<TimeUs> sent;
    std::vector<std::pair<TimeUs, TimeUs>> got;  // (sent, released)
    TimeUs t = 0;
    for (int i = 0; i < 1000; ++i) {
        t += 1000;
        Message m = pose_message(t);
        m.seq = static_cast<std::uint32_t>(i);
        bank.enqueue(m, t);
        sent.push_back(t);
        for (auto& r : bank.release(t)) {
            got.emplace_back(r.timestamp_us, t);
        }
    }
    for (TimeUs now = t; bank.pending() > 0; now += 1000) {
        for (auto& r : bank.release(now)) {
            got.emplace_back(r.timestamp_us, now);
        }
    }
    REQUIRE(got.size() == 1000);
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].first == sent[i]);
        const double d = static_cast<double>(got[i].second - got[i].first) * 1e-3;
        CHECK(d >= 950.0);
        CHECK(d <= 1060.0);
    }
    CHECK_THROWS_AS(DelayConfig({10.0, 20.0, true}).validate(), ConfigError);
    CHECK_THROWS_AS(DelayConfig({-1.0, 0.0, true}).validate(), ConfigError);
}

TEST_CASE("validate_incoming") {
    const TimeUs max_age = 200 * kUsPerMs;
    CHECK(validate_incoming(pose_message(1000), std::nullopt, 1000, max_age) == Verdict::Accept);
    CHECK(validate_incoming(pose_message(1000), TimeUs{2000}, 3000, max_age) == Verdict::DropStale);
    CHECK(validate_incoming(pose_message(1000), TimeUs{1000}, 3000, max_age) == Verdict::DropStale);
    CHECK(validate_incoming(pose_message(0), std::nullopt, 300 * kUsPerMs, max_age) == Verdict::DropStale);
    CHECK(validate_incoming(pose_message(0), std::nullopt, 300 * kUsPerMs, -1) == Verdict::Accept);

    Message nan = pose_message(5, Pose::from_translation(NAN, 0, 0));
    CHECK(validate_incoming(nan, std::nullopt, 5, max_age) == Verdict::DropCorrupt);
    Message squashed = pose_message(5);
    ByteWriter(squashed.payload).put_f64(0);  // wrong length
    CHECK(validate_incoming(squashed, std::nullopt, 5, max_age) == Verdict::DropCorrupt);
    Bytes bad_q;
    ByteWriter w(bad_q);
    for (double v : {1.01, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}) {
        w.put_f64(v);
    }
    CHECK(validate_incoming(Message{Kind::PoseCmd, 0, 0, 5, bad_q}, std::nullopt, 5, max_age) == Verdict::DropCorrupt);

    // Artificial reordering: what gets through is strictly increasing.
    std::mt19937_64 rng(5);
    std::vector<Message> msgs;
    for (int i = 0; i < 2000; ++i) {
        msgs.push_back(pose_message(1000 + i * 100));
    }
    for (std::size_t i = 0; i + 1 < msgs.size(); ++i) {
        if (rng() % 3 == 0) {
            std::swap(msgs[i], msgs[i + 1 + rng() % std::min<std::size_t>(5, msgs.size() - i - 1)]);
        }
    }
    IncomingValidator v(kUsPerSec);
    TimeUs last = -1;
    int accepted = 0;
    for (const auto& m : msgs) {
        if (v.check(m, 300000) == Verdict::Accept) {
            CHECK(m.timestamp_us > last);
            last = m.timestamp_us;
            ++accepted;
        }
    }
    CHECK(accepted > 500);
    CHECK(v.stale_drops() + accepted == msgs.size());
}

TEST_CASE("endpoint: delivery delay and stream separation over a socket pair") {
    SimLink s(100.0, 0.0, kUsPerMs, "socketpair");
    std::vector<double> pose_delay;
    int frames = 0;
    std::vector<std::uint8_t> gray(256 * 256, 128);
    for (int i = 0; i < 3000; ++i) {
        const TimeUs now = s.clock.now_us();
        if (i % 10 == 0) {
            s.link.operator_side->send(Kind::PoseCmd, encode_pose(Pose::identity()));
        }
        if (i % 33 == 0) {
            s.link.follower_side->send(Kind::UsFrame, encode_frame(FramePayload{256, 256, {}, gray}));
            s.link.operator_side->send(Kind::UsFrame, encode_frame(FramePayload{256, 256, {}, gray}));
        }
        s.step();
        while (auto m = s.link.follower_side->receive()) {
            if (m->kind == Kind::PoseCmd) {
                pose_delay.push_back(static_cast<double>(s.clock.now_us() - m->timestamp_us) * 1e-3);
            } else {
                ++frames;
            }
        }
        while (auto m = s.link.operator_side->receive()) {
            ++frames;
        }
        (void)now;
    }
    CHECK(pose_delay.size() >= 290);
    CHECK(frames >= 170);
    for (double d : pose_delay) {
        CHECK(d >= 100.0);
        CHECK(d <= 101.0);
    }
    const auto st = s.link.follower_side->stats();
    CHECK(st.drops() == 0);
    CHECK(st.rate_hz(Kind::PoseCmd) > 90.0);
}

TEST_CASE("endpoint: RTT is twice the one-way delay") {
    for (double delay : {0.0, 500.0, 1000.0}) {
        SimLink s(delay);
        const double rtt = measure_rtt(*s.link.operator_side, s.clock, [&] { s.step(); });
        MESSAGE("delay " << delay << " ms -> RTT " << rtt << " ms");
        CHECK(std::abs(rtt - 2 * delay) <= 30.0);
        CHECK(s.link.operator_side->stats().last_rtt_ms > 0.0);
    }
    // A peer that never answers.
    SimLink dead(0.0);
    CHECK_THROWS_AS(measure_rtt(*dead.link.operator_side, dead.clock,
                                [&] {
                                    dead.clock.advance(kUsPerMs);
                                    dead.link.operator_side->service();
                                }),
                    Timeout);
}

TEST_CASE("endpoint: zero-delay loopback RTT in real time") {
    SteadyClock clock;
    Link link = make_link(DelayConfig{}, "loopback", clock, 3);
    ServiceThread svc({link.operator_side.get(), link.follower_side.get()});
    const double rtt = measure_rtt(*link.operator_side, clock,
                                   [] { std::this_thread::sleep_for(std::chrono::microseconds(200)); });
    MESSAGE("loopback RTT " << rtt << " ms");
    CHECK(rtt < 5.0);
}

TEST_CASE("endpoint: reliable control survives loss and is delivered once") {
    SimClock clock;
    auto [a, b] = make_loopback_pair();
    EndpointConfig cfg;
    cfg.outgoing.one_way_delay_ms = 50.0;
    cfg.incoming_delay_ms = 50.0;
    // The first two writes carrying the Start command vanish.
    Endpoint op(std::make_unique<LossyTransport>(std::move(a), std::set<int>{0, 1}), cfg, clock);
    Endpoint fol(std::move(b), cfg, clock);
    const auto id = op.send_control(ControlOp::Start);
    int delivered = 0;
    for (int i = 0; i < 3000; ++i) {
        clock.advance(kUsPerMs);
        op.service();
        fol.service();
        while (auto m = fol.receive()) {
            auto c = decode_control(m->payload);
            CHECK(c.op == ControlOp::Start);
            CHECK(c.id == id);
            ++delivered;
        }
    }
    CHECK(delivered == 1);
    CHECK(op.stats().control_retries == 2);
    CHECK(op.stats().control_failures == 0);

    // Nobody listening: three retries, then one failure.
    SimClock c2;
    auto [x, y] = make_loopback_pair();
    Endpoint lonely(std::move(x), cfg, c2);
    lonely.send_control(ControlOp::Stop);
    for (int i = 0; i < 5000; ++i) {
        c2.advance(kUsPerMs);
        lonely.service();
    }
    CHECK(lonely.stats().control_retries == 3);
    CHECK(lonely.stats().control_failures == 1);
}

TEST_CASE("endpoint: stale and corrupt traffic is counted, not delivered") {
    SimClock clock;
    auto [a, b] = make_loopback_pair();
    EndpointConfig cfg;
    Endpoint rx(std::move(b), cfg, clock);
    clock.set(1000 * kUsPerMs);
    Bytes wire;
    encode_into(pose_message(999 * kUsPerMs), wire);
    encode_into(pose_message(998 * kUsPerMs), wire);            // out of order
    encode_into(pose_message(100 * kUsPerMs), wire);            // too old
    Bytes bad = encode(pose_message(999500));
    bad[30] ^= 0x10;                                           // CRC failure
    wire.insert(wire.end(), bad.begin(), bad.end());
    encode_into(pose_message(999900, Pose::from_translation(NAN, 0, 0)), wire);
    a->write(wire);
    rx.service();
    int got = 0;
    while (rx.receive()) {
        ++got;
    }
    CHECK(got == 1);
    const auto st = rx.stats();
    CHECK(st.stale_drops == 2);
    CHECK(st.corrupt_drops == 2);
}

TEST_CASE("endpoint: changing the delay at run time") {
    SimLink s(0.0);
    s.link.set_delay(200.0);
    s.step();
    s.link.operator_side->send(Kind::PoseCmd, encode_pose(Pose::identity()));
    const TimeUs sent = s.clock.now_us();
    TimeUs arrived = 0;
    for (int i = 0; i < 400 && arrived == 0; ++i) {
        s.step();
        if (s.link.follower_side->receive()) {
            arrived = s.clock.now_us();
        }
    }
    CHECK(arrived - sent == 201 * kUsPerMs);
    CHECK_THROWS_AS(s.link.set_delay(10.0, 20.0), ConfigError);
}
