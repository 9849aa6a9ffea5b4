#include "vhmmt/netsim/payloads.hpp"

#include "vhmmt/core/errors.hpp"

namespace vhmmt::netsim {

namespace {

void put_vec(ByteWriter& w, const auto& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        w.put_f64(v(i));
    }
}

template <typename V>
V get_vec(ByteReader& r) {
    V v;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = r.get_f64();
    }
    return v;
}

void expect_end(const ByteReader& r, const char* what) {
    if (r.remaining() != 0) {
        throw CorruptFrame(std::string(what) + " payload has trailing bytes");
    }
}

} // namespace

bool is_reliable(ControlOp op) { return op != ControlOp::Ping && op != ControlOp::Pong && op != ControlOp::Ack; }

Bytes encode_control(const ControlPayload& c) {
    Bytes out;
    ByteWriter w(out);
    w.put_u8(static_cast<std::uint8_t>(c.op));
    w.put_uint<std::uint32_t>(c.id);
    w.put_bytes(c.body);
    return out;
}

ControlPayload decode_control(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    ControlPayload c;
    c.op = static_cast<ControlOp>(r.get_u8());
    c.id = r.get_uint<std::uint32_t>();
    auto body = r.get_bytes(r.remaining());
    c.body.assign(body.begin(), body.end());
    return c;
}

Bytes encode_pose(const Pose& p) {
    Bytes out;
    p.serialize(out);
    return out;
}

std::array<double, 7> decode_pose_raw(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    std::array<double, 7> v{};
    for (double& x : v) {
        x = r.get_f64();
    }
    expect_end(r, "pose");
    return v;
}

Bytes encode_state(const StatePayload& s) {
    Bytes out;
    ByteWriter w(out);
    put_vec(w, s.q);
    put_vec(w, s.qdot);
    s.flange.serialize(out);
    put_vec(w, s.tip_force);
    w.put_uint<std::uint64_t>(static_cast<std::uint64_t>(s.sim_time_us));
    return out;
}

StatePayload decode_state(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    StatePayload s;
    s.q = get_vec<Vec7>(r);
    s.qdot = get_vec<Vec7>(r);
    s.flange = Pose::deserialize(r);
    s.tip_force = get_vec<Vec3>(r);
    s.sim_time_us = static_cast<TimeUs>(r.get_uint<std::uint64_t>());
    expect_end(r, "state");
    return s;
}

Bytes encode_force(const Vec3& f) {
    Bytes out;
    ByteWriter w(out);
    put_vec(w, f);
    return out;
}

Vec3 decode_force(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    Vec3 f = get_vec<Vec3>(r);
    expect_end(r, "force");
    return f;
}

Bytes encode_frame(const FramePayload& f) {
    if (f.gray.size() != static_cast<std::size_t>(f.width) * f.height) {
        throw ConfigError("frame pixel count does not match its size");
    }
    Bytes out;
    ByteWriter w(out);
    w.put_uint<std::uint16_t>(f.width);
    w.put_uint<std::uint16_t>(f.height);
    f.plane.serialize(out);
    w.put_bytes(f.gray);
    return out;
}

FramePayload decode_frame(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    FramePayload f;
    f.width = r.get_uint<std::uint16_t>();
    f.height = r.get_uint<std::uint16_t>();
    f.plane = Pose::deserialize(r);
    auto px = r.get_bytes(static_cast<std::size_t>(f.width) * f.height);
    f.gray.assign(px.begin(), px.end());
    expect_end(r, "frame");
    return f;
}

Bytes encode_cloud_chunk(const CloudChunk& c) {
    Bytes out;
    ByteWriter w(out);
    w.put_uint<std::uint32_t>(c.offset);
    w.put_uint<std::uint32_t>(c.total);
    w.put_uint<std::uint32_t>(static_cast<std::uint32_t>(c.points.size()));
    for (const Vec3& p : c.points) {
        for (int i = 0; i < 3; ++i) {
            w.put_f32(static_cast<float>(p(i)));
        }
    }
    return out;
}

CloudChunk decode_cloud_chunk(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    CloudChunk c;
    c.offset = r.get_uint<std::uint32_t>();
    c.total = r.get_uint<std::uint32_t>();
    const std::uint32_t n = r.get_uint<std::uint32_t>();
    if (r.remaining() != std::size_t{n} * 12) {
        throw CorruptFrame("cloud chunk point count does not match its size");
    }
    c.points.resize(n);
    for (auto& p : c.points) {
        for (int i = 0; i < 3; ++i) {
            p(i) = r.get_f32();
        }
    }
    return c;
}

} // namespace vhmmt::netsim
