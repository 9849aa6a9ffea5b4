#pragma once

#include <cstdint>
#include <vector>

#include "vhmmt/core/pose.hpp"
#include "vhmmt/netsim/frame.hpp"

namespace vhmmt::netsim {

/// Control payload: op u8 | id u32 | body.
enum class ControlOp : std::uint8_t {
    Ping = 1,
    Pong = 2,
    Ack = 3,
    Start = 10,
    Stop = 11,
    ButtonDown = 12,
    ButtonUp = 13,
    SetDelay = 14,
    SetMode = 15,
};

/// Pings, pongs and acks are best effort; everything else is acknowledged.
bool is_reliable(ControlOp op);

struct ControlPayload {
    ControlOp op = ControlOp::Ping;
    std::uint32_t id = 0;
    Bytes body;
};

Bytes encode_control(const ControlPayload& c);
ControlPayload decode_control(std::span<const std::uint8_t> payload);

/// 7 f64: w, x, y, z, tx, ty, tz.
Bytes encode_pose(const Pose& p);
/// Raw values without normalization, so validation can see what was sent.
std::array<double, 7> decode_pose_raw(std::span<const std::uint8_t> payload);

struct StatePayload {
    Vec7 q = Vec7::Zero();
    Vec7 qdot = Vec7::Zero();
    Pose flange;
    Vec3 tip_force = Vec3::Zero();
    TimeUs sim_time_us = 0;
};
Bytes encode_state(const StatePayload& s);
StatePayload decode_state(std::span<const std::uint8_t> payload);

Bytes encode_force(const Vec3& f);
Vec3 decode_force(std::span<const std::uint8_t> payload);

/// Live ultrasound frame: w u16 | h u16 | plane pose 56 B | gray8 pixels.
struct FramePayload {
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    Pose plane;
    std::vector<std::uint8_t> gray;
};
Bytes encode_frame(const FramePayload& f);
FramePayload decode_frame(std::span<const std::uint8_t> payload);

/// Slice of a point cloud: offset u32 | total u32 | count u32 | float32 xyz.
struct CloudChunk {
    std::uint32_t offset = 0;
    std::uint32_t total = 0;
    std::vector<Vec3> points;
};
Bytes encode_cloud_chunk(const CloudChunk& c);
CloudChunk decode_cloud_chunk(std::span<const std::uint8_t> payload);

} // namespace vhmmt::netsim
