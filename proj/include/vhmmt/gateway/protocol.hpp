#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vhmmt/harness/simulation.hpp"

namespace vhmmt::gateway {

/// Result of decoding one client text message: an input for the simulation,
/// or a warning when the message is malformed or of an unknown type.
struct ClientParse {
    std::optional<harness::OperatorInput> input;
    std::string warning;
};

/// Client messages:
///   {type:"pose", pose:[w,x,y,z,tx,ty,tz], t}   hand pose in the camera frame
///   {type:"button", down}  {type:"set_delay", ms}  {type:"set_mode", mode}
///   {type:"start"}  {type:"stop"}
ClientParse parse_client(std::string_view text);

std::string base64(const std::vector<std::uint8_t>& bytes);

/// Server messages (serialized JSON text).
std::string frame_message(const harness::ImageOut& img);
std::string state_message(const harness::StateSnapshot& s);
std::string stats_message(const harness::StatsOut& s);
std::string warning_message(std::string_view what);

/// Sent once per connection: what the console needs to map its input onto
/// hand poses (home hand, calibration) and to label its displays.
struct HelloInfo {
    Pose home_hand;
    Pose hand_eye;
    Pose probe;
    int image_px = 256;
    double fov_m = 0.06;
    double delay_ms = 0.0;
    harness::Mode mode = harness::Mode::Vhmmt;
    double control_hz = 1000.0;
};
std::string hello_message(const HelloInfo& h);

} // namespace vhmmt::gateway
