#include "vhmmt/gateway/protocol.hpp"

#include <cmath>

#include <boost/beast/core/detail/base64.hpp>

namespace vhmmt::gateway {

using nlohmann::json;

namespace {

json vec(const Vec3& v) {
    return json::array({v.x(), v.y(), v.z()});
}

ClientParse warn(std::string what) {
    return {std::nullopt, std::move(what)};
}

} // namespace

ClientParse parse_client(std::string_view text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        return warn("malformed JSON");
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        return warn("message without a type");
    }
    const std::string type = j["type"].get<std::string>();
    if (type == "pose") {
        const json& p = j.value("pose", json());
        if (!p.is_array() || p.size() != 7) {
            return warn("pose needs 7 numbers");
        }
        std::array<double, 7> a{};
        for (std::size_t i = 0; i < 7; ++i) {
            if (!p[i].is_number()) {
                return warn("pose needs 7 numbers");
            }
            a[i] = p[i].get<double>();
            if (!std::isfinite(a[i])) {
                return warn("pose is not finite");
            }
        }
        const double qn = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3]);
        if (std::abs(qn - 1.0) > 1e-3) {
            return warn("pose quaternion is not unit length");
        }
        return {harness::input::Hand{Pose::from_array(a)}, ""};
    }
    if (type == "button") {
        if (!j.contains("down") || !j["down"].is_boolean()) {
            return warn("button needs a boolean 'down'");
        }
        return {harness::input::Button{j["down"].get<bool>()}, ""};
    }
    if (type == "set_delay") {
        if (!j.contains("ms") || !j["ms"].is_number() || !(j["ms"].get<double>() >= 0.0)) {
            return warn("set_delay needs ms >= 0");
        }
        return {harness::input::SetDelay{j["ms"].get<double>()}, ""};
    }
    if (type == "set_mode") {
        if (!j.contains("mode") || !j["mode"].is_string()) {
            return warn("set_mode needs a mode");
        }
        try {
            return {harness::input::SetMode{harness::parse_mode(j["mode"].get<std::string>())}, ""};
        } catch (const std::exception& e) {
            return warn(e.what());
        }
    }
    if (type == "start") {
        return {harness::input::Start{}, ""};
    }
    if (type == "stop") {
        return {harness::input::Stop{}, ""};
    }
    return warn("unknown message type '" + type + "'");
}

std::string base64(const std::vector<std::uint8_t>& bytes) {
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(bytes.size()), '\0');
    out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

std::string frame_message(const harness::ImageOut& img) {
    return json{{"type", img.source == usmodel::ImageSource::Preview ? "preview_frame" : "live_frame"},
                {"w", img.width},
                {"h", img.height},
                {"t", img.t},
                {"data", base64(img.gray)}}
        .dump();
}

std::string state_message(const harness::StateSnapshot& s) {
    return json{{"type", "state"},
                {"t", s.t},
                {"follower_pose", s.follower.to_array()},
                {"force", vec(s.force)},
                {"haptic_force", vec(s.haptic_force)},
                {"fsm_mode", session::to_string(s.fsm)},
                {"align_error", s.align_error ? json(*s.align_error) : json(nullptr)},
                {"delay_ms", s.delay_ms},
                {"mode", harness::to_string(s.mode)}}
        .dump();
}

std::string stats_message(const harness::StatsOut& s) {
    return json{{"type", "stats"}, {"rtt_ms", s.rtt_ms}, {"drops", s.drops}}.dump();
}

std::string warning_message(std::string_view what) {
    return json{{"type", "warning"}, {"message", what}}.dump();
}

std::string hello_message(const HelloInfo& h) {
    return json{{"type", "hello"},
                {"home_hand", h.home_hand.to_array()},
                {"hand_eye", h.hand_eye.to_array()},
                {"probe", h.probe.to_array()},
                {"image", {{"w", h.image_px}, {"h", h.image_px}, {"fov_m", h.fov_m}}},
                {"delay_ms", h.delay_ms},
                {"mode", harness::to_string(h.mode)},
                {"control_hz", h.control_hz}}
        .dump();
}

} // namespace vhmmt::gateway
