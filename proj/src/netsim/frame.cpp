#include "vhmmt/netsim/frame.hpp"

#include <zlib.h>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::netsim {

namespace {

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
    return static_cast<std::uint32_t>(
        crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

std::uint32_t peek_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
           static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

bool magic_at(std::span<const std::uint8_t> b, std::size_t at) {
    return b[at] == (kMagic & 0xff) && b[at + 1] == (kMagic >> 8);
}

} // namespace

std::string_view to_string(Kind k) {
    switch (k) {
        case Kind::PoseCmd: return "pose_cmd";
        case Kind::StateFeedback: return "state_feedback";
        case Kind::ForceFeedback: return "force_feedback";
        case Kind::UsFrame: return "us_frame";
        case Kind::Control: return "control";
        case Kind::PointCloudChunk: return "point_cloud_chunk";
    }
    return "unknown";
}

bool is_known_kind(std::uint8_t k) { return k < kKindCount; }

void encode_into(const Message& m, Bytes& out) {
    if (m.payload.size() > kMaxPayload) {
        throw ConfigError("payload of " + std::to_string(m.payload.size()) + " bytes exceeds 1 MiB");
    }
    const std::size_t start = out.size();
    out.reserve(start + kFrameOverhead + m.payload.size());
    ByteWriter w(out);
    w.put_uint<std::uint16_t>(kMagic);
    w.put_u8(static_cast<std::uint8_t>(m.kind));
    w.put_u8(m.flags);
    w.put_uint<std::uint32_t>(m.seq);
    w.put_uint<std::uint64_t>(static_cast<std::uint64_t>(m.timestamp_us));
    w.put_uint<std::uint32_t>(static_cast<std::uint32_t>(m.payload.size()));
    w.put_bytes(m.payload);
    w.put_uint<std::uint32_t>(crc_of(std::span(out).subspan(start)));
}

Bytes encode(const Message& m) {
    Bytes out;
    encode_into(m, out);
    return out;
}

Message decode(std::span<const std::uint8_t> frame) {
    if (frame.size() < kFrameOverhead) {
        throw TruncatedFrame("frame of " + std::to_string(frame.size()) + " bytes is shorter than the header");
    }
    if (!magic_at(frame, 0)) {
        throw CorruptFrame("bad magic");
    }
    const std::size_t len = peek_u32(frame, 16);
    if (len > kMaxPayload) {
        throw CorruptFrame("payload length " + std::to_string(len) + " exceeds 1 MiB");
    }
    if (frame.size() < kFrameOverhead + len) {
        throw TruncatedFrame("frame declares " + std::to_string(len) + " payload bytes");
    }
    if (frame.size() > kFrameOverhead + len) {
        throw CorruptFrame("trailing bytes after frame");
    }
    const std::size_t body = kHeaderSize + len;
    if (crc_of(frame.first(body)) != peek_u32(frame, body)) {
        throw CorruptFrame("CRC mismatch");
    }
    ByteReader r(frame);
    r.get_uint<std::uint16_t>();
    const std::uint8_t kind = r.get_u8();
    if (!is_known_kind(kind)) {
        throw UnknownKind("kind " + std::to_string(kind));
    }
    Message m;
    m.kind = static_cast<Kind>(kind);
    m.flags = r.get_u8();
    m.seq = r.get_uint<std::uint32_t>();
    m.timestamp_us = static_cast<TimeUs>(r.get_uint<std::uint64_t>());
    r.get_uint<std::uint32_t>();
    auto p = r.get_bytes(len);
    m.payload.assign(p.begin(), p.end());
    return m;
}

void FrameAssembler::feed(std::span<const std::uint8_t> bytes) {
    // Compact once the consumed prefix dominates.
    if (start_ > 0 && start_ * 2 > buf_.size()) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(start_));
        start_ = 0;
    }
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Bytes> FrameAssembler::next() {
    for (;;) {
        std::span<const std::uint8_t> avail = std::span(buf_).subspan(start_);
        if (avail.size() < 2) {
            return std::nullopt;
        }
        if (!magic_at(avail, 0)) {
            ++start_;
            ++skipped_;
            continue;
        }
        if (avail.size() < kHeaderSize) {
            return std::nullopt;
        }
        const std::size_t len = peek_u32(avail, 16);
        if (len > kMaxPayload) {
            ++start_;
            ++skipped_;
            continue;
        }
        if (avail.size() < kFrameOverhead + len) {
            return std::nullopt;
        }
        Bytes frame(avail.begin(), avail.begin() + static_cast<std::ptrdiff_t>(kFrameOverhead + len));
        start_ += frame.size();
        return frame;
    }
}

} // namespace vhmmt::netsim
