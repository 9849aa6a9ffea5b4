#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "vhmmt/core/bytes.hpp"
#include "vhmmt/core/types.hpp"

namespace vhmmt::netsim {

enum class Kind : std::uint8_t {
    PoseCmd = 0,
    StateFeedback = 1,
    ForceFeedback = 2,
    UsFrame = 3,
    Control = 4,
    PointCloudChunk = 5,
};
inline constexpr std::size_t kKindCount = 6;

std::string_view to_string(Kind k);
bool is_known_kind(std::uint8_t k);

struct Message {
    Kind kind = Kind::Control;
    std::uint8_t flags = 0;
    std::uint32_t seq = 0;
    TimeUs timestamp_us = 0;   ///< sender's session clock
    Bytes payload;

    bool operator==(const Message&) const = default;
};

inline constexpr std::uint16_t kMagic = 0x5648;
inline constexpr std::size_t kHeaderSize = 20;   ///< magic through payload_len
inline constexpr std::size_t kFrameOverhead = kHeaderSize + 4;
inline constexpr std::size_t kMaxPayload = std::size_t{1} << 20;

/// Little-endian: magic u16 | kind u8 | flags u8 | seq u32 | timestamp u64 |
/// payload_len u32 | payload | crc32 u32 over everything before it.
Bytes encode(const Message& m);
void encode_into(const Message& m, Bytes& out);

/// Decodes exactly one frame spanning all of `frame`.
/// Throws TruncatedFrame, CorruptFrame (magic, length, CRC) or UnknownKind.
Message decode(std::span<const std::uint8_t> frame);

/// Splits a byte stream into frames. Bytes that cannot start a frame are
/// skipped one at a time until the magic lines up again.
class FrameAssembler {
public:
    void feed(std::span<const std::uint8_t> bytes);
    /// Next complete frame's bytes, or nullopt when more input is needed.
    std::optional<Bytes> next();
    std::uint64_t skipped_bytes() const { return skipped_; }
    std::size_t buffered() const { return buf_.size() - start_; }

private:
    Bytes buf_;
    std::size_t start_ = 0;
    std::uint64_t skipped_ = 0;
};

} // namespace vhmmt::netsim
