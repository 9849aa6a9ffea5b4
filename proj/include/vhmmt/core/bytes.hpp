#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "vhmmt/core/errors.hpp"

namespace vhmmt {

using Bytes = std::vector<std::uint8_t>;

/// Appends little-endian encodings to a growing byte buffer.
class ByteWriter {
public:
    explicit ByteWriter(Bytes& out) : out_(out) {}

    template <typename T>
    void put_uint(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            out_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
        }
    }
    void put_u8(std::uint8_t v) { out_.push_back(v); }
    void put_f64(double v) { put_uint(std::bit_cast<std::uint64_t>(v)); }
    void put_f32(float v) { put_uint(std::bit_cast<std::uint32_t>(v)); }
    void put_bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

private:
    Bytes& out_;
};

/// Reads little-endian values from a byte span; throws TruncatedFrame when short.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    template <typename T>
    T get_uint() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        }
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    std::uint8_t get_u8() { return get_uint<std::uint8_t>(); }
    double get_f64() { return std::bit_cast<double>(get_uint<std::uint64_t>()); }
    float get_f32() { return std::bit_cast<float>(get_uint<std::uint32_t>()); }
    std::span<const std::uint8_t> get_bytes(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return in_.size() - pos_; }
    std::size_t position() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) {
            throw TruncatedFrame("need " + std::to_string(n) + " bytes, have " +
                                 std::to_string(in_.size() - pos_));
        }
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

} // namespace vhmmt
