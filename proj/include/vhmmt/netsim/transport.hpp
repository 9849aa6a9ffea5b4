#pragma once

#include <memory>
#include <string>
#include <utility>

#include "vhmmt/core/bytes.hpp"

namespace vhmmt::netsim {

/// Reliable ordered byte stream between two endpoints. Neither call blocks.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void write(std::span<const std::uint8_t> bytes) = 0;
    /// Appends whatever has arrived to `out`.
    virtual void read(Bytes& out) = 0;
};

using TransportPair = std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>>;

/// In-process pipes guarded by a mutex.
TransportPair make_loopback_pair();
/// AF_UNIX stream socket pair in non-blocking mode.
TransportPair make_socketpair_pair();
/// "loopback" or "socketpair"; throws ConfigError otherwise.
TransportPair make_transport_pair(const std::string& kind);

} // namespace vhmmt::netsim
