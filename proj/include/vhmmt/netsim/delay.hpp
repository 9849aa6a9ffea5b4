#pragma once

#include <array>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "vhmmt/netsim/frame.hpp"

namespace vhmmt::netsim {

struct DelayConfig {
    double one_way_delay_ms = 0.0;
    double jitter_ms = 0.0;        ///< uniform +-jitter around the delay
    bool drop_stale = true;

    void validate() const;
    TimeUs delay_us() const { return s_to_us(one_way_delay_ms * 1e-3); }
    /// Age beyond which a message is stale: twice the delay plus 100 ms.
    double default_max_age_ms() const { return 2.0 * one_way_delay_ms + 100.0; }
};

/// Timestamped release queue for one message kind. Release order is the
/// enqueue order even under jitter: a message is never released before its
/// predecessor.
class DelayLine {
public:
    void enqueue(Message m, TimeUs now, TimeUs release_at);
    /// Appends every message due at `now` to `out`, oldest first.
    void release(TimeUs now, std::vector<Message>& out);
    std::size_t pending() const { return q_.size(); }
    /// Release time of the oldest pending message.
    std::optional<TimeUs> next_release() const;

private:
    struct Entry {
        Message msg;
        TimeUs release_at;
    };
    std::deque<Entry> q_;
    TimeUs last_release_ = std::numeric_limits<TimeUs>::min();
};

/// One delay line per message kind, so a slow video stream cannot hold back
/// pose commands.
class DelayBank {
public:
    DelayBank(DelayConfig cfg, std::uint64_t seed);

    void enqueue(Message m, TimeUs now);
    /// Due messages from every kind, ordered by release time then kind.
    std::vector<Message> release(TimeUs now);
    std::size_t pending() const;

    const DelayConfig& config() const { return cfg_; }
    /// New messages use the new delay; queued ones keep their release time.
    void set_config(const DelayConfig& cfg);

private:
    DelayConfig cfg_;
    std::mt19937_64 rng_;
    std::array<DelayLine, kKindCount> lines_;
};

} // namespace vhmmt::netsim
