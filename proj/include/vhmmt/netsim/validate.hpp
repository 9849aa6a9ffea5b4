#pragma once

#include <array>
#include <optional>

#include "vhmmt/netsim/frame.hpp"

namespace vhmmt::netsim {

enum class Verdict : std::uint8_t { Accept, DropStale, DropCorrupt };

/// Drops messages that are out of order (timestamp not after the last
/// accepted one), older than `max_age_us` at `now`, or pose commands whose
/// values are non-finite or whose quaternion norm is off by more than 1e-3.
/// A negative max_age disables the age check.
Verdict validate_incoming(const Message& m, std::optional<TimeUs> last_accepted, TimeUs now, TimeUs max_age_us);

/// Tracks the last accepted timestamp per kind and counts drops.
class IncomingValidator {
public:
    explicit IncomingValidator(TimeUs max_age_us, bool drop_stale = true)
        : max_age_us_(max_age_us), drop_stale_(drop_stale) {}

    Verdict check(const Message& m, TimeUs now);

    std::uint64_t stale_drops() const { return stale_; }
    std::uint64_t corrupt_drops() const { return corrupt_; }
    void set_max_age(TimeUs max_age_us) { max_age_us_ = max_age_us; }
    TimeUs max_age() const { return max_age_us_; }

private:
    TimeUs max_age_us_;
    bool drop_stale_;
    std::array<std::optional<TimeUs>, kKindCount> last_{};
    std::uint64_t stale_ = 0;
    std::uint64_t corrupt_ = 0;
};

} // namespace vhmmt::netsim
