#pragma once

#include <atomic>
#include <chrono>

#include "vhmmt/core/types.hpp"

namespace vhmmt {

/// Session clock. Every time-dependent component takes one of these so tests
/// can drive it deterministically.
class Clock {
public:
    virtual ~Clock() = default;
    virtual TimeUs now_us() const = 0;
};

/// Manually advanced clock for deterministic runs.
class SimClock final : public Clock {
public:
    explicit SimClock(TimeUs start = 0) : now_(start) {}
    TimeUs now_us() const override { return now_.load(std::memory_order_acquire); }
    void advance(TimeUs dt) { now_.fetch_add(dt, std::memory_order_acq_rel); }
    void set(TimeUs t) { now_.store(t, std::memory_order_release); }

private:
    std::atomic<TimeUs> now_;
};

/// Monotonic wall clock measured from construction.
class SteadyClock final : public Clock {
public:
    SteadyClock() : epoch_(std::chrono::steady_clock::now()) {}
    TimeUs now_us() const override {
        return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - epoch_)
            .count();
    }
    std::chrono::steady_clock::time_point epoch() const { return epoch_; }

private:
    std::chrono::steady_clock::time_point epoch_;
};

} // namespace vhmmt
