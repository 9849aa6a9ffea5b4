#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <new>
#include <optional>
#include <thread>
#include <utility>

namespace vhmmt {

/// Bounded single-producer/single-consumer FIFO. Push never blocks: on a full
/// queue the producer evicts the oldest entry and reports it.
///
/// Slots carry a sequence number (Vyukov scheme), so the producer can claim
/// the oldest slot with the same CAS the consumer uses and the two never
/// touch one slot at the same time.
template <typename T, std::size_t Capacity>
class SpscQueue {
    static_assert(Capacity >= 2 && (Capacity & (Capacity - 1)) == 0, "capacity must be a power of two");

public:
    SpscQueue() {
        for (std::size_t i = 0; i < Capacity; ++i) {
            slots_[i].seq.store(i, std::memory_order_relaxed);
        }
    }
    SpscQueue(const SpscQueue&) = delete;
    SpscQueue& operator=(const SpscQueue&) = delete;

    /// Producer side. Returns the evicted oldest value when the queue was full.
    std::optional<T> push(T value) {
        std::optional<T> evicted;
        for (;;) {
            std::size_t pos = tail_.load(std::memory_order_relaxed);
            Slot& slot = slots_[pos & kMask];
            std::size_t seq = slot.seq.load(std::memory_order_acquire);
            auto diff = static_cast<std::intptr_t>(seq) - static_cast<std::intptr_t>(pos);
            if (diff == 0) {
                slot.value = std::move(value);
                slot.seq.store(pos + 1, std::memory_order_release);
                tail_.store(pos + 1, std::memory_order_relaxed);
                return evicted;
            }
            // Full. Only evict once per push; if the consumer is mid-read on the
            // slot we need, it releases it within a few instructions.
            if (!evicted) {
                evicted = pop();
                if (evicted) {
                    dropped_.fetch_add(1, std::memory_order_relaxed);
                    continue;
                }
            }
            std::this_thread::yield();
        }
    }

    /// Consumer side (the producer also calls this internally to evict).
    std::optional<T> pop() {
        std::size_t pos = head_.load(std::memory_order_relaxed);
        for (;;) {
            Slot& slot = slots_[pos & kMask];
            std::size_t seq = slot.seq.load(std::memory_order_acquire);
            auto diff = static_cast<std::intptr_t>(seq) - static_cast<std::intptr_t>(pos + 1);
            if (diff == 0) {
                if (head_.compare_exchange_weak(pos, pos + 1, std::memory_order_relaxed)) {
                    T out = std::move(slot.value);
                    slot.seq.store(pos + Capacity, std::memory_order_release);
                    return out;
                }
            } else if (diff < 0) {
                return std::nullopt;
            } else {
                pos = head_.load(std::memory_order_relaxed);
            }
        }
    }

    /// Pops everything currently queued and returns only the newest entry.
    std::optional<T> pop_latest() {
        std::optional<T> latest;
        while (auto v = pop()) {
            latest = std::move(v);
        }
        return latest;
    }

    std::size_t size_approx() const {
        std::size_t t = tail_.load(std::memory_order_relaxed);
        std::size_t h = head_.load(std::memory_order_relaxed);
        return t >= h ? t - h : 0;
    }
    std::uint64_t dropped() const { return dropped_.load(std::memory_order_relaxed); }
    static constexpr std::size_t capacity() { return Capacity; }

private:
    static constexpr std::size_t kMask = Capacity - 1;
    static constexpr std::size_t kLine = 64;

    struct Slot {
        std::atomic<std::size_t> seq{0};
        T value{};
    };

    std::array<Slot, Capacity> slots_;
    alignas(kLine) std::atomic<std::size_t> head_{0};
    alignas(kLine) std::atomic<std::size_t> tail_{0};
    alignas(kLine) std::atomic<std::uint64_t> dropped_{0};
};

} // namespace vhmmt
