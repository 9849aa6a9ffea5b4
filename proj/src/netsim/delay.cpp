#include "vhmmt/netsim/delay.hpp"

#include <algorithm>
#include <cmath>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::netsim {

void DelayConfig::validate() const {
    if (!std::isfinite(one_way_delay_ms) || !std::isfinite(jitter_ms) || one_way_delay_ms < 0 || jitter_ms < 0 ||
        jitter_ms > one_way_delay_ms) {
        throw ConfigError("delay config needs 0 <= jitter <= delay");
    }
}

void DelayLine::enqueue(Message m, TimeUs now, TimeUs release_at) {
    release_at = std::max({release_at, now, last_release_});
    last_release_ = release_at;
    q_.push_back(Entry{std::move(m), release_at});
}

void DelayLine::release(TimeUs now, std::vector<Message>& out) {
    while (!q_.empty() && q_.front().release_at <= now) {
        out.push_back(std::move(q_.front().msg));
        q_.pop_front();
    }
}

std::optional<TimeUs> DelayLine::next_release() const {
    if (q_.empty()) {
        return std::nullopt;
    }
    return q_.front().release_at;
}

DelayBank::DelayBank(DelayConfig cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) { cfg_.validate(); }

void DelayBank::set_config(const DelayConfig& cfg) {
    cfg.validate();
    cfg_ = cfg;
}

void DelayBank::enqueue(Message m, TimeUs now) {
    TimeUs delay = cfg_.delay_us();
    if (cfg_.jitter_ms > 0) {
        std::uniform_real_distribution<double> j(-cfg_.jitter_ms, cfg_.jitter_ms);
        delay += s_to_us(j(rng_) * 1e-3);
    }
    auto& line = lines_[static_cast<std::size_t>(m.kind)];
    line.enqueue(std::move(m), now, now + delay);
}

std::vector<Message> DelayBank::release(TimeUs now) {
    // Interleave kinds by release time; within a kind FIFO is preserved.
    std::vector<std::pair<TimeUs, std::size_t>> order;
    std::array<std::vector<Message>, kKindCount> per_kind;
    for (std::size_t k = 0; k < kKindCount; ++k) {
        while (auto t = lines_[k].next_release()) {
            if (*t > now) {
                break;
            }
            const std::size_t before = per_kind[k].size();
            lines_[k].release(*t, per_kind[k]);
            for (std::size_t i = before; i < per_kind[k].size(); ++i) {
                order.emplace_back(*t, k);
            }
        }
    }
    std::stable_sort(order.begin(), order.end());
    std::vector<Message> out;
    out.reserve(order.size());
    std::array<std::size_t, kKindCount> next{};
    for (const auto& [t, k] : order) {
        out.push_back(std::move(per_kind[k][next[k]++]));
    }
    return out;
}

std::size_t DelayBank::pending() const {
    std::size_t n = 0;
    for (const auto& l : lines_) {
        n += l.pending();
    }
    return n;
}

} // namespace vhmmt::netsim
