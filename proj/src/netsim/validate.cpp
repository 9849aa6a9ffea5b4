#include "vhmmt/netsim/validate.hpp"

#include <cmath>

#include "vhmmt/core/errors.hpp"
#include "vhmmt/netsim/payloads.hpp"

namespace vhmmt::netsim {

namespace {

bool pose_ok(const Message& m) {
    if (m.payload.size() != 56) {
        return false;
    }
    const auto v = decode_pose_raw(m.payload);
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
    return std::abs(norm - 1.0) <= 1e-3;
}

} // namespace

Verdict validate_incoming(const Message& m, std::optional<TimeUs> last_accepted, TimeUs now, TimeUs max_age_us) {
    if (last_accepted && m.timestamp_us <= *last_accepted) {
        return Verdict::DropStale;
    }
    if (max_age_us >= 0 && m.timestamp_us < now - max_age_us) {
        return Verdict::DropStale;
    }
    if (m.kind == Kind::PoseCmd && !pose_ok(m)) {
        return Verdict::DropCorrupt;
    }
    return Verdict::Accept;
}

Verdict IncomingValidator::check(const Message& m, TimeUs now) {
    auto& last = last_[static_cast<std::size_t>(m.kind)];
    const Verdict v = drop_stale_ ? validate_incoming(m, last, now, max_age_us_)
                                  : validate_incoming(m, std::nullopt, now, -1);
    switch (v) {
        case Verdict::Accept: last = m.timestamp_us; break;
        case Verdict::DropStale: ++stale_; break;
        case Verdict::DropCorrupt: ++corrupt_; break;
    }
    return v;
}

} // namespace vhmmt::netsim
