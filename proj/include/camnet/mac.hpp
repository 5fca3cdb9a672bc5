#pragma once

// OCB broadcast CSMA/CA. Broadcast frames are never acknowledged or retried,
// so the contention window stays at cw_min.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "camnet/cam_codec.hpp"
#include "camnet/rng.hpp"

namespace camnet {

/// 802.11p timing for 10 MHz channels, QPSK-1/2.
struct MacParams {
    std::int64_t slot_us = 13;
    std::int64_t sifs_us = 32;
    int aifsn = 2;
    int cw_min = 15;
    int cw_max = 1023;
    std::int64_t preamble_us = 40;
    std::int64_t symbol_us = 8;
    int bits_per_symbol = 48;
    int service_bits = 16;
    int tail_bits = 6;

    std::int64_t aifs_us() const noexcept { return sifs_us + aifsn * slot_us; }

    friend bool operator==(const MacParams&, const MacParams&) = default;
};

inline std::vector<std::string> check(const MacParams& p) {
    std::vector<std::string> v;
    if (p.cw_min > p.cw_max) v.push_back("mac: cw_min exceeds cw_max");
    if (p.cw_min < 0) v.push_back("mac: cw_min must be >= 0");
    if (p.slot_us <= 0 || p.sifs_us <= 0 || p.preamble_us <= 0 || p.symbol_us <= 0)
        v.push_back("mac: all durations must be > 0");
    if (p.bits_per_symbol <= 0) v.push_back("mac: bits_per_symbol must be > 0");
    if (p.aifsn < 0) v.push_back("mac: aifsn must be >= 0");
    return v;
}

inline std::int64_t airtime_us(const MacParams& p, std::size_t payload_bytes) {
    const auto bits = static_cast<std::int64_t>(p.service_bits + p.tail_bits) + 8 * static_cast<std::int64_t>(payload_bytes);
    const std::int64_t symbols = (bits + p.bits_per_symbol - 1) / p.bits_per_symbol;
    return p.preamble_us + symbols * p.symbol_us;
}

/// Uniform backoff in [0, cw_min].
inline int draw_backoff(const MacParams& p, Rng& rng) {
    return static_cast<int>(rng.uniform_int(0, p.cw_min));
}

/// Medium-busy period [begin, end] as seen by one contender.
struct BusyInterval {
    std::int64_t begin_us = 0;
    std::int64_t end_us = 0;
};

struct TxAttempt {
    CamFrame frame;
    std::int64_t enqueue_time_us = 0;
    std::int64_t start_time_us = 0;
    std::int64_t end_time_us = 0;
    std::optional<int> backoff_slots_drawn; // empty when the frame went out after a plain AIFS
};

/// Reference scheduler for one frame against a fully known busy pattern.
///
/// Timing rules, shared with MacContention:
///   - Enqueue at `now` with the medium idle: wait AIFS, then transmit.
///   - Medium busy at `now` (an interval with begin <= now <= end), or busy
///     starting before AIFS elapses: draw a backoff, wait for idle + AIFS,
///     then count down one slot per idle slot time.
///   - A busy period starting after the countdown began freezes the counter
///     after the whole slots already elapsed; the countdown resumes after the
///     next idle + AIFS.
///   - A transmission of another node starting at exactly the instant the
///     counter expires does not stop this one (both go out and collide).
inline TxAttempt schedule_tx(const MacParams& p, Rng& rng, const CamFrame& frame, std::int64_t now,
                             std::size_t payload_bytes, std::span<const BusyInterval> busy) {
    std::vector<BusyInterval> iv(busy.begin(), busy.end());
    std::sort(iv.begin(), iv.end(), [](const auto& a, const auto& b) { return a.begin_us < b.begin_us; });
    // touching or overlapping periods form one busy period
    std::vector<BusyInterval> merged;
    for (const auto& b : iv) {
        if (b.end_us < now) continue;
        if (!merged.empty() && b.begin_us <= merged.back().end_us) {
            merged.back().end_us = std::max(merged.back().end_us, b.end_us);
        } else {
            merged.push_back(b);
        }
    }

    TxAttempt a;
    a.frame = frame;
    a.enqueue_time_us = now;
    std::optional<int> counter;
    std::size_t k = 0;
    std::int64_t idle_from = now;
    if (!merged.empty() && merged[0].begin_us <= now) {
        counter = draw_backoff(p, rng);
        a.backoff_slots_drawn = counter;
        idle_from = merged[0].end_us;
        k = 1;
    }
    for (;;) {
        const std::int64_t aifs_end = idle_from + p.aifs_us();
        const std::int64_t fire = aifs_end + counter.value_or(0) * p.slot_us;
        if (k < merged.size() && merged[k].begin_us < fire) {
            const std::int64_t b = merged[k].begin_us;
            if (b < aifs_end) {
                if (!counter) {
                    counter = draw_backoff(p, rng);
                    a.backoff_slots_drawn = counter;
                }
            } else {
                *counter -= static_cast<int>((b - aifs_end) / p.slot_us);
            }
            idle_from = merged[k].end_us;
            ++k;
            continue;
        }
        a.start_time_us = fire;
        a.end_time_us = fire + airtime_us(p, payload_bytes);
        return a;
    }
}

/// Event-driven contention state of one NIC. The owner reports medium
/// transitions and timer expiries; the machine answers with the time at which
/// its timer should fire next (if any). Timer requests carry a token so that
/// stale expiries can be ignored.
class MacContention {
public:
    explicit MacContention(MacParams params) : p_(params) {}

    struct Timer {
        std::int64_t at_us;
        std::uint64_t token;
    };

    bool has_frame() const noexcept { return has_frame_; }
    std::optional<int> counter() const noexcept { return counter_; }
    std::optional<int> drawn() const noexcept { return drawn_; }
    int slots_counted() const noexcept { return slots_counted_; }

    /// A frame becomes ready at `now`. `medium_busy` is the sensed state.
    std::optional<Timer> enqueue(std::int64_t now, bool medium_busy, Rng& rng) {
        has_frame_ = true;
        busy_ = medium_busy;
        if (busy_) {
            ensure_counter(rng);
            return std::nullopt;
        }
        return arm(now);
    }

    std::optional<Timer> on_busy(std::int64_t now, Rng& rng) {
        busy_ = true;
        if (!has_frame_ || !armed_) return std::nullopt;
        armed_ = false;
        ++token_;
        if (now < aifs_end_) {
            ensure_counter(rng);
        } else if (counter_) {
            const int elapsed = static_cast<int>((now - aifs_end_) / p_.slot_us);
            const int used = std::min(elapsed, *counter_);
            *counter_ -= used;
            slots_counted_ += used;
        }
        return std::nullopt;
    }

    std::optional<Timer> on_idle(std::int64_t now) {
        busy_ = false;
        if (!has_frame_) return std::nullopt;
        return arm(now);
    }

    /// Returns true when the timer is current: the frame goes on air now.
    bool on_timer(const Timer& t) {
        if (!armed_ || t.token != token_) return false;
        if (counter_) slots_counted_ += *counter_;
        armed_ = false;
        has_frame_ = false;
        counter_.reset();
        return true;
    }

    /// Starts a fresh accounting record for the next frame.
    void reset_stats() noexcept {
        drawn_.reset();
        slots_counted_ = 0;
    }

private:
    void ensure_counter(Rng& rng) {
        if (!counter_) {
            counter_ = draw_backoff(p_, rng);
            drawn_ = counter_;
        }
    }

    Timer arm(std::int64_t now) {
        aifs_end_ = now + p_.aifs_us();
        armed_ = true;
        ++token_;
        return {aifs_end_ + counter_.value_or(0) * p_.slot_us, token_};
    }

    MacParams p_;
    bool has_frame_ = false;
    bool busy_ = false;
    bool armed_ = false;
    std::optional<int> counter_;
    std::optional<int> drawn_;
    int slots_counted_ = 0;
    std::int64_t aifs_end_ = 0;
    std::uint64_t token_ = 0;
};

} // namespace camnet
