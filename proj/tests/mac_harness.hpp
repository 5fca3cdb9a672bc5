#pragma once

// Small event loop that drives MacContention the same way the engine does:
// at equal times, frame arrivals precede timer expiries, which precede
// transmission starts, which precede transmission ends.

#include <cmath>
#include <optional>
#include <queue>
#include <vector>

#include "camnet/mac.hpp"

namespace mac_harness {

using camnet::BusyInterval;
using camnet::MacContention;
using camnet::MacParams;
using camnet::Rng;

inline constexpr double kChi2Crit15DfP01 = 30.578;

struct Driven {
    std::int64_t start = -1;
    std::optional<int> drawn;
    int counted = 0;
};

namespace detail {

enum Cls { Arrive = 0, Fire = 1, Start = 2, End = 3 };

struct Ev {
    std::int64_t t;
    int cls;
    int node;
    std::uint64_t token;
    bool operator>(const Ev& o) const {
        if (t != o.t) return t > o.t;
        if (cls != o.cls) return cls > o.cls;
        return node > o.node;
    }
};

using Queue = std::priority_queue<Ev, std::vector<Ev>, std::greater<>>;

} // namespace detail

/// One contender against a fixed set of foreign busy periods.
inline Driven drive(const MacParams& p, std::uint64_t seed, std::int64_t now, const std::vector<BusyInterval>& busy) {
    using namespace detail;
    Queue q;
    for (const auto& b : busy) {
        q.push({b.begin_us, Start, -1, 0});
        q.push({b.end_us, End, -1, 0});
    }
    q.push({now, Arrive, 0, 0});
    MacContention m(p);
    Rng rng(seed);
    int depth = 0;
    bool arrived = false;
    Driven out;
    auto arm = [&](std::optional<MacContention::Timer> t) {
        if (t) q.push({t->at_us, Fire, 0, t->token});
    };
    while (!q.empty()) {
        const Ev e = q.top();
        q.pop();
        switch (e.cls) {
        case Arrive:
            arrived = true;
            arm(m.enqueue(e.t, depth > 0, rng));
            break;
        case Fire:
            if (m.on_timer({e.t, e.token})) {
                out.start = e.t;
                out.drawn = m.drawn();
                out.counted = m.slots_counted();
                return out;
            }
            break;
        case Start:
            if (depth++ == 0 && arrived) arm(m.on_busy(e.t, rng));
            break;
        case End:
            if (--depth == 0 && arrived) arm(m.on_idle(e.t));
            break;
        }
    }
    return out;
}

/// Start times of two contenders that both queued during a busy period
/// ending at `busy_end`, worked out by hand from the countdown rules.
inline std::pair<std::int64_t, std::int64_t> two_node_oracle(const MacParams& p, int d1, int d2, std::int64_t busy_end,
                                                             std::int64_t airtime) {
    const int lo = std::min(d1, d2), hi = std::max(d1, d2);
    const std::int64_t first = busy_end + p.aifs_us() + lo * p.slot_us;
    if (lo == hi) return {first, first};
    return {first, first + airtime + p.aifs_us() + (hi - lo) * p.slot_us};
}

/// Fraction of the 16^n equally likely draw vectors with a repeated value.
inline double enumerate_any_equal(int n) {
    const int total = static_cast<int>(std::pow(16, n));
    int hits = 0;
    for (int code = 0; code < total; ++code) {
        int seen = 0, c = code;
        bool dup = false;
        for (int i = 0; i < n; ++i, c /= 16) {
            const int bit = 1 << (c % 16);
            dup |= (seen & bit) != 0;
            seen |= bit;
        }
        hits += dup;
    }
    return static_cast<double>(hits) / total;
}

/// Fraction of draw vectors whose smallest value is shared.
inline double enumerate_min_tie(int n) {
    const int total = static_cast<int>(std::pow(16, n));
    int hits = 0;
    for (int code = 0; code < total; ++code) {
        int lo = 16, count = 0, c = code;
        for (int i = 0; i < n; ++i, c /= 16) {
            const int d = c % 16;
            if (d < lo) {
                lo = d;
                count = 1;
            } else if (d == lo) {
                ++count;
            }
        }
        hits += count > 1;
    }
    return static_cast<double>(hits) / total;
}

/// N mutually audible contenders. Each stays saturated: a new frame arrives
/// one microsecond after its own transmission ends. An outside transmission
/// occupies [0, 300] and all frames arrive at 100.
class Cluster {
public:
    Cluster(const MacParams& p, int n, std::uint64_t seed) : p_(p), depth_(static_cast<std::size_t>(n), 0) {
        for (int i = 0; i < n; ++i) {
            macs_.emplace_back(p);
            rngs_.emplace_back(camnet::hash_combine(seed, static_cast<std::uint64_t>(i)));
            starts_.emplace_back();
        }
        q_.push({0, detail::Start, -1, 0});
        q_.push({300, detail::End, -1, 0});
        for (int i = 0; i < n; ++i) q_.push({100, detail::Arrive, i, 0});
    }

    /// Runs until the first transmission time; returns how many began then.
    int first_burst() {
        while (!q_.empty()) {
            const detail::Ev e = q_.top();
            if (first_ && e.t > *first_) break;
            step();
        }
        int n = 0;
        for (const auto& s : starts_) n += !s.empty() && s.front() == *first_;
        return n;
    }

    void run_until(std::int64_t t_end) {
        while (!q_.empty() && q_.top().t <= t_end) step();
    }

    const std::vector<std::int64_t>& starts(int node) const { return starts_[static_cast<std::size_t>(node)]; }

private:
    void arm(int i, std::optional<MacContention::Timer> t) {
        if (t) q_.push({t->at_us, detail::Fire, i, t->token});
    }

    void step() {
        using namespace detail;
        const Ev e = q_.top();
        q_.pop();
        const std::size_t n = macs_.size();
        switch (e.cls) {
        case Arrive: {
            auto& m = macs_[static_cast<std::size_t>(e.node)];
            m.reset_stats();
            arm(e.node, m.enqueue(e.t, depth_[static_cast<std::size_t>(e.node)] > 0, rngs_[static_cast<std::size_t>(e.node)]));
            break;
        }
        case Fire:
            if (macs_[static_cast<std::size_t>(e.node)].on_timer({e.t, e.token})) {
                starts_[static_cast<std::size_t>(e.node)].push_back(e.t);
                if (!first_) first_ = e.t;
                q_.push({e.t, Start, e.node, 0});
            }
            break;
        case Start:
            for (std::size_t i = 0; i < n; ++i) {
                if (static_cast<int>(i) == e.node) continue;
                if (depth_[i]++ == 0 && macs_[i].has_frame()) arm(static_cast<int>(i), macs_[i].on_busy(e.t, rngs_[i]));
            }
            if (e.node >= 0) q_.push({e.t + camnet::airtime_us(p_, 200), End, e.node, 0});
            break;
        case End:
            for (std::size_t i = 0; i < n; ++i) {
                if (static_cast<int>(i) == e.node) continue;
                if (--depth_[i] == 0 && macs_[i].has_frame()) arm(static_cast<int>(i), macs_[i].on_idle(e.t));
            }
            if (e.node >= 0) q_.push({e.t + 1, Arrive, e.node, 0});
            break;
        }
    }

    MacParams p_;
    std::vector<MacContention> macs_;
    std::vector<Rng> rngs_;
    std::vector<int> depth_;
    std::vector<std::vector<std::int64_t>> starts_;
    std::optional<std::int64_t> first_;
    detail::Queue q_;
};

/// Share of trials in which the first transmission after a busy period is
/// a collision of two or more contenders.
inline double contention_collision_rate(const MacParams& p, int n, int trials, std::uint64_t seed) {
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
        Cluster c(p, n, camnet::hash_combine(seed, static_cast<std::uint64_t>(t)));
        hits += c.first_burst() > 1;
    }
    return static_cast<double>(hits) / trials;
}

/// Transmission start times of node 0 in a saturated three-node cluster.
inline std::vector<std::int64_t> saturated_single_nic(const MacParams& p, int frames, std::uint64_t seed) {
    Cluster c(p, 3, seed);
    std::int64_t horizon = 0;
    while (c.starts(0).size() < static_cast<std::size_t>(frames)) {
        horizon += 100'000;
        c.run_until(horizon);
    }
    return c.starts(0);
}

} // namespace mac_harness
