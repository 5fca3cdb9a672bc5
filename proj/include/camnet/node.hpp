#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "camnet/cam_codec.hpp"
#include "camnet/channel.hpp"
#include "camnet/geo.hpp"
#include "camnet/rng.hpp"

namespace camnet {

/// Distribution of the gap between two consecutive CAM generations.
struct JitterModel {
    enum class Mode : std::uint8_t { None, Empirical };
    Mode mode = Mode::None;
    std::map<std::int64_t, double> intervals_us; // interval -> probability

    static JitterModel none() { return {}; }
    static JitterModel empirical(std::map<std::int64_t, double> dist) {
        return {Mode::Empirical, std::move(dist)};
    }
    /// Default shape of the single-core testbed devices: mostly 12 or 14 ms.
    static JitterModel testbed_default() {
        return empirical({{10'000, 0.10}, {12'000, 0.45}, {14'000, 0.40}, {16'000, 0.05}});
    }

    friend bool operator==(const JitterModel&, const JitterModel&) = default;
};

inline std::vector<std::string> check(const JitterModel& j) {
    std::vector<std::string> v;
    if (j.mode == JitterModel::Mode::None) return v;
    if (j.intervals_us.empty()) v.push_back("jitter: empirical distribution is empty");
    double sum = 0.0;
    for (const auto& [interval, prob] : j.intervals_us) {
        if (interval <= 0) v.push_back("jitter: interval " + std::to_string(interval) + " us must be > 0");
        if (!(prob >= 0.0)) v.push_back("jitter: negative probability for " + std::to_string(interval) + " us");
        sum += prob;
    }
    if (!j.intervals_us.empty() && std::abs(sum - 1.0) > 1e-9) {
        v.push_back("jitter: probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
    return v;
}

struct FixedSite {
    double lat = 0.0;
    double lon = 0.0;
    double height_m = 0.0;
};

struct NicConfig {
    NicProfile profile;
    MacAddress mac;
};

struct NodeConfig {
    std::string node_id;
    NodeRole kind = NodeRole::OBU;
    std::vector<NicConfig> nics;
    std::variant<FixedSite, MobilityTrace> position = FixedSite{};
    std::int64_t beacon_period_us = 10'000;
    JitterModel jitter;
    std::optional<std::int64_t> boot_offset_us; // first generation after scenario start; random when unset

    const FixedSite* site() const noexcept { return std::get_if<FixedSite>(&position); }
    const MobilityTrace* trace() const noexcept { return std::get_if<MobilityTrace>(&position); }
};

/// Mutable per-node state, advanced only by the engine.
struct NodeState {
    std::vector<std::uint32_t> next_seq; // one counter per NIC, 0 at boot
    std::int64_t last_gen_us = 0;

    static NodeState boot(const NodeConfig& cfg) {
        NodeState s;
        s.next_seq.assign(cfg.nics.size(), 0);
        return s;
    }
};

inline std::int64_t next_generation_time(const NodeConfig& cfg, Rng& rng, std::int64_t last_gen_us) {
    if (cfg.jitter.mode == JitterModel::Mode::None) return last_gen_us + cfg.beacon_period_us;
    const double u = rng.uniform01();
    double acc = 0.0;
    for (const auto& [interval, prob] : cfg.jitter.intervals_us) {
        acc += prob;
        if (u < acc) return last_gen_us + interval;
    }
    return last_gen_us + cfg.jitter.intervals_us.rbegin()->first;
}

/// Interpolated position of a node at `t_us`, or nothing when the node's
/// trace does not cover that instant.
inline std::optional<TraceSample> node_position(const NodeConfig& cfg, std::int64_t t_us) {
    if (const auto* s = cfg.site()) return TraceSample{s->lat, s->lon, 0.0};
    const auto& tr = *cfg.trace();
    if (!tr.covers(t_us)) return std::nullopt;
    return tr.interpolate(t_us);
}

/// One frame per NIC. Raw GPS fields come from the latest fix, interpolated
/// fields from the trace at `t_us`. Empty when the node is off at `t_us`.
inline std::vector<CamFrame> generate_cam(const NodeConfig& cfg, NodeState& state, std::int64_t t_us) {
    CamFrame base;
    base.timestamp_us = t_us;
    if (const auto* s = cfg.site()) {
        base.gps_lat = base.inter_lat = s->lat;
        base.gps_lon = base.inter_lon = s->lon;
    } else {
        const auto& tr = *cfg.trace();
        if (!tr.covers(t_us)) return {};
        const GpsFix& fix = tr.latest_fix(t_us);
        const TraceSample now = tr.interpolate(t_us);
        base.gps_lat = fix.lat;
        base.gps_lon = fix.lon;
        base.gps_speed = fix.speed;
        base.heading = std::fmod(std::fmod(fix.heading, 360.0) + 360.0, 360.0);
        base.inter_lat = now.lat;
        base.inter_lon = now.lon;
        base.inter_speed = now.speed;
    }
    std::vector<CamFrame> frames;
    frames.reserve(cfg.nics.size());
    for (std::size_t i = 0; i < cfg.nics.size(); ++i) {
        CamFrame f = base;
        f.src_mac = cfg.nics[i].mac;
        f.nic = cfg.nics[i].profile.power_class;
        f.seq_num = state.next_seq[i]++;
        frames.push_back(f);
    }
    state.last_gen_us = t_us;
    return frames;
}

/// Receiver-side logging. Frames carrying one of the node's own addresses are
/// dropped silently.
inline std::optional<RxLogRecord> on_receive(const NodeConfig& cfg, const CamFrame& frame, std::int64_t t_us) {
    for (const auto& nic : cfg.nics) {
        if (nic.mac == frame.src_mac) return std::nullopt;
    }
    if (cfg.nics.empty()) return std::nullopt;
    const auto pos = node_position(cfg, t_us);
    if (!pos) return std::nullopt;
    return make_rx_record(frame, cfg.nics.front().mac, pos->lat, pos->lon, t_us);
}

} // namespace camnet
