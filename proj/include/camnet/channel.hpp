#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "camnet/cam_codec.hpp"
#include "camnet/error.hpp"
#include "camnet/rng.hpp"

namespace camnet {

enum class NodeRole : std::uint8_t { RSU, OBU };

inline constexpr std::string_view to_string(NodeRole r) noexcept {
    return r == NodeRole::RSU ? "RSU" : "OBU";
}

/// Radio parameters of one wireless interface.
struct NicProfile {
    std::string name;
    NodeRole role = NodeRole::OBU;
    Nic power_class = Nic::HP;
    double tx_power_dbm = 0.0;
    double antenna_gain_dbi = 0.0;
    double center_freq_hz = 5.9e9;
    double bandwidth_hz = 10e6;
    std::string mcs = "QPSK-1/2";
    int cw_min = 15;
    int cw_max = 1023;

    friend bool operator==(const NicProfile&, const NicProfile&) = default;
};

// The four interface profiles of the testbed hardware.
inline NicProfile lp_rsu_profile() { return {"LP-RSU", NodeRole::RSU, Nic::LP, 25.0, 7.0, 5.89e9}; }
inline NicProfile lp_obu_profile() { return {"LP-OBU", NodeRole::OBU, Nic::LP, 25.0, 5.0, 5.89e9}; }
inline NicProfile hp_rsu_profile() { return {"HP-RSU", NodeRole::RSU, Nic::HP, 29.0, 9.0, 5.9e9}; }
inline NicProfile hp_obu_profile() { return {"HP-OBU", NodeRole::OBU, Nic::HP, 29.0, 5.0, 5.9e9}; }

inline std::optional<NicProfile> profile_by_name(std::string_view name) {
    if (name == "LP-RSU") return lp_rsu_profile();
    if (name == "LP-OBU") return lp_obu_profile();
    if (name == "HP-RSU") return hp_rsu_profile();
    if (name == "HP-OBU") return hp_obu_profile();
    return std::nullopt;
}

inline NicProfile profile_for(NodeRole role, Nic nic) {
    if (role == NodeRole::RSU) return nic == Nic::HP ? hp_rsu_profile() : lp_rsu_profile();
    return nic == Nic::HP ? hp_obu_profile() : lp_obu_profile();
}

enum class ShadowingMode : std::uint8_t { PerFrame, PerLink };

struct ChannelParams {
    double pl0_db = 47.86;            // free-space loss at 1 m, 5.9 GHz
    double n_exp = 3.0;
    double shadow_sigma_db = 0.0;
    double noise_floor_dbm = -104.0;  // kTB over 10 MHz
    double sensitivity_dbm = -92.0;   // QPSK-1/2, 10 MHz
    double capture_threshold_db = 10.0;
    std::uint64_t seed = 0;
    ShadowingMode shadowing = ShadowingMode::PerFrame;

    friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

inline std::vector<std::string> check(const ChannelParams& p) {
    std::vector<std::string> v;
    if (!(p.n_exp >= 2.0)) v.push_back("channel: n_exp must be >= 2");
    if (!(p.shadow_sigma_db >= 0.0)) v.push_back("channel: shadow_sigma_db must be >= 0");
    if (!std::isfinite(p.pl0_db)) v.push_back("channel: pl0_db must be finite");
    return v;
}

/// Log-distance path loss plus an externally drawn shadowing term (dB).
/// Distances below the 1 m reference clamp to pl0.
inline double path_loss_db(const ChannelParams& p, double d_m, double shadow_db = 0.0) {
    if (!(d_m > 0.0)) throw DomainError("path_loss_db: distance must be > 0");
    const double d = d_m < 1.0 ? 1.0 : d_m;
    return p.pl0_db + 10.0 * p.n_exp * std::log10(d) + shadow_db;
}

inline double rx_power_dbm(const NicProfile& tx, const NicProfile& rx, double d_m, const ChannelParams& p,
                           double shadow_db = 0.0) {
    return tx.tx_power_dbm + tx.antenna_gain_dbi + rx.antenna_gain_dbi - path_loss_db(p, d_m, shadow_db);
}

/// Power sum in the linear domain, returned in dBm.
inline double power_sum_dbm(std::span<const double> dbm) {
    double mw = 0.0;
    for (double v : dbm) mw += std::pow(10.0, v / 10.0);
    return 10.0 * std::log10(mw);
}

enum class Verdict : std::uint8_t { Delivered, LostNoise, LostCollision };

inline constexpr std::string_view to_string(Verdict v) noexcept {
    switch (v) {
    case Verdict::Delivered: return "delivered";
    case Verdict::LostNoise: return "lost_noise";
    case Verdict::LostCollision: return "lost_collision";
    }
    return "?";
}

/// SINR in dB against the noise floor plus every overlapping co-channel frame.
inline double sinr_db(double rx_power_dbm, std::span<const double> interference_dbm, const ChannelParams& p) {
    double mw = std::pow(10.0, p.noise_floor_dbm / 10.0);
    for (double v : interference_dbm) mw += std::pow(10.0, v / 10.0);
    return rx_power_dbm - 10.0 * std::log10(mw);
}

inline Verdict deliver(double rx_power_dbm, std::span<const double> interference_dbm, const ChannelParams& p) {
    if (rx_power_dbm < p.sensitivity_dbm) return Verdict::LostNoise;
    if (sinr_db(rx_power_dbm, interference_dbm, p) >= p.capture_threshold_db) return Verdict::Delivered;
    return interference_dbm.empty() ? Verdict::LostNoise : Verdict::LostCollision;
}

/// Path-loss exponent that puts the noise-free delivery boundary of the
/// tx->rx link exactly at `target_range_m`.
inline double calibrate_exponent(double target_range_m, const NicProfile& tx, const NicProfile& rx,
                                  const ChannelParams& p) {
    if (!(target_range_m > 1.0)) throw DomainError("calibrate_exponent: target range must exceed 1 m");
    const double budget = tx.tx_power_dbm + tx.antenna_gain_dbi + rx.antenna_gain_dbi - p.pl0_db - p.sensitivity_dbm;
    return budget / (10.0 * std::log10(target_range_m));
}

/// Largest distance at which a frame can still reach sensitivity when the
/// shadowing draw is `sigmas` standard deviations in its favour.
inline double max_range_m(const NicProfile& tx, const NicProfile& rx, const ChannelParams& p, double sigmas = 3.0) {
    const double budget = tx.tx_power_dbm + tx.antenna_gain_dbi + rx.antenna_gain_dbi - p.pl0_db -
                          p.sensitivity_dbm + sigmas * p.shadow_sigma_db;
    if (budget <= 0.0) return 1.0;
    return std::pow(10.0, budget / (10.0 * p.n_exp));
}

/// Identifies one shadowing draw. `frame_key` is ignored in per-link mode.
struct ShadowKey {
    std::uint64_t tx_mac = 0;
    std::uint64_t rx_mac = 0;
    std::uint64_t frame_key = 0;
};

/// Deterministic log-normal shadowing sample (dB) for one link and frame.
/// Per-link samples are reciprocal: swapping the endpoints gives the same value.
inline double shadow_sample_db(const ChannelParams& p, const ShadowKey& k) {
    if (p.shadow_sigma_db == 0.0) return 0.0;
    std::uint64_t h = mix64(p.seed ^ 0x5348414457ULL);
    if (p.shadowing == ShadowingMode::PerLink) {
        const auto lo = std::min(k.tx_mac, k.rx_mac);
        const auto hi = std::max(k.tx_mac, k.rx_mac);
        h = hash_combine(hash_combine(h, lo), hi);
    } else {
        h = hash_combine(hash_combine(hash_combine(h, k.tx_mac), k.rx_mac), k.frame_key);
    }
    return p.shadow_sigma_db * hashed_normal(h);
}

} // namespace camnet
