#pragma once

// Scenario configuration files (JSON) and the built-in field-trial presets.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "camnet/channel.hpp"
#include "camnet/engine.hpp"
#include "camnet/error.hpp"
#include "camnet/geo.hpp"
#include "camnet/node.hpp"

namespace camnet {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::string shadowing_name(ShadowingMode m) { return m == ShadowingMode::PerLink ? "per_link" : "per_frame"; }

inline Json jitter_to_json(const JitterModel& j) {
    Json out;
    out["mode"] = j.mode == JitterModel::Mode::None ? "none" : "empirical";
    if (j.mode == JitterModel::Mode::Empirical) {
        Json d = Json::object();
        for (const auto& [interval, p] : j.intervals_us) d[std::to_string(interval)] = p;
        out["intervals_us"] = d;
    }
    return out;
}

class ConfigReader {
public:
    explicit ConfigReader(std::filesystem::path base) : base_(std::move(base)) {}

    Scenario read(const Json& root) {
        Scenario s;
        if (!root.is_object()) {
            fail("configuration root must be an object");
            throw ValidationError(errors_);
        }
        s.name = get_or(root, "name", s.name);
        s.seed = get_or<std::uint64_t>(root, "seed", s.seed);
        s.start_us = get_or<std::int64_t>(root, "start_us", s.start_us);
        if (root.contains("duration_s")) s.duration_us = std::llround(root["duration_s"].get<double>() * 1e6);
        s.duration_us = get_or<std::int64_t>(root, "duration_us", s.duration_us);
        s.payload_bytes = get_or<std::size_t>(root, "payload_bytes", s.payload_bytes);
        s.obu_antenna_height_m = get_or(root, "obu_antenna_height_m", s.obu_antenna_height_m);
        if (root.contains("channel")) read_channel(root["channel"], s.channel);
        if (root.contains("mac")) read_mac(root["mac"], s.mac);

        const std::int64_t period = get_or<std::int64_t>(root, "beacon_period_us", 10'000);
        JitterModel jitter;
        if (root.contains("jitter")) jitter = read_jitter(root["jitter"], "jitter");

        if (!root.contains("nodes") || !root["nodes"].is_array()) {
            fail("'nodes' array is required");
        } else {
            std::size_t idx = 0;
            for (const auto& n : root["nodes"]) {
                if (auto node = read_node(n, idx++, period, jitter)) s.nodes.push_back(std::move(*node));
            }
        }
        if (!errors_.empty()) throw ValidationError(errors_);
        return s;
    }

private:
    void fail(std::string msg) { errors_.push_back(std::move(msg)); }

    template <typename T>
    static T get_or(const Json& j, const char* key, T def) {
        if (!j.contains(key)) return def;
        return j.at(key).get<T>();
    }

    void read_channel(const Json& c, ChannelParams& p) {
        p.pl0_db = get_or(c, "pl0_db", p.pl0_db);
        p.n_exp = get_or(c, "n_exp", p.n_exp);
        p.shadow_sigma_db = get_or(c, "shadow_sigma_db", p.shadow_sigma_db);
        p.noise_floor_dbm = get_or(c, "noise_floor_dbm", p.noise_floor_dbm);
        p.sensitivity_dbm = get_or(c, "sensitivity_dbm", p.sensitivity_dbm);
        p.capture_threshold_db = get_or(c, "capture_threshold_db", p.capture_threshold_db);
        const std::string mode = get_or<std::string>(c, "shadowing", "per_frame");
        if (mode == "per_frame") {
            p.shadowing = ShadowingMode::PerFrame;
        } else if (mode == "per_link") {
            p.shadowing = ShadowingMode::PerLink;
        } else {
            fail("channel.shadowing must be per_frame or per_link, got '" + mode + "'");
        }
        if (c.contains("calibrate")) {
            const auto& cal = c["calibrate"];
            const auto tx = profile_by_name(get_or<std::string>(cal, "tx", ""));
            const auto rx = profile_by_name(get_or<std::string>(cal, "rx", ""));
            if (!tx || !rx) {
                fail("channel.calibrate: tx/rx must name one of LP-RSU, LP-OBU, HP-RSU, HP-OBU");
                return;
            }
            try {
                p.n_exp = calibrate_exponent(get_or(cal, "range_m", 0.0), *tx, *rx, p);
            } catch (const DomainError& e) {
                fail(std::string("channel.calibrate: ") + e.what());
            }
        }
    }

    void read_mac(const Json& m, MacParams& p) {
        p.slot_us = get_or(m, "slot_us", p.slot_us);
        p.sifs_us = get_or(m, "sifs_us", p.sifs_us);
        p.aifsn = get_or(m, "aifsn", p.aifsn);
        p.cw_min = get_or(m, "cw_min", p.cw_min);
        p.cw_max = get_or(m, "cw_max", p.cw_max);
        p.preamble_us = get_or(m, "preamble_us", p.preamble_us);
        p.symbol_us = get_or(m, "symbol_us", p.symbol_us);
        p.bits_per_symbol = get_or(m, "bits_per_symbol", p.bits_per_symbol);
        p.service_bits = get_or(m, "service_bits", p.service_bits);
        p.tail_bits = get_or(m, "tail_bits", p.tail_bits);
    }

    JitterModel read_jitter(const Json& j, const std::string& where) {
        const std::string mode = get_or<std::string>(j, "mode", "none");
        if (mode == "none") return JitterModel::none();
        if (mode != "empirical") {
            fail(where + ".mode must be none or empirical, got '" + mode + "'");
            return {};
        }
        std::map<std::int64_t, double> dist;
        if (j.contains("intervals_us")) {
            for (const auto& [k, v] : j["intervals_us"].items()) {
                try {
                    dist[std::stoll(k)] = v.get<double>();
                } catch (const std::exception&) {
                    fail(where + ".intervals_us: bad interval '" + k + "'");
                }
            }
        }
        return JitterModel::empirical(std::move(dist));
    }

    std::optional<NodeConfig> read_node(const Json& n, std::size_t idx, std::int64_t period, const JitterModel& jitter) {
        NodeConfig cfg;
        cfg.node_id = get_or<std::string>(n, "id", "");
        const std::string who = "node '" + (cfg.node_id.empty() ? "#" + std::to_string(idx) : cfg.node_id) + "'";
        const std::string kind = get_or<std::string>(n, "kind", "");
        if (kind == "RSU") {
            cfg.kind = NodeRole::RSU;
        } else if (kind == "OBU") {
            cfg.kind = NodeRole::OBU;
        } else {
            fail(who + ": kind must be RSU or OBU");
            return std::nullopt;
        }
        cfg.beacon_period_us = get_or(n, "beacon_period_us", period);
        cfg.jitter = n.contains("jitter") ? read_jitter(n["jitter"], who + ".jitter") : jitter;
        if (n.contains("boot_offset_us")) cfg.boot_offset_us = n["boot_offset_us"].get<std::int64_t>();

        if (n.contains("nics")) {
            std::size_t k = 0;
            for (const auto& nic : n["nics"]) {
                const std::string pname = get_or<std::string>(nic, "profile", "");
                const auto profile = profile_by_name(pname);
                if (!profile) {
                    fail(who + ": unknown NIC profile '" + pname + "'");
                    continue;
                }
                MacAddress mac(0x020000000000ULL | (static_cast<std::uint64_t>(idx + 1) << 8) | (k + 1));
                if (nic.contains("mac")) {
                    const auto parsed = MacAddress::parse(nic["mac"].get<std::string>());
                    if (!parsed) {
                        fail(who + ": bad MAC '" + nic["mac"].get<std::string>() + "'");
                        continue;
                    }
                    mac = *parsed;
                }
                cfg.nics.push_back({*profile, mac});
                ++k;
            }
        }

        if (cfg.kind == NodeRole::RSU) {
            cfg.position = FixedSite{get_or(n, "lat", 0.0), get_or(n, "lon", 0.0), get_or(n, "height_m", 0.0)};
            return cfg;
        }
        try {
            if (n.contains("trace_file")) {
                const std::filesystem::path p = base_ / n["trace_file"].get<std::string>();
                if (!std::filesystem::exists(p)) {
                    fail(who + ": trace file not found: " + p.string());
                    return std::nullopt;
                }
                const std::string want = get_or(n, "trace_id", cfg.node_id);
                for (auto& tr : read_traces(p.string())) {
                    if (tr.node_id() == want) {
                        cfg.position = std::move(tr);
                        return cfg;
                    }
                }
                fail(who + ": no trace for '" + want + "' in " + p.string());
                return std::nullopt;
            }
            if (n.contains("trace")) {
                std::vector<GpsFix> fixes;
                for (const auto& f : n["trace"]) {
                    fixes.push_back({f.at(0).get<std::int64_t>(), f.at(1).get<double>(), f.at(2).get<double>(),
                                     f.at(3).get<double>(), f.at(4).get<double>()});
                }
                cfg.position = MobilityTrace(cfg.node_id, std::move(fixes));
                return cfg;
            }
        } catch (const Error& e) {
            fail(who + ": " + e.what());
            return std::nullopt;
        }
        fail(who + ": OBU needs 'trace_file' or 'trace'");
        return std::nullopt;
    }

    std::filesystem::path base_;
    std::vector<std::string> errors_;
};

} // namespace detail

/// Parses a scenario document. Relative trace paths resolve against `base_dir`.
/// Throws ValidationError with every problem found.
inline Scenario scenario_from_json(const Json& root, const std::filesystem::path& base_dir = ".") {
    try {
        return detail::ConfigReader(base_dir).read(root);
    } catch (const Json::exception& e) {
        throw ValidationError({std::string("configuration: ") + e.what()});
    }
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError({"cannot open configuration file: " + path.string()});
    Json root;
    try {
        root = Json::parse(in, nullptr, true, true);
    } catch (const Json::exception& e) {
        throw ValidationError({path.string() + ": " + e.what()});
    }
    return scenario_from_json(root, path.parent_path());
}

/// Fully resolved configuration, traces inlined.
inline Json scenario_to_json(const Scenario& s) {
    Json out;
    out["name"] = s.name;
    out["seed"] = s.seed;
    out["start_us"] = s.start_us;
    out["duration_us"] = s.duration_us;
    out["payload_bytes"] = s.payload_bytes;
    out["obu_antenna_height_m"] = s.obu_antenna_height_m;
    out["channel"] = {{"pl0_db", s.channel.pl0_db},
                      {"n_exp", s.channel.n_exp},
                      {"shadow_sigma_db", s.channel.shadow_sigma_db},
                      {"noise_floor_dbm", s.channel.noise_floor_dbm},
                      {"sensitivity_dbm", s.channel.sensitivity_dbm},
                      {"capture_threshold_db", s.channel.capture_threshold_db},
                      {"shadowing", detail::shadowing_name(s.channel.shadowing)}};
    out["mac"] = {{"slot_us", s.mac.slot_us},       {"sifs_us", s.mac.sifs_us},
                  {"aifsn", s.mac.aifsn},           {"cw_min", s.mac.cw_min},
                  {"cw_max", s.mac.cw_max},         {"preamble_us", s.mac.preamble_us},
                  {"symbol_us", s.mac.symbol_us},   {"bits_per_symbol", s.mac.bits_per_symbol},
                  {"service_bits", s.mac.service_bits}, {"tail_bits", s.mac.tail_bits}};
    Json nodes = Json::array();
    for (const auto& n : s.nodes) {
        Json j;
        j["id"] = n.node_id;
        j["kind"] = std::string(to_string(n.kind));
        j["beacon_period_us"] = n.beacon_period_us;
        j["jitter"] = detail::jitter_to_json(n.jitter);
        if (n.boot_offset_us) j["boot_offset_us"] = *n.boot_offset_us;
        Json nics = Json::array();
        for (const auto& nic : n.nics) nics.push_back({{"profile", nic.profile.name}, {"mac", nic.mac.to_string()}});
        j["nics"] = nics;
        if (const auto* site = n.site()) {
            j["lat"] = site->lat;
            j["lon"] = site->lon;
            j["height_m"] = site->height_m;
        } else {
            Json fixes = Json::array();
            for (const auto& f : n.trace()->fixes()) fixes.push_back({f.t_us, f.lat, f.lon, f.speed, f.heading});
            j["trace"] = fixes;
        }
        nodes.push_back(j);
    }
    out["nodes"] = nodes;
    return out;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// Central Bristol.
inline constexpr LatLon kBristolOrigin{51.4545, -2.5879};

/// Samples a constant-speed drive along a polyline (local metres) at 1 Hz,
/// looping over the polyline when `closed` is set.
inline MobilityTrace polyline_trace(const std::string& id, const LocalFrame& frame, const std::vector<PlanarPoint>& pts,
                                    bool closed, double speed_mps, double start_offset_m, std::int64_t t0_us,
                                    std::int64_t duration_us) {
    std::vector<PlanarPoint> path = pts;
    if (closed) path.push_back(pts.front());
    std::vector<double> cum{0.0};
    for (std::size_t i = 1; i < path.size(); ++i) {
        cum.push_back(cum.back() + std::hypot(path[i].x_m - path[i - 1].x_m, path[i].y_m - path[i - 1].y_m));
    }
    const double length = cum.back();
    std::vector<GpsFix> fixes;
    for (std::int64_t t = 0; t <= duration_us + 1'000'000; t += 1'000'000) {
        double s = start_offset_m + speed_mps * static_cast<double>(t) * 1e-6;
        if (closed) {
            s = std::fmod(s, length);
        } else {
            s = std::min(s, length);
        }
        std::size_t seg = 1;
        while (seg + 1 < cum.size() && cum[seg] < s) ++seg;
        const double seg_len = cum[seg] - cum[seg - 1];
        const double w = seg_len > 0 ? (s - cum[seg - 1]) / seg_len : 0.0;
        const PlanarPoint a = path[seg - 1];
        const PlanarPoint b = path[seg];
        const PlanarPoint p{a.x_m + (b.x_m - a.x_m) * w, a.y_m + (b.y_m - a.y_m) * w};
        double heading = std::atan2(b.x_m - a.x_m, b.y_m - a.y_m) * 180.0 / std::numbers::pi;
        if (heading < 0) heading += 360.0;
        const LatLon g = frame.to_geo(p);
        fixes.push_back({t0_us + t, g.lat, g.lon, speed_mps, heading});
    }
    return MobilityTrace(id, std::move(fixes));
}

inline NodeConfig make_rsu(const std::string& id, std::uint8_t index, LatLon where, double height_m) {
    NodeConfig n;
    n.node_id = id;
    n.kind = NodeRole::RSU;
    n.position = FixedSite{where.lat, where.lon, height_m};
    n.jitter = JitterModel::testbed_default();
    n.nics = {{hp_rsu_profile(), MacAddress(0x02'00'00'00'00'00ULL | (std::uint64_t{index} << 8) | 0x01)},
              {lp_rsu_profile(), MacAddress(0x02'00'00'00'00'00ULL | (std::uint64_t{index} << 8) | 0x02)}};
    return n;
}

inline NodeConfig make_obu(const std::string& id, std::uint8_t index, MobilityTrace trace) {
    NodeConfig n;
    n.node_id = id;
    n.kind = NodeRole::OBU;
    n.position = std::move(trace);
    n.jitter = JitterModel::testbed_default();
    n.nics = {{hp_obu_profile(), MacAddress(0x02'00'00'00'00'00ULL | (std::uint64_t{index} << 8) | 0x01)},
              {lp_obu_profile(), MacAddress(0x02'00'00'00'00'00ULL | (std::uint64_t{index} << 8) | 0x02)}};
    return n;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"v2i-interferer", "v2i-solo", "v2v-highway",
                                                "v2i-interferer-calibrated", "v2i-solo-calibrated"};
    return names;
}

/// City loop shared by the V2I presets, in metres east/north of the origin.
inline std::vector<PlanarPoint> v2i_loop() {
    return {{0, 0}, {1600, 0}, {1600, 900}, {0, 900}};
}

/// Settings that reproduce a large interferer effect: the interferer's
/// generation interval is pushed below airtime + AIFS so it holds the channel
/// almost continuously and starves the RSUs of idle slots.
struct InterfererCalibration {
    double capture_threshold_db = 10.0;
    JitterModel interferer_jitter = JitterModel::empirical({{350, 1.0}});
};

/// Gap between the two vehicles of the V2I presets, along the loop.
inline constexpr double kConvoyGapM = 100.0;

/// Three RSUs (about 8 m, 5 m and 25 m above ground) around a city loop with
/// vehicle 1 driving the loop. With `interferer`, vehicle 2 follows it at
/// kConvoyGapM so both share RSU coverage. The calibration, when given,
/// applies to both variants so the pair stays comparable.
inline Scenario v2i_preset(bool interferer, std::int64_t duration_us = 300'000'000,
                           std::optional<InterfererCalibration> calibration = std::nullopt) {
    Scenario s;
    s.name = interferer ? "v2i-interferer" : "v2i-solo";
    s.duration_us = duration_us;
    s.channel.shadow_sigma_db = 4.0;
    s.channel.n_exp = calibrate_exponent(700.0, hp_rsu_profile(), hp_obu_profile(), s.channel);
    if (calibration) s.channel.capture_threshold_db = calibration->capture_threshold_db;
    const LocalFrame frame(kBristolOrigin);
    s.nodes.push_back(make_rsu("hydrogen", 1, frame.to_geo({300, 40}), 8.0));
    s.nodes.push_back(make_rsu("helium", 2, frame.to_geo({1560, 450}), 5.0));
    s.nodes.push_back(make_rsu("lithium", 3, frame.to_geo({700, 860}), 25.0));
    const auto loop = v2i_loop();
    constexpr double speed = 10.0;
    const double lap = 5000.0;
    s.nodes.push_back(make_obu("vehicle1", 11, polyline_trace("vehicle1", frame, loop, true, speed, 0.0, s.start_us, duration_us)));
    if (interferer) {
        auto v2 = make_obu("vehicle2", 12,
                           polyline_trace("vehicle2", frame, loop, true, speed, lap - kConvoyGapM, s.start_us, duration_us));
        if (calibration) v2.jitter = calibration->interferer_jitter;
        s.nodes.push_back(std::move(v2));
    }
    return s;
}

/// Two vehicles on opposing carriageways of a straight highway, crossing
/// half way through the run. The channel is calibrated so that the LP V2V
/// link reaches sensitivity at 80 m.
inline Scenario v2v_highway_preset(std::int64_t duration_us = 80'000'000) {
    Scenario s;
    s.name = "v2v-highway";
    s.duration_us = duration_us;
    s.channel.shadow_sigma_db = 2.0;
    s.channel.n_exp = calibrate_exponent(80.0, lp_obu_profile(), lp_obu_profile(), s.channel);
    const LocalFrame frame(LatLon{51.5190, -2.5560}); // M32 corridor, north-east Bristol
    constexpr double speed = 30.0;
    const double half = speed * static_cast<double>(duration_us) * 1e-6 / 2.0;
    const double length = 2.0 * half + 200.0;
    s.nodes.push_back(make_obu("vehicle1", 11,
                               polyline_trace("vehicle1", frame, {{-half, 0}, {-half + length, 0}}, false, speed, 0.0,
                                              s.start_us, duration_us)));
    s.nodes.push_back(make_obu("vehicle2", 12,
                               polyline_trace("vehicle2", frame, {{half, 10}, {half - length, 10}}, false, speed, 0.0,
                                              s.start_us, duration_us)));
    return s;
}

/// Builds a named preset, optionally with a different duration. Throws
/// ValidationError for unknown names.
inline Scenario make_preset(const std::string& name, std::optional<std::int64_t> duration_us = std::nullopt) {
    if (name == "v2v-highway") return v2v_highway_preset(duration_us.value_or(80'000'000));
    const std::int64_t d = duration_us.value_or(300'000'000);
    if (name == "v2i-interferer") return v2i_preset(true, d);
    if (name == "v2i-solo") return v2i_preset(false, d);
    if (name == "v2i-interferer-calibrated") return v2i_preset(true, d, InterfererCalibration{});
    if (name == "v2i-solo-calibrated") return v2i_preset(false, d, InterfererCalibration{});
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ValidationError({"unknown preset '" + name + "' (expected one of " + known + ")"});
}

} // namespace camnet
