#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "camnet/cam_codec.hpp"
#include "camnet/error.hpp"

namespace camnet {

/// Nominal length of one degree of latitude.
inline constexpr double kMetersPerDegreeLat = 111132.95;

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
    friend bool operator==(const LatLon&, const LatLon&) = default;
};

struct PlanarPoint {
    double x_m = 0.0; // east
    double y_m = 0.0; // north
};

/// Equirectangular tangent frame. Accurate to well under 0.1 % within a few
/// tens of kilometres of the origin.
class LocalFrame {
public:
    LocalFrame() = default;
    LocalFrame(double origin_lat, double origin_lon)
        : origin_lat_(origin_lat),
          origin_lon_(origin_lon),
          k_lat_(kMetersPerDegreeLat),
          k_lon_(kMetersPerDegreeLat * std::cos(origin_lat * std::numbers::pi / 180.0)) {}
    explicit LocalFrame(LatLon origin) : LocalFrame(origin.lat, origin.lon) {}

    double origin_lat() const noexcept { return origin_lat_; }
    double origin_lon() const noexcept { return origin_lon_; }
    double k_lat() const noexcept { return k_lat_; }
    double k_lon() const noexcept { return k_lon_; }

    PlanarPoint to_local(double lat, double lon) const noexcept {
        return {(lon - origin_lon_) * k_lon_, (lat - origin_lat_) * k_lat_};
    }
    PlanarPoint to_local(LatLon p) const noexcept { return to_local(p.lat, p.lon); }

    LatLon to_geo(PlanarPoint p) const noexcept {
        return {origin_lat_ + p.y_m / k_lat_, origin_lon_ + p.x_m / k_lon_};
    }

private:
    double origin_lat_ = 0.0;
    double origin_lon_ = 0.0;
    double k_lat_ = kMetersPerDegreeLat;
    double k_lon_ = kMetersPerDegreeLat;
};

/// Planar distance between two points. The frame is anchored at `a` with the
/// longitude scale taken at the mean latitude, which keeps the result
/// symmetric in its arguments.
inline double distance_m(LatLon a, LatLon b) noexcept {
    const LocalFrame frame(0.5 * (a.lat + b.lat), a.lon);
    const PlanarPoint pa = frame.to_local(a);
    const PlanarPoint pb = frame.to_local(b);
    return std::hypot(pb.x_m - pa.x_m, pb.y_m - pa.y_m);
}

struct GpsFix {
    std::int64_t t_us = 0; // Unix epoch microseconds
    double lat = 0.0;
    double lon = 0.0;
    double speed = 0.0;   // m/s
    double heading = 0.0; // degrees

    friend bool operator==(const GpsFix&, const GpsFix&) = default;
};

struct TraceSample {
    double lat = 0.0;
    double lon = 0.0;
    double speed = 0.0;
    LatLon position() const noexcept { return {lat, lon}; }
};

/// Time-ordered GPS fixes of one node. Immutable once built.
class MobilityTrace {
public:
    MobilityTrace(std::string node_id, std::vector<GpsFix> fixes)
        : node_id_(std::move(node_id)), fixes_(std::move(fixes)) {
        if (fixes_.empty()) throw DomainError("trace '" + node_id_ + "' has no fixes");
        for (std::size_t i = 1; i < fixes_.size(); ++i) {
            if (fixes_[i].t_us <= fixes_[i - 1].t_us) {
                throw DomainError("trace '" + node_id_ + "' timestamps not strictly increasing at fix " +
                                  std::to_string(i));
            }
        }
    }

    const std::string& node_id() const noexcept { return node_id_; }
    std::span<const GpsFix> fixes() const noexcept { return fixes_; }
    std::int64_t start_us() const noexcept { return fixes_.front().t_us; }
    std::int64_t end_us() const noexcept { return fixes_.back().t_us; }
    bool covers(std::int64_t t_us) const noexcept { return t_us >= start_us() && t_us <= end_us(); }

    /// Most recent fix at or before `t_us`.
    const GpsFix& latest_fix(std::int64_t t_us) const {
        check_span(t_us);
        auto it = std::upper_bound(fixes_.begin(), fixes_.end(), t_us,
                                   [](std::int64_t t, const GpsFix& f) { return t < f.t_us; });
        return *std::prev(it);
    }

    /// Linear interpolation of position and speed; exact at fix timestamps.
    TraceSample interpolate(std::int64_t t_us) const {
        check_span(t_us);
        auto hi = std::lower_bound(fixes_.begin(), fixes_.end(), t_us,
                                   [](const GpsFix& f, std::int64_t t) { return f.t_us < t; });
        if (hi->t_us == t_us) return {hi->lat, hi->lon, hi->speed};
        const GpsFix& b = *hi;
        const GpsFix& a = *std::prev(hi);
        const double w = static_cast<double>(t_us - a.t_us) / static_cast<double>(b.t_us - a.t_us);
        return {lerp_clamped(a.lat, b.lat, w), lerp_clamped(a.lon, b.lon, w), lerp_clamped(a.speed, b.speed, w)};
    }

private:
    void check_span(std::int64_t t_us) const {
        if (!covers(t_us)) {
            throw OutOfRange("t=" + std::to_string(t_us) + " outside trace '" + node_id_ + "' [" +
                             std::to_string(start_us()) + ", " + std::to_string(end_us()) + "]");
        }
    }

    static double lerp_clamped(double a, double b, double w) noexcept {
        const double v = a + (b - a) * w;
        return std::clamp(v, std::min(a, b), std::max(a, b));
    }

    std::string node_id_;
    std::vector<GpsFix> fixes_;
};

// ---------------------------------------------------------------------------
// Trace files: `node_id,t_us,lat,lon,speed,heading`
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTraceHeader = "node_id,t_us,lat,lon,speed,heading";

inline std::vector<MobilityTrace> parse_traces(std::istream& in, const std::string& path) {
    std::map<std::string, std::vector<GpsFix>> by_node;
    std::vector<std::string> order;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (lineno == 1 && line == kTraceHeader) continue;
        const auto c = detail::split_csv(line);
        if (c.size() != 6) {
            throw ParseError(path, lineno, "expected 6 columns, got " + std::to_string(c.size()));
        }
        try {
            GpsFix f;
            f.t_us = detail::parse_uint<std::int64_t>(c[1], "t_us");
            auto num = [&](std::string_view s, const char* col) {
                double v = 0.0;
                const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
                if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
                    throw ValueError(col, "not a number: '" + std::string(s) + "'");
                }
                return v;
            };
            f.lat = num(c[2], "lat");
            f.lon = num(c[3], "lon");
            f.speed = num(c[4], "speed");
            f.heading = num(c[5], "heading");
            detail::check_lat(f.lat, "lat");
            detail::check_lon(f.lon, "lon");
            std::string id(c[0]);
            auto [it, inserted] = by_node.try_emplace(id);
            if (inserted) order.push_back(id);
            it->second.push_back(f);
        } catch (const Error& e) {
            throw ParseError(path, lineno, e.what());
        }
    }
    std::vector<MobilityTrace> traces;
    for (const auto& id : order) {
        try {
            traces.emplace_back(id, std::move(by_node[id]));
        } catch (const Error& e) {
            throw ParseError(path, lineno, e.what());
        }
    }
    return traces;
}

inline std::vector<MobilityTrace> read_traces(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open trace file");
    return parse_traces(in, path);
}

} // namespace camnet
