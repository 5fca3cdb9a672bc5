#pragma once

// KPIs over TX/RX logs, simulated or recorded in the field.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "camnet/cam_codec.hpp"
#include "camnet/error.hpp"
#include "camnet/geo.hpp"

namespace camnet {

/// Session index of every record; a new session starts wherever SeqNum
/// decreases (the counter restarts at zero when a device boots).
inline std::vector<std::uint32_t> boot_sessions(std::span<const TxLogRecord> tx) {
    std::vector<std::uint32_t> out(tx.size(), 0);
    std::uint32_t session = 0;
    for (std::size_t i = 1; i < tx.size(); ++i) {
        if (tx[i].seq_num < tx[i - 1].seq_num) ++session;
        out[i] = session;
    }
    return out;
}

inline std::size_t count_sessions(std::span<const TxLogRecord> tx) {
    return tx.empty() ? 0 : static_cast<std::size_t>(boot_sessions(tx).back()) + 1;
}

struct LinkEntry {
    TxLogRecord tx;
    std::optional<RxLogRecord> rx;
    std::uint32_t session = 0;
};

/// TX records of one transmitting NIC joined with one receiver's RX log.
struct LinkLog {
    MacAddress src_mac;
    Nic nic = Nic::HP;
    std::vector<LinkEntry> entries;
    std::vector<RxLogRecord> anomalies; // RX records with no TX counterpart
    std::size_t sessions = 0;

    std::size_t matched() const {
        return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.rx.has_value(); }));
    }
    double pdr() const {
        return entries.empty() ? 0.0 : static_cast<double>(matched()) / static_cast<double>(entries.size());
    }
};

/// Matches RX records to TX records on (SrcMac, SeqNum) inside boot sessions.
/// An RX record belongs to the latest session whose first frame was generated
/// at or before the record's carried Timestamp. RX records from other
/// transmitters are ignored.
inline LinkLog join_link(std::span<const TxLogRecord> tx, std::span<const RxLogRecord> rx) {
    LinkLog link;
    if (tx.empty()) return link;
    link.src_mac = tx.front().src_mac;
    link.nic = tx.front().nic;
    const auto sessions = boot_sessions(tx);
    link.sessions = static_cast<std::size_t>(sessions.back()) + 1;

    std::vector<std::int64_t> session_start(link.sessions, 0);
    std::vector<std::unordered_map<std::uint32_t, std::size_t>> index(link.sessions);
    link.entries.reserve(tx.size());
    for (std::size_t i = 0; i < tx.size(); ++i) {
        const auto& r = tx[i];
        if (r.src_mac != link.src_mac || r.nic != link.nic) {
            throw IntegrityError("TX log mixes transmitters: " + link.src_mac.to_string() + " and " +
                                 r.src_mac.to_string());
        }
        const std::uint32_t s = sessions[i];
        if (i == 0 || sessions[i - 1] != s) session_start[s] = r.timestamp_us();
        if (!index[s].emplace(r.seq_num, i).second) {
            throw IntegrityError("duplicate SeqNum " + std::to_string(r.seq_num) + " in boot session " +
                                 std::to_string(s) + " of " + link.src_mac.to_string());
        }
        link.entries.push_back({r, std::nullopt, s});
    }

    for (const auto& r : rx) {
        if (r.rx_mac != link.src_mac) continue;
        const auto it = std::upper_bound(session_start.begin(), session_start.end(), r.timestamp_us());
        if (it == session_start.begin()) {
            link.anomalies.push_back(r);
            continue;
        }
        const auto s = static_cast<std::size_t>(std::distance(session_start.begin(), it) - 1);
        const auto hit = index[s].find(r.seq_num);
        if (hit == index[s].end()) {
            link.anomalies.push_back(r);
            continue;
        }
        auto& entry = link.entries[hit->second];
        if (entry.rx) {
            throw IntegrityError("SeqNum " + std::to_string(r.seq_num) + " from " + link.src_mac.to_string() +
                                 " received twice in boot session " + std::to_string(s));
        }
        entry.rx = r;
    }
    return link;
}

/// Rebuilds a node's trajectory from the interpolated positions it logged
/// while transmitting.
inline MobilityTrace trace_from_tx_log(std::string node_id, std::span<const TxLogRecord> tx) {
    std::vector<GpsFix> fixes;
    fixes.reserve(tx.size());
    for (const auto& r : tx) {
        fixes.push_back({r.timestamp_us(), r.inter_lat.value(), r.inter_lon.value(), r.inter_speed.value(),
                         r.heading.value()});
    }
    std::stable_sort(fixes.begin(), fixes.end(), [](const auto& a, const auto& b) { return a.t_us < b.t_us; });
    fixes.erase(std::unique(fixes.begin(), fixes.end(), [](const auto& a, const auto& b) { return a.t_us == b.t_us; }),
                fixes.end());
    return MobilityTrace(std::move(node_id), std::move(fixes));
}

// ---------------------------------------------------------------------------
// PDR heatmap
// ---------------------------------------------------------------------------

struct HeatCell {
    std::int64_t cx = 0;
    std::int64_t cy = 0;
    std::uint64_t tx = 0;
    std::uint64_t rx = 0;
    double pdr() const noexcept { return tx == 0 ? 0.0 : static_cast<double>(rx) / static_cast<double>(tx); }
};

struct GridHeatmap {
    LocalFrame frame;
    double cell_size_m = 25.0;
    std::uint64_t min_samples = 20;
    std::map<std::pair<std::int64_t, std::int64_t>, HeatCell> cells;
    std::uint64_t excluded = 0; // TX records outside the receiver's position span

    bool sufficient(const HeatCell& c) const noexcept { return c.tx >= min_samples; }

    std::pair<std::int64_t, std::int64_t> cell_of(LatLon p) const {
        const PlanarPoint q = frame.to_local(p);
        return {static_cast<std::int64_t>(std::floor(q.x_m / cell_size_m)),
                static_cast<std::int64_t>(std::floor(q.y_m / cell_size_m))};
    }

    LatLon center(const HeatCell& c) const {
        return frame.to_geo({(static_cast<double>(c.cx) + 0.5) * cell_size_m, (static_cast<double>(c.cy) + 0.5) * cell_size_m});
    }

    const HeatCell* find(LatLon p) const {
        const auto it = cells.find(cell_of(p));
        return it == cells.end() ? nullptr : &it->second;
    }
};

/// Adds one link to a heatmap. Each TX record lands in the cell holding the
/// receiver's position at the TX timestamp.
inline void accumulate_heatmap(GridHeatmap& map, const LinkLog& link, const MobilityTrace& receiver) {
    for (const auto& e : link.entries) {
        const std::int64_t t = e.tx.timestamp_us();
        if (!receiver.covers(t)) {
            ++map.excluded;
            continue;
        }
        const auto pos = receiver.interpolate(t).position();
        const auto key = map.cell_of(pos);
        auto& cell = map.cells[key];
        cell.cx = key.first;
        cell.cy = key.second;
        ++cell.tx;
        if (e.rx) ++cell.rx;
    }
}

inline GridHeatmap pdr_heatmap(std::span<const LinkLog> links, const MobilityTrace& receiver, const LocalFrame& frame,
                               double cell_size_m = 25.0, std::uint64_t min_samples = 20) {
    if (!(cell_size_m > 0.0)) throw DomainError("cell size must be > 0");
    GridHeatmap map;
    map.frame = frame;
    map.cell_size_m = cell_size_m;
    map.min_samples = min_samples;
    for (const auto& l : links) accumulate_heatmap(map, l, receiver);
    return map;
}

inline GridHeatmap pdr_heatmap(const LinkLog& link, const MobilityTrace& receiver, const LocalFrame& frame,
                               double cell_size_m = 25.0, std::uint64_t min_samples = 20) {
    return pdr_heatmap(std::span<const LinkLog>(&link, 1), receiver, frame, cell_size_m, min_samples);
}

struct HeatmapComparison {
    std::size_t shared_cells = 0;
    double mean_pdr_a = 0.0;
    double mean_pdr_b = 0.0;
    double drop() const noexcept { return mean_pdr_a - mean_pdr_b; }
};

namespace detail {

inline void add_shared(HeatmapComparison& c, const GridHeatmap& a, const GridHeatmap& b) {
    for (const auto& [key, ca] : a.cells) {
        const auto it = b.cells.find(key);
        if (it == b.cells.end() || !a.sufficient(ca) || !b.sufficient(it->second)) continue;
        ++c.shared_cells;
        c.mean_pdr_a += ca.pdr();
        c.mean_pdr_b += it->second.pdr();
    }
}

inline HeatmapComparison finish(HeatmapComparison c) {
    if (c.shared_cells > 0) {
        c.mean_pdr_a /= static_cast<double>(c.shared_cells);
        c.mean_pdr_b /= static_cast<double>(c.shared_cells);
    }
    return c;
}

} // namespace detail

/// Mean PDR of `a` and `b` over the cells that are sufficient in both.
inline HeatmapComparison compare_heatmaps(const GridHeatmap& a, const GridHeatmap& b) {
    HeatmapComparison c;
    detail::add_shared(c, a, b);
    return detail::finish(c);
}

/// Pairwise version for per-link heatmaps: `a[i]` is compared with `b[i]`
/// and every shared (link, cell) pair weighs the same.
inline HeatmapComparison compare_heatmaps(std::span<const GridHeatmap> a, std::span<const GridHeatmap> b) {
    if (a.size() != b.size()) throw DomainError("heatmap lists differ in length");
    HeatmapComparison c;
    for (std::size_t i = 0; i < a.size(); ++i) detail::add_shared(c, a[i], b[i]);
    return detail::finish(c);
}

// ---------------------------------------------------------------------------
// Transmission intervals
// ---------------------------------------------------------------------------

struct IntervalHistogram {
    std::int64_t bin_width_us = 1000;
    std::map<std::int64_t, std::uint64_t> counts; // bin start -> count

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (const auto& [_, c] : counts) n += c;
        return n;
    }
};

/// Histogram of consecutive Timestamp deltas; deltas across a reboot are skipped.
inline IntervalHistogram interval_histogram(std::span<const TxLogRecord> tx, std::int64_t bin_width_us = 1000) {
    if (bin_width_us <= 0) throw DomainError("bin width must be > 0");
    IntervalHistogram h;
    h.bin_width_us = bin_width_us;
    for (std::size_t i = 1; i < tx.size(); ++i) {
        if (tx[i].seq_num < tx[i - 1].seq_num) continue;
        const std::int64_t delta = tx[i].timestamp_us() - tx[i - 1].timestamp_us();
        const std::int64_t bin = (delta >= 0 ? delta / bin_width_us : (delta - bin_width_us + 1) / bin_width_us) * bin_width_us;
        ++h.counts[bin];
    }
    return h;
}

/// Total-variation distance between a histogram and a discrete distribution
/// over the same bin starts.
inline double total_variation(const IntervalHistogram& h, const std::map<std::int64_t, double>& dist) {
    const double n = static_cast<double>(h.total());
    std::map<std::int64_t, double> diff;
    for (const auto& [bin, p] : dist) {
        diff[(bin / h.bin_width_us) * h.bin_width_us] -= p;
    }
    for (const auto& [bin, c] : h.counts) diff[bin] += n > 0 ? static_cast<double>(c) / n : 0.0;
    double tv = 0.0;
    for (const auto& [_, d] : diff) tv += std::abs(d);
    return 0.5 * tv;
}

// ---------------------------------------------------------------------------
// Awareness horizon
// ---------------------------------------------------------------------------

struct HorizonBin {
    std::uint64_t rx = 0;      // delivered frames, binned by distance at reception
    std::uint64_t offered = 0; // generated frames, binned by distance at generation
    std::optional<double> ratio() const {
        if (offered == 0) return std::nullopt;
        return static_cast<double>(rx) / static_cast<double>(offered);
    }
};

struct HorizonHistogram {
    double bin_m = 10.0;
    std::map<std::int64_t, HorizonBin> bins; // bin index -> counts
    std::uint64_t excluded = 0;              // delivered frames outside a trace span

    double bin_start(std::int64_t index) const { return static_cast<double>(index) * bin_m; }
    std::uint64_t delivered() const {
        std::uint64_t n = 0;
        for (const auto& [_, b] : bins) n += b.rx;
        return n;
    }
    /// Share of delivered frames received at or below `distance_m`.
    double mass_within(double distance_m) const {
        const std::uint64_t total = delivered();
        if (total == 0) return 0.0;
        std::uint64_t n = 0;
        for (const auto& [i, b] : bins) {
            if (bin_start(i) + bin_m <= distance_m + 1e-9) n += b.rx;
        }
        return static_cast<double>(n) / static_cast<double>(total);
    }
};

inline HorizonHistogram awareness_horizon(const LinkLog& link, const MobilityTrace& tx_trace,
                                          const MobilityTrace& rx_trace, double bin_m = 10.0) {
    if (!(bin_m > 0.0)) throw DomainError("bin width must be > 0");
    HorizonHistogram h;
    h.bin_m = bin_m;
    auto distance_at = [&](std::int64_t t) -> std::optional<double> {
        if (!tx_trace.covers(t) || !rx_trace.covers(t)) return std::nullopt;
        return distance_m(tx_trace.interpolate(t).position(), rx_trace.interpolate(t).position());
    };
    auto bin_of = [&](double d) { return static_cast<std::int64_t>(std::floor(d / bin_m)); };
    for (const auto& e : link.entries) {
        if (const auto d = distance_at(e.tx.timestamp_us())) ++h.bins[bin_of(*d)].offered;
        if (!e.rx) continue;
        if (const auto d = distance_at(e.rx->local_rx_time_us())) {
            ++h.bins[bin_of(*d)].rx;
        } else {
            ++h.excluded;
        }
    }
    return h;
}

// ---------------------------------------------------------------------------
// Uplink positions
// ---------------------------------------------------------------------------

/// Vehicle positions (as carried in its frames) for every frame the RSU
/// received from that vehicle. `vehicle_tx` identifies the vehicle NIC.
inline std::vector<LatLon> uplink_positions(std::span<const RxLogRecord> rsu_rx,
                                            std::span<const TxLogRecord> vehicle_tx) {
    std::vector<LatLon> out;
    if (vehicle_tx.empty()) return out;
    const MacAddress mac = vehicle_tx.front().src_mac;
    for (const auto& r : rsu_rx) {
        if (r.rx_mac == mac) out.push_back({r.rx_lat.value(), r.rx_lon.value()});
    }
    return out;
}

struct OverlapCount {
    std::size_t hits = 0;
    std::size_t total = 0;
    std::optional<double> fraction() const {
        if (total == 0) return std::nullopt;
        return static_cast<double>(hits) / static_cast<double>(total);
    }
    OverlapCount& operator+=(const OverlapCount& o) {
        hits += o.hits;
        total += o.total;
        return *this;
    }
};

/// Uplink positions that fall in a downlink cell with PDR > 0, out of all.
inline OverlapCount count_overlap(std::span<const LatLon> uplink, const GridHeatmap& downlink) {
    OverlapCount n;
    n.total = uplink.size();
    for (const auto& p : uplink) {
        const HeatCell* c = downlink.find(p);
        if (c && c->rx > 0) ++n.hits;
    }
    return n;
}

/// Fraction of uplink positions that fall in a downlink cell with PDR > 0.
inline std::optional<double> uplink_overlap(std::span<const LatLon> uplink, const GridHeatmap& downlink) {
    return count_overlap(uplink, downlink).fraction();
}

// ---------------------------------------------------------------------------
// Exports (CSV with header rows)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fixed_str(double v, int places) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", places, v);
    return buf;
}

} // namespace detail

/// Sufficient cells only.
inline void write_heatmap_csv(std::ostream& out, const GridHeatmap& map) {
    out << "cell_x,cell_y,lat,lon,tx,rx,pdr\n";
    for (const auto& [_, c] : map.cells) {
        if (!map.sufficient(c)) continue;
        const LatLon ctr = map.center(c);
        out << c.cx << ',' << c.cy << ',' << detail::fixed_str(ctr.lat, 7) << ',' << detail::fixed_str(ctr.lon, 7) << ','
            << c.tx << ',' << c.rx << ',' << detail::fixed_str(c.pdr(), 6) << '\n';
    }
}

inline void write_histogram_csv(std::ostream& out, const IntervalHistogram& h) {
    out << "bin_start,count\n";
    for (const auto& [bin, c] : h.counts) out << bin << ',' << c << '\n';
}

inline void write_horizon_csv(std::ostream& out, const HorizonHistogram& h, bool normalized = false) {
    out << (normalized ? "bin_start,count,offered,ratio\n" : "bin_start,count\n");
    for (const auto& [i, b] : h.bins) {
        out << detail::fixed_str(h.bin_start(i), 1) << ',' << b.rx;
        if (normalized) {
            const auto r = b.ratio();
            out << ',' << b.offered << ',' << (r ? detail::fixed_str(*r, 6) : std::string("0.000000"));
        }
        out << '\n';
    }
}

inline void write_positions_csv(std::ostream& out, std::span<const LatLon> positions) {
    out << "lat,lon\n";
    for (const auto& p : positions) out << detail::fixed_str(p.lat, 7) << ',' << detail::fixed_str(p.lon, 7) << '\n';
}

} // namespace camnet
