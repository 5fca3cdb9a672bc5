#pragma once

// Implementations of the camnet subcommands. Each returns a process exit
// status (0 ok, 1 validation or parse error, 2 internal error) and reports
// through the given streams.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "camnet/analysis.hpp"
#include "camnet/config.hpp"
#include "camnet/engine.hpp"
#include "camnet/error.hpp"
#include "camnet/log_io.hpp"

namespace camnet {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitInternal = 2;

struct SimulateOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::string> preset;
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> duration_s;
    bool print_config = false;
};

/// `--seed` wins over CAMNET_SEED, which wins over the scenario's own seed.
inline std::uint64_t resolve_seed(const Scenario& s, std::optional<std::uint64_t> flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("CAMNET_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw ValidationError({std::string("CAMNET_SEED is not an unsigned integer: '") + env + "'"});
    }
    return s.seed;
}

namespace detail {

inline int report(std::ostream& err, const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    for (const auto& v : e.violations()) err << "  - " << v << '\n';
    return kExitInvalid;
}

/// Runs `body`, mapping library exceptions onto exit statuses.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ValidationError& e) {
        return report(err, e);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

} // namespace detail

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        if (o.config.has_value() == o.preset.has_value()) {
            throw ValidationError({"exactly one of --config or --preset is required"});
        }
        std::optional<std::int64_t> duration;
        if (o.duration_s) {
            if (!(*o.duration_s > 0)) throw ValidationError({"--duration must be > 0"});
            duration = std::llround(*o.duration_s * 1e6);
        }
        Scenario s = o.config ? load_scenario(*o.config) : make_preset(*o.preset, duration);
        if (o.config && duration) s.duration_us = *duration;
        const std::uint64_t seed = resolve_seed(s, o.seed);
        s.seed = seed;
        if (o.print_config) {
            out << scenario_to_json(s).dump(2) << '\n';
            return kExitOk;
        }
        const RunResult r = run(s, seed);
        write_run(o.out_dir, s, seed, r);
        std::ofstream cfg(o.out_dir / "config.json", std::ios::binary);
        cfg << scenario_to_json(s).dump(2) << '\n';
        out << format_summary(s, seed, r.summary);
        return kExitOk;
    });
}

enum class Kpi { PdrHeatmap, Intervals, Horizon, Uplink };

inline std::optional<Kpi> parse_kpi(std::string_view s) {
    if (s == "pdr-heatmap") return Kpi::PdrHeatmap;
    if (s == "intervals") return Kpi::Intervals;
    if (s == "horizon") return Kpi::Horizon;
    if (s == "uplink") return Kpi::Uplink;
    return std::nullopt;
}

struct AnalyzeOptions {
    std::filesystem::path log_dir;
    Kpi kpi = Kpi::PdrHeatmap;
    std::filesystem::path out_dir;
    double cell_size_m = 25.0;
    std::uint64_t min_samples = 20;
    std::int64_t bin_width_us = 1000;
    double horizon_bin_m = 10.0;
    std::optional<Nic> nic;
    std::vector<std::string> rsus; // node ids; empty means auto-detect static nodes
};

/// One NIC's logs as found on disk, with its node and role.
struct LoggedNic {
    std::string stem;
    std::string node;
    Nic nic = Nic::HP;
    bool fixed = false;
    const std::vector<TxLogRecord>* tx = nullptr;
    const std::vector<RxLogRecord>* rx = nullptr;
};

/// Groups a log set by NIC. Stems follow `<node>_<HP|LP>`. A node is fixed
/// when listed in `rsus`, or, with `rsus` empty, when every position it
/// logged is identical.
inline std::vector<LoggedNic> classify_logs(const LogSet& set, const std::vector<std::string>& rsus) {
    static const std::vector<RxLogRecord> kNoRx;
    std::vector<LoggedNic> out;
    for (const auto& [stem, tx] : set.tx) {
        LoggedNic n;
        n.stem = stem;
        const auto us = stem.rfind('_');
        const auto nic = us == std::string::npos ? std::nullopt : parse_nic(stem.substr(us + 1));
        n.node = us == std::string::npos ? stem : stem.substr(0, us);
        n.nic = nic ? *nic : (tx.empty() ? Nic::HP : tx.front().nic);
        n.tx = &tx;
        const auto rx = set.rx.find(stem);
        n.rx = rx == set.rx.end() ? &kNoRx : &rx->second;
        if (!rsus.empty()) {
            n.fixed = std::find(rsus.begin(), rsus.end(), n.node) != rsus.end();
        } else {
            n.fixed = !tx.empty() && std::all_of(tx.begin(), tx.end(), [&](const TxLogRecord& r) {
                return r.inter_lat == tx.front().inter_lat && r.inter_lon == tx.front().inter_lon;
            });
        }
        out.push_back(n);
    }
    return out;
}

/// Common local frame for a log set: the first logged position.
inline LocalFrame frame_for(const std::vector<LoggedNic>& nics) {
    for (const auto& n : nics) {
        if (!n.tx->empty()) return LocalFrame(n.tx->front().inter_lat.value(), n.tx->front().inter_lon.value());
    }
    return LocalFrame(0.0, 0.0);
}

/// One fixed unit's link towards a vehicle NIC.
struct DownlinkMap {
    const LoggedNic* rsu = nullptr;
    GridHeatmap map;
    OverlapCount uplink;                // vehicle frames the same unit received
    std::vector<LatLon> uplink_points;
};

/// Per-link downlink heatmaps for one vehicle NIC, one per fixed unit on the
/// same channel, each paired with that unit's uplink receptions.
inline std::vector<DownlinkMap> downlink_maps(const std::vector<LoggedNic>& nics, const LoggedNic& vehicle,
                                              const LocalFrame& frame, double cell_size_m, std::uint64_t min_samples) {
    std::vector<DownlinkMap> out;
    const MobilityTrace trace = trace_from_tx_log(vehicle.node, *vehicle.tx);
    for (const auto& n : nics) {
        if (!n.fixed || n.nic != vehicle.nic || n.tx->empty()) continue;
        DownlinkMap d;
        d.rsu = &n;
        d.map = pdr_heatmap(join_link(*n.tx, *vehicle.rx), trace, frame, cell_size_m, min_samples);
        d.uplink_points = uplink_positions(*n.rx, *vehicle.tx);
        d.uplink = count_overlap(d.uplink_points, d.map);
        out.push_back(std::move(d));
    }
    return out;
}

inline int cmd_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        if (!std::filesystem::is_directory(o.log_dir)) {
            throw ValidationError({"log directory not found: " + o.log_dir.string()});
        }
        const LogSet set = read_log_dir(o.log_dir);
        if (set.tx.empty()) throw ValidationError({"no TX logs in " + o.log_dir.string()});
        const auto nics = classify_logs(set, o.rsus);
        const auto out_dir = o.out_dir.empty() ? o.log_dir : o.out_dir;
        std::filesystem::create_directories(out_dir);
        const LocalFrame frame = frame_for(nics);
        auto selected = [&](const LoggedNic& n) { return !o.nic || n.nic == *o.nic; };
        auto open = [&](const std::string& name) {
            std::ofstream f(out_dir / name, std::ios::binary);
            if (!f) throw Error("cannot write " + (out_dir / name).string());
            out << "wrote " << (out_dir / name).string() << '\n';
            return f;
        };

        switch (o.kpi) {
        case Kpi::Intervals:
            for (const auto& n : nics) {
                if (!selected(n)) continue;
                auto f = open("intervals_" + n.stem + ".csv");
                write_histogram_csv(f, interval_histogram(*n.tx, o.bin_width_us));
            }
            break;
        case Kpi::PdrHeatmap:
            for (const auto& v : nics) {
                if (v.fixed || !selected(v) || v.tx->empty()) continue;
                for (const auto& d : downlink_maps(nics, v, frame, o.cell_size_m, o.min_samples)) {
                    auto f = open("heatmap_" + d.rsu->stem + "_to_" + v.node + ".csv");
                    write_heatmap_csv(f, d.map);
                    if (d.map.excluded > 0) out << "  excluded " << d.map.excluded << " TX records outside the trace\n";
                }
            }
            break;
        case Kpi::Uplink:
            for (const auto& v : nics) {
                if (v.fixed || !selected(v) || v.tx->empty()) continue;
                OverlapCount total;
                for (const auto& d : downlink_maps(nics, v, frame, o.cell_size_m, o.min_samples)) {
                    auto f = open("uplink_" + v.stem + "_to_" + d.rsu->node + ".csv");
                    write_positions_csv(f, d.uplink_points);
                    total += d.uplink;
                }
                if (const auto ov = total.fraction()) {
                    out << "  " << v.stem << " uplink overlap with downlink cells: " << detail::fixed_str(*ov, 4) << '\n';
                }
            }
            break;
        case Kpi::Horizon:
            for (const auto& a : nics) {
                if (a.fixed || !selected(a) || a.tx->empty()) continue;
                for (const auto& b : nics) {
                    if (b.fixed || b.node == a.node || b.nic != a.nic || b.tx->empty()) continue;
                    const LinkLog link = join_link(*a.tx, *b.rx);
                    const auto h = awareness_horizon(link, trace_from_tx_log(a.node, *a.tx),
                                                     trace_from_tx_log(b.node, *b.tx), o.horizon_bin_m);
                    auto f = open("horizon_" + a.stem + "_to_" + b.node + ".csv");
                    write_horizon_csv(f, h, true);
                    if (h.excluded > 0) out << "  excluded " << h.excluded << " receptions outside the traces\n";
                }
            }
            break;
        }
        return kExitOk;
    });
}

/// Normalizes a directory of TX/RX logs (headered or headerless, any file
/// extension among .log/.csv/.txt, searched recursively) into canonical
/// `<stem>_tx.log` / `<stem>_rx.log` files in `out_dir`.
inline int cmd_replay(const std::filesystem::path& dataset_dir, const std::filesystem::path& out_dir, std::ostream& out,
                      std::ostream& err) {
    return detail::guarded(err, [&] {
        namespace fs = std::filesystem;
        if (!fs::is_directory(dataset_dir)) throw ValidationError({"dataset directory not found: " + dataset_dir.string()});
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(dataset_dir)) {
            const auto ext = e.path().extension().string();
            if (e.is_regular_file() && (ext == ".log" || ext == ".csv" || ext == ".txt")) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw ValidationError({"no log files in " + dataset_dir.string()});

        LogSet set;
        for (const auto& p : files) {
            const auto kind = sniff_log_kind(p);
            if (!kind) {
                std::ifstream in(p, std::ios::binary);
                std::string line;
                std::size_t no = 0;
                while (std::getline(in, line)) {
                    ++no;
                    if (!line.empty() && line.back() == '\r') line.pop_back();
                    if (!line.empty()) break;
                }
                throw ParseError(p.string(), no, "unrecognized log layout: '" + line + "'");
            }
            std::string stem = p.stem().string();
            if (stem.ends_with("_tx") || stem.ends_with("_rx")) stem.resize(stem.size() - 3);
            if (*kind == LogKind::Tx) {
                auto recs = read_tx_log(p);
                auto& dst = set.tx[stem];
                dst.insert(dst.end(), recs.begin(), recs.end());
            } else {
                auto recs = read_rx_log(p);
                auto& dst = set.rx[stem];
                dst.insert(dst.end(), recs.begin(), recs.end());
            }
        }
        fs::create_directories(out_dir);
        for (const auto& [stem, recs] : set.tx) write_log_file(out_dir / (stem + "_tx.log"), recs);
        for (const auto& [stem, recs] : set.rx) write_log_file(out_dir / (stem + "_rx.log"), recs);
        out << "replayed " << set.tx.size() << " TX and " << set.rx.size() << " RX logs into " << out_dir.string()
            << '\n';
        return kExitOk;
    });
}

} // namespace camnet
