#pragma once

// Log files on disk: one `<node>_<nic>_tx.log` / `<node>_<nic>_rx.log` pair
// per NIC, UTF-8, LF line endings, header row first.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "camnet/cam_codec.hpp"
#include "camnet/engine.hpp"
#include "camnet/error.hpp"

namespace camnet {

enum class LogKind { Tx, Rx };

template <typename Record>
std::string format_record(const Record& r) {
    if constexpr (std::is_same_v<Record, TxLogRecord>) {
        return format_tx_log(r);
    } else {
        return format_rx_log(r);
    }
}

template <typename Record>
constexpr std::string_view header_for() {
    if constexpr (std::is_same_v<Record, TxLogRecord>) {
        return kTxLogHeader;
    } else {
        return kRxLogHeader;
    }
}

template <typename Record>
void write_log(std::ostream& out, const std::vector<Record>& records) {
    out << header_for<Record>() << '\n';
    for (const auto& r : records) out << format_record(r) << '\n';
}

template <typename Record>
void write_log_file(const std::filesystem::path& path, const std::vector<Record>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_log(out, records);
}

/// Reads a log, with or without its header row (headerless files must use
/// the canonical column order).
template <typename Record>
std::vector<Record> parse_log(std::istream& in, const std::string& path) {
    std::vector<Record> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line == header_for<Record>()) continue;
        try {
            if constexpr (std::is_same_v<Record, TxLogRecord>) {
                out.push_back(parse_tx_log(line));
            } else {
                out.push_back(parse_rx_log(line));
            }
        } catch (const Error& e) {
            throw ParseError(path, lineno, e.what());
        }
    }
    return out;
}

template <typename Record>
std::vector<Record> read_log_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open log file");
    return parse_log<Record>(in, path.string());
}

inline std::vector<TxLogRecord> read_tx_log(const std::filesystem::path& p) { return read_log_file<TxLogRecord>(p); }
inline std::vector<RxLogRecord> read_rx_log(const std::filesystem::path& p) { return read_log_file<RxLogRecord>(p); }

/// Identifies which log a file holds from its first non-empty line: a known
/// header, or the column count of a headerless data line.
inline std::optional<LogKind> sniff_log_kind(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line == kTxLogHeader) return LogKind::Tx;
        if (line == kRxLogHeader) return LogKind::Rx;
        const auto cols = detail::split_csv(line);
        if (cols.size() == kTxLogColumns) return LogKind::Tx;
        if (cols.size() == kRxLogColumns) return LogKind::Rx;
        return std::nullopt;
    }
    return std::nullopt;
}

inline std::string format_summary(const Scenario& s, std::uint64_t seed, const RunSummary& sum) {
    std::ostringstream o;
    o << "scenario: " << s.name << '\n'
      << "seed: " << seed << '\n'
      << "nodes: " << s.nodes.size() << '\n'
      << "duration_us: " << s.duration_us << '\n'
      << "generated: " << sum.generated << '\n'
      << "transmitted: " << sum.transmitted << '\n'
      << "queue_dropped: " << sum.queue_dropped << '\n'
      << "reception_opportunities: " << sum.reception.opportunities << '\n'
      << "delivered: " << sum.reception.delivered << '\n'
      << "lost_noise: " << sum.reception.lost_noise << '\n'
      << "lost_collision: " << sum.reception.lost_collision << '\n'
      << "events: " << sum.events << '\n'
      << "wall_clock_ms: " << static_cast<long long>(sum.wall_ms + 0.5) << '\n';
    return o.str();
}

/// Writes every NIC's TX and RX log plus `summary.txt` into `dir`.
inline void write_run(const std::filesystem::path& dir, const Scenario& s, std::uint64_t seed, const RunResult& r) {
    std::filesystem::create_directories(dir);
    for (const auto& log : r.logs) {
        write_log_file(dir / (log.file_stem() + "_tx.log"), log.tx);
        write_log_file(dir / (log.file_stem() + "_rx.log"), log.rx);
    }
    std::ofstream out(dir / "summary.txt", std::ios::binary);
    out << format_summary(s, seed, r.summary);
}

/// Logs found in a directory, keyed by file stem (`<node>_<nic>`).
struct LogSet {
    std::map<std::string, std::vector<TxLogRecord>> tx;
    std::map<std::string, std::vector<RxLogRecord>> rx;
};

inline LogSet read_log_dir(const std::filesystem::path& dir) {
    LogSet set;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".log") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        const std::string name = p.stem().string();
        if (name.size() > 3 && name.ends_with("_tx")) {
            set.tx[name.substr(0, name.size() - 3)] = read_tx_log(p);
        } else if (name.size() > 3 && name.ends_with("_rx")) {
            set.rx[name.substr(0, name.size() - 3)] = read_rx_log(p);
        }
    }
    return set;
}

} // namespace camnet
