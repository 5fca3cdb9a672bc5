#pragma once

// Cooperative awareness message: in-memory frame, fixed-length wire payload,
// and the comma-separated TX/RX log lines written by every NIC.

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "camnet/error.hpp"

namespace camnet {

/// 48-bit IEEE 802 address.
class MacAddress {
public:
    constexpr MacAddress() = default;
    constexpr explicit MacAddress(std::uint64_t value) : value_(value & kMask) {}

    constexpr std::uint64_t value() const noexcept { return value_; }

    std::string to_string() const {
        static constexpr char kHex[] = "0123456789abcdef";
        std::string s(17, ':');
        for (int i = 0; i < 6; ++i) {
            const auto byte = static_cast<unsigned>((value_ >> (8 * (5 - i))) & 0xFFu);
            s[static_cast<std::size_t>(3 * i)] = kHex[byte >> 4];
            s[static_cast<std::size_t>(3 * i + 1)] = kHex[byte & 0xFu];
        }
        return s;
    }

    /// Accepts `aa:bb:cc:dd:ee:ff` or `aa-bb-...`, either case.
    static std::optional<MacAddress> parse(std::string_view s) {
        if (s.size() != 17) return std::nullopt;
        std::uint64_t v = 0;
        for (int i = 0; i < 6; ++i) {
            const auto pos = static_cast<std::size_t>(3 * i);
            if (i > 0 && s[pos - 1] != ':' && s[pos - 1] != '-') return std::nullopt;
            unsigned byte = 0;
            const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + 2, byte, 16);
            if (ec != std::errc{} || ptr != s.data() + pos + 2) return std::nullopt;
            v = (v << 8) | byte;
        }
        return MacAddress(v);
    }

    friend constexpr auto operator<=>(const MacAddress&, const MacAddress&) = default;

private:
    static constexpr std::uint64_t kMask = 0xFFFF'FFFF'FFFFULL;
    std::uint64_t value_ = 0;
};

/// The two radios of every testbed node.
enum class Nic : std::uint8_t { HP = 0, LP = 1 };

inline constexpr std::string_view to_string(Nic nic) noexcept {
    return nic == Nic::HP ? "HP" : "LP";
}

inline std::optional<Nic> parse_nic(std::string_view s) {
    if (s == "HP" || s == "hp") return Nic::HP;
    if (s == "LP" || s == "lp") return Nic::LP;
    return std::nullopt;
}

struct CamFrame {
    MacAddress src_mac;
    Nic nic = Nic::HP;
    std::uint32_t seq_num = 0;
    double gps_lon = 0.0;
    double gps_lat = 0.0;
    double inter_lon = 0.0;
    double inter_lat = 0.0;
    double gps_speed = 0.0;   // m/s
    double inter_speed = 0.0; // m/s
    double heading = 0.0;     // degrees, [0, 360)
    std::int64_t timestamp_us = 0;

    friend bool operator==(const CamFrame&, const CamFrame&) = default;
};

namespace detail {

inline void check_lat(double v, const char* field) {
    if (!(v >= -90.0 && v <= 90.0)) throw InvalidField(field, "latitude outside [-90, 90]");
}

inline void check_lon(double v, const char* field) {
    if (!(v >= -180.0 && v <= 180.0)) throw InvalidField(field, "longitude outside [-180, 180]");
}

inline void check_speed(double v, const char* field) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidField(field, "speed must be finite and >= 0");
}

inline void check_heading(double v, const char* field) {
    if (!(v >= 0.0 && v < 360.0)) throw InvalidField(field, "heading outside [0, 360)");
}

} // namespace detail

/// Throws InvalidField naming the first field that breaks a frame invariant.
inline void validate(const CamFrame& f) {
    detail::check_lon(f.gps_lon, "gps_lon");
    detail::check_lat(f.gps_lat, "gps_lat");
    detail::check_lon(f.inter_lon, "inter_lon");
    detail::check_lat(f.inter_lat, "inter_lat");
    detail::check_speed(f.gps_speed, "gps_speed");
    detail::check_speed(f.inter_speed, "inter_speed");
    detail::check_heading(f.heading, "heading");
    if (f.nic != Nic::HP && f.nic != Nic::LP) throw InvalidField("nic", "unknown interface");
}

// ---------------------------------------------------------------------------
// Wire payload
//
//   offset size field
//        0    6 src_mac
//        6    1 nic (0 = HP, 1 = LP)
//        7    4 seq_num
//       11    8 gps_lon      (IEEE-754 binary64)
//       19    8 gps_lat
//       27    8 inter_lon
//       35    8 inter_lat
//       43    8 gps_speed
//       51    8 inter_speed
//       59    8 heading
//       67    8 timestamp_us (two's complement)
//
// All multi-byte fields little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kCamPayloadSize = 75;

using CamPayload = std::array<std::uint8_t, kCamPayloadSize>;

namespace detail {

inline void put_le(std::uint8_t* dst, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) dst[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint64_t get_le(const std::uint8_t* src, int bytes) {
    std::uint64_t v = 0;
    for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | src[i];
    return v;
}

inline void put_f64(std::uint8_t* dst, double v) {
    put_le(dst, std::bit_cast<std::uint64_t>(v), 8);
}

inline double get_f64(const std::uint8_t* src) {
    return std::bit_cast<double>(get_le(src, 8));
}

} // namespace detail

inline CamPayload encode_cam(const CamFrame& f) {
    validate(f);
    CamPayload out{};
    std::uint8_t* p = out.data();
    detail::put_le(p + 0, f.src_mac.value(), 6);
    p[6] = static_cast<std::uint8_t>(f.nic);
    detail::put_le(p + 7, f.seq_num, 4);
    detail::put_f64(p + 11, f.gps_lon);
    detail::put_f64(p + 19, f.gps_lat);
    detail::put_f64(p + 27, f.inter_lon);
    detail::put_f64(p + 35, f.inter_lat);
    detail::put_f64(p + 43, f.gps_speed);
    detail::put_f64(p + 51, f.inter_speed);
    detail::put_f64(p + 59, f.heading);
    detail::put_le(p + 67, static_cast<std::uint64_t>(f.timestamp_us), 8);
    return out;
}

inline CamFrame decode_cam(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kCamPayloadSize) {
        throw MalformedFrame("CAM payload must be " + std::to_string(kCamPayloadSize) + " bytes, got " +
                             std::to_string(bytes.size()));
    }
    const std::uint8_t* p = bytes.data();
    if (p[6] > 1) throw InvalidField("nic", "unknown interface code " + std::to_string(p[6]));
    CamFrame f;
    f.src_mac = MacAddress(detail::get_le(p + 0, 6));
    f.nic = static_cast<Nic>(p[6]);
    f.seq_num = static_cast<std::uint32_t>(detail::get_le(p + 7, 4));
    f.gps_lon = detail::get_f64(p + 11);
    f.gps_lat = detail::get_f64(p + 19);
    f.inter_lon = detail::get_f64(p + 27);
    f.inter_lat = detail::get_f64(p + 35);
    f.gps_speed = detail::get_f64(p + 43);
    f.inter_speed = detail::get_f64(p + 51);
    f.heading = detail::get_f64(p + 59);
    f.timestamp_us = static_cast<std::int64_t>(detail::get_le(p + 67, 8));
    validate(f);
    return f;
}

// ---------------------------------------------------------------------------
// Log records
// ---------------------------------------------------------------------------

/// Decimal fixed-point value with `Places` fractional digits. Log records use
/// these so that text serialization is exact.
template <int Places>
class Fixed {
public:
    static constexpr int kPlaces = Places;
    static constexpr std::int64_t kScale = [] {
        std::int64_t s = 1;
        for (int i = 0; i < Places; ++i) s *= 10;
        return s;
    }();

    constexpr Fixed() = default;
    static constexpr Fixed from_raw(std::int64_t raw) noexcept {
        Fixed f;
        f.raw_ = raw;
        return f;
    }
    static Fixed from_double(double v) noexcept {
        return from_raw(static_cast<std::int64_t>(std::llround(v * static_cast<double>(kScale))));
    }

    constexpr std::int64_t raw() const noexcept { return raw_; }
    constexpr double value() const noexcept { return static_cast<double>(raw_) / static_cast<double>(kScale); }

    friend constexpr auto operator<=>(const Fixed&, const Fixed&) = default;

private:
    std::int64_t raw_ = 0;
};

using Degrees = Fixed<7>;   // ~1 cm at the equator
using Centi = Fixed<2>;     // speeds (m/s) and heading (deg)
using EpochMicros = Fixed<6>; // Unix seconds with microsecond resolution

namespace detail {

template <int Places>
std::string format_fixed(Fixed<Places> v) {
    const std::int64_t raw = v.raw();
    const std::uint64_t mag = raw < 0 ? static_cast<std::uint64_t>(-(raw + 1)) + 1 : static_cast<std::uint64_t>(raw);
    const auto scale = static_cast<std::uint64_t>(Fixed<Places>::kScale);
    std::string out = raw < 0 ? "-" : "";
    out += std::to_string(mag / scale);
    if constexpr (Places > 0) {
        std::string frac = std::to_string(mag % scale);
        out += '.';
        out.append(static_cast<std::size_t>(Places) - frac.size(), '0');
        out += frac;
    }
    return out;
}

/// Parses `[-]digits[.digits]`; extra fractional digits round half away from zero.
template <int Places>
Fixed<Places> parse_fixed(std::string_view s, const char* column) {
    auto fail = [&](const char* why) -> Fixed<Places> {
        throw ValueError(column, std::string(why) + " '" + std::string(s) + "'");
    };
    bool neg = false;
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) {
        neg = s[i] == '-';
        ++i;
    }
    std::uint64_t int_part = 0;
    std::size_t int_digits = 0;
    for (; i < s.size() && s[i] >= '0' && s[i] <= '9'; ++i, ++int_digits) {
        if (int_part > (UINT64_MAX / 10) - 10) return fail("numeric overflow in");
        int_part = int_part * 10 + static_cast<std::uint64_t>(s[i] - '0');
    }
    std::uint64_t frac = 0;
    std::size_t frac_digits = 0;
    bool round_up = false;
    if (i < s.size() && s[i] == '.') {
        ++i;
        for (; i < s.size() && s[i] >= '0' && s[i] <= '9'; ++i, ++frac_digits) {
            if (frac_digits < static_cast<std::size_t>(Places)) {
                frac = frac * 10 + static_cast<std::uint64_t>(s[i] - '0');
            } else if (frac_digits == static_cast<std::size_t>(Places)) {
                round_up = s[i] >= '5';
            }
        }
    }
    if (i != s.size() || (int_digits == 0 && frac_digits == 0)) return fail("not a number:");
    for (std::size_t k = frac_digits; k < static_cast<std::size_t>(Places); ++k) frac *= 10;
    const auto scale = static_cast<std::uint64_t>(Fixed<Places>::kScale);
    if (int_part > static_cast<std::uint64_t>(INT64_MAX) / scale - 1) return fail("numeric overflow in");
    auto mag = static_cast<std::int64_t>(int_part * scale + frac + (round_up ? 1 : 0));
    return Fixed<Places>::from_raw(neg ? -mag : mag);
}

template <typename Int>
Int parse_uint(std::string_view s, const char* column) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw ValueError(column, "not an unsigned integer: '" + std::string(s) + "'");
    }
    return v;
}

inline MacAddress parse_mac(std::string_view s, const char* column) {
    const auto mac = MacAddress::parse(s);
    if (!mac) throw ValueError(column, "not a MAC address: '" + std::string(s) + "'");
    return *mac;
}

inline void check_lat_col(Degrees v, const char* column) {
    if (v.raw() < -90 * Degrees::kScale || v.raw() > 90 * Degrees::kScale)
        throw ValueError(column, "latitude outside [-90, 90]");
}

inline void check_lon_col(Degrees v, const char* column) {
    if (v.raw() < -180 * Degrees::kScale || v.raw() > 180 * Degrees::kScale)
        throw ValueError(column, "longitude outside [-180, 180]");
}

inline void check_nonneg_col(std::int64_t raw, const char* column) {
    if (raw < 0) throw ValueError(column, "must be >= 0");
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> cols;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    for (auto& c : cols) {
        while (!c.empty() && (c.front() == ' ' || c.front() == '\t')) c.remove_prefix(1);
        while (!c.empty() && (c.back() == ' ' || c.back() == '\t')) c.remove_suffix(1);
    }
    return cols;
}

inline void check_columns(const std::vector<std::string_view>& cols, std::size_t expected) {
    if (cols.size() != expected) {
        throw FormatError("expected " + std::to_string(expected) + " columns, got " + std::to_string(cols.size()));
    }
}

} // namespace detail

/// One line of a transmitter log: every generated frame, in generation order.
struct TxLogRecord {
    Degrees gps_lon;
    Degrees gps_lat;
    Degrees inter_lon;
    Degrees inter_lat;
    std::uint32_t seq_num = 0;
    Centi gps_speed;
    Centi inter_speed;
    EpochMicros timestamp; // generation time
    MacAddress src_mac;
    Nic nic = Nic::HP;
    Centi heading;

    std::int64_t timestamp_us() const noexcept { return timestamp.raw(); }

    friend bool operator==(const TxLogRecord&, const TxLogRecord&) = default;
};

/// One line of a receiver log. The record never stores the receiver's own
/// address; files are kept per receiving NIC.
struct RxLogRecord {
    MacAddress rx_mac; // transmitter of the frame
    Degrees rx_lon;    // transmitter position carried in the frame
    Degrees rx_lat;
    Degrees inter_lon; // receiver's own interpolated position
    Degrees inter_lat;
    std::uint32_t seq_num = 0;
    Centi gps_speed;
    Centi inter_speed;
    EpochMicros timestamp;     // generation time carried in the frame
    EpochMicros local_rx_time; // receiver clock at reception

    std::int64_t timestamp_us() const noexcept { return timestamp.raw(); }
    std::int64_t local_rx_time_us() const noexcept { return local_rx_time.raw(); }

    friend bool operator==(const RxLogRecord&, const RxLogRecord&) = default;
};

inline constexpr std::string_view kTxLogHeader =
    "GpsLongitude,GpsLatitude,InterLongitude,InterLatitude,SeqNum,GpsSpeed,InterSpeed,Timestamp,SrcMac,Nic,Heading";
inline constexpr std::string_view kRxLogHeader =
    "RxMAC,RxLongitude,RxLatitude,InterLongitude,InterLatitude,SeqNum,GpsSpeed,InterSpeed,Timestamp,LocalRxTime";
inline constexpr std::size_t kTxLogColumns = 11;
inline constexpr std::size_t kRxLogColumns = 10;

inline TxLogRecord make_tx_record(const CamFrame& f) {
    validate(f);
    TxLogRecord r;
    r.gps_lon = Degrees::from_double(f.gps_lon);
    r.gps_lat = Degrees::from_double(f.gps_lat);
    r.inter_lon = Degrees::from_double(f.inter_lon);
    r.inter_lat = Degrees::from_double(f.inter_lat);
    r.seq_num = f.seq_num;
    r.gps_speed = Centi::from_double(f.gps_speed);
    r.inter_speed = Centi::from_double(f.inter_speed);
    r.timestamp = EpochMicros::from_raw(f.timestamp_us);
    r.src_mac = f.src_mac;
    r.nic = f.nic;
    // 359.996 would round to 360.00
    r.heading = Centi::from_raw(Centi::from_double(f.heading).raw() % (360 * Centi::kScale));
    return r;
}

/// Builds the receiver-side record; throws SelfReception if the frame carries
/// the receiver's own address.
inline RxLogRecord make_rx_record(const CamFrame& f, MacAddress receiver_mac, double receiver_lat,
                                  double receiver_lon, std::int64_t local_rx_time_us) {
    if (f.src_mac == receiver_mac) {
        throw SelfReception("frame from " + f.src_mac.to_string() + " received by its own NIC");
    }
    validate(f);
    detail::check_lat(receiver_lat, "inter_lat");
    detail::check_lon(receiver_lon, "inter_lon");
    RxLogRecord r;
    r.rx_mac = f.src_mac;
    r.rx_lon = Degrees::from_double(f.inter_lon);
    r.rx_lat = Degrees::from_double(f.inter_lat);
    r.inter_lon = Degrees::from_double(receiver_lon);
    r.inter_lat = Degrees::from_double(receiver_lat);
    r.seq_num = f.seq_num;
    r.gps_speed = Centi::from_double(f.gps_speed);
    r.inter_speed = Centi::from_double(f.inter_speed);
    r.timestamp = EpochMicros::from_raw(f.timestamp_us);
    r.local_rx_time = EpochMicros::from_raw(local_rx_time_us);
    return r;
}

inline std::string format_tx_log(const TxLogRecord& r) {
    using detail::format_fixed;
    std::string s;
    s.reserve(128);
    s += format_fixed(r.gps_lon);
    s += ',';
    s += format_fixed(r.gps_lat);
    s += ',';
    s += format_fixed(r.inter_lon);
    s += ',';
    s += format_fixed(r.inter_lat);
    s += ',';
    s += std::to_string(r.seq_num);
    s += ',';
    s += format_fixed(r.gps_speed);
    s += ',';
    s += format_fixed(r.inter_speed);
    s += ',';
    s += format_fixed(r.timestamp);
    s += ',';
    s += r.src_mac.to_string();
    s += ',';
    s += to_string(r.nic);
    s += ',';
    s += format_fixed(r.heading);
    return s;
}

inline TxLogRecord parse_tx_log(std::string_view line) {
    using namespace detail;
    const auto c = split_csv(line);
    check_columns(c, kTxLogColumns);
    TxLogRecord r;
    r.gps_lon = parse_fixed<7>(c[0], "GpsLongitude");
    check_lon_col(r.gps_lon, "GpsLongitude");
    r.gps_lat = parse_fixed<7>(c[1], "GpsLatitude");
    check_lat_col(r.gps_lat, "GpsLatitude");
    r.inter_lon = parse_fixed<7>(c[2], "InterLongitude");
    check_lon_col(r.inter_lon, "InterLongitude");
    r.inter_lat = parse_fixed<7>(c[3], "InterLatitude");
    check_lat_col(r.inter_lat, "InterLatitude");
    r.seq_num = parse_uint<std::uint32_t>(c[4], "SeqNum");
    r.gps_speed = parse_fixed<2>(c[5], "GpsSpeed");
    check_nonneg_col(r.gps_speed.raw(), "GpsSpeed");
    r.inter_speed = parse_fixed<2>(c[6], "InterSpeed");
    check_nonneg_col(r.inter_speed.raw(), "InterSpeed");
    r.timestamp = parse_fixed<6>(c[7], "Timestamp");
    r.src_mac = parse_mac(c[8], "SrcMac");
    const auto nic = parse_nic(c[9]);
    if (!nic) throw ValueError("Nic", "expected HP or LP, got '" + std::string(c[9]) + "'");
    r.nic = *nic;
    r.heading = parse_fixed<2>(c[10], "Heading");
    if (r.heading.raw() < 0 || r.heading.raw() >= 360 * Centi::kScale) {
        throw ValueError("Heading", "outside [0, 360)");
    }
    return r;
}

inline std::string format_rx_log(const RxLogRecord& r) {
    using detail::format_fixed;
    std::string s;
    s.reserve(128);
    s += r.rx_mac.to_string();
    s += ',';
    s += format_fixed(r.rx_lon);
    s += ',';
    s += format_fixed(r.rx_lat);
    s += ',';
    s += format_fixed(r.inter_lon);
    s += ',';
    s += format_fixed(r.inter_lat);
    s += ',';
    s += std::to_string(r.seq_num);
    s += ',';
    s += format_fixed(r.gps_speed);
    s += ',';
    s += format_fixed(r.inter_speed);
    s += ',';
    s += format_fixed(r.timestamp);
    s += ',';
    s += format_fixed(r.local_rx_time);
    return s;
}

inline RxLogRecord parse_rx_log(std::string_view line) {
    using namespace detail;
    const auto c = split_csv(line);
    check_columns(c, kRxLogColumns);
    RxLogRecord r;
    r.rx_mac = parse_mac(c[0], "RxMAC");
    r.rx_lon = parse_fixed<7>(c[1], "RxLongitude");
    check_lon_col(r.rx_lon, "RxLongitude");
    r.rx_lat = parse_fixed<7>(c[2], "RxLatitude");
    check_lat_col(r.rx_lat, "RxLatitude");
    r.inter_lon = parse_fixed<7>(c[3], "InterLongitude");
    check_lon_col(r.inter_lon, "InterLongitude");
    r.inter_lat = parse_fixed<7>(c[4], "InterLatitude");
    check_lat_col(r.inter_lat, "InterLatitude");
    r.seq_num = parse_uint<std::uint32_t>(c[5], "SeqNum");
    r.gps_speed = parse_fixed<2>(c[6], "GpsSpeed");
    check_nonneg_col(r.gps_speed.raw(), "GpsSpeed");
    r.inter_speed = parse_fixed<2>(c[7], "InterSpeed");
    check_nonneg_col(r.inter_speed.raw(), "InterSpeed");
    r.timestamp = parse_fixed<6>(c[8], "Timestamp");
    r.local_rx_time = parse_fixed<6>(c[9], "LocalRxTime");
    return r;
}

} // namespace camnet
