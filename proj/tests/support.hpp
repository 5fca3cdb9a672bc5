#pragma once

// Shared helpers for the test suites: random valid inputs and independent
// reference computations.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "camnet/cam_codec.hpp"

namespace testing_support {

/// A valid frame drawn from a seed. Values are drawn so that every field
/// exercises its full domain including signs and many decimal digits.
inline camnet::CamFrame random_frame(std::uint64_t seed) {
    std::mt19937_64 g(seed * 0x9E3779B97F4A7C15ULL + 1);
    std::uniform_real_distribution<double> lat(-90.0, 90.0), lon(-180.0, 180.0), speed(0.0, 70.0),
        heading(0.0, 360.0);
    camnet::CamFrame f;
    f.src_mac = camnet::MacAddress(g());
    f.nic = (g() & 1) ? camnet::Nic::LP : camnet::Nic::HP;
    f.seq_num = static_cast<std::uint32_t>(g());
    f.gps_lat = lat(g);
    f.gps_lon = lon(g);
    f.inter_lat = lat(g);
    f.inter_lon = lon(g);
    f.gps_speed = speed(g);
    f.inter_speed = speed(g);
    f.heading = heading(g);
    f.timestamp_us = static_cast<std::int64_t>(g() % 4'000'000'000'000'000ULL);
    return f;
}

/// Great-circle distance.
inline double haversine_m(double lat1, double lon1, double lat2, double lon2) {
    // sphere whose meridian degree is 111132.95 m
    const double rad = std::numbers::pi / 180.0;
    const double kR = 111'132.95 / rad;
    const double dlat = (lat2 - lat1) * rad;
    const double dlon = (lon2 - lon1) * rad;
    const double a = std::pow(std::sin(dlat / 2), 2) +
                     std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::pow(std::sin(dlon / 2), 2);
    return 2 * kR * std::asin(std::sqrt(a));
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// 64-bit FNV-1a over every regular file in a directory (names and bytes, sorted).
inline std::uint64_t hash_dir(const std::filesystem::path& dir, bool skip_summary = true) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        if (skip_summary && e.path().filename() == "summary.txt") continue;
        files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& f : files) {
        feed(f.filename().string());
        feed(slurp(f));
    }
    return h;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("camnet_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace testing_support
