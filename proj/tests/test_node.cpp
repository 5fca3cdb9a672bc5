#include <gtest/gtest.h>

#include "camnet/config.hpp"
#include "camnet/node.hpp"

using namespace camnet;

namespace {

NodeConfig static_rsu() { return make_rsu("r", 1, kBristolOrigin, 8.0); }

NodeConfig moving_obu() {
    const LocalFrame f(kBristolOrigin);
    return make_obu("v", 11, polyline_trace("v", f, {{0, 0}, {1000, 0}}, false, 10.0, 0.0, 0, 20'000'000));
}

} // namespace

TEST(JitterTest, NoneGivesExactPeriod) {
    NodeConfig n = static_rsu();
    n.jitter = JitterModel::none();
    Rng r(1);
    std::int64_t t = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::int64_t next = next_generation_time(n, r, t);
        ASSERT_EQ(next - t, 10'000);
        t = next;
    }
}

TEST(JitterTest, TwoAtomMean) {
    NodeConfig n = static_rsu();
    n.jitter = JitterModel::empirical({{12'000, 0.5}, {14'000, 0.5}});
    Rng r(5);
    double sum = 0;
    const int k = 100'000;
    std::int64_t t = 0;
    for (int i = 0; i < k; ++i) {
        const std::int64_t next = next_generation_time(n, r, t);
        const std::int64_t d = next - t;
        ASSERT_TRUE(d == 12'000 || d == 14'000);
        sum += static_cast<double>(d);
        t = next;
    }
    EXPECT_NEAR(sum / k, 13'000, 20);
}

TEST(JitterTest, SingleAtomBehavesLikePeriod) {
    NodeConfig a = static_rsu();
    a.jitter = JitterModel::empirical({{10'000, 1.0}});
    Rng r(3);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(next_generation_time(a, r, 1000 * i), 1000 * i + 10'000);
}

TEST(JitterTest, ValidationMessages) {
    EXPECT_TRUE(check(JitterModel::testbed_default()).empty());
    EXPECT_TRUE(check(JitterModel::none()).empty());
    EXPECT_FALSE(check(JitterModel::empirical({})).empty());
    EXPECT_FALSE(check(JitterModel::empirical({{10'000, 0.4}})).empty());
    EXPECT_FALSE(check(JitterModel::empirical({{-5, 1.0}})).empty());
}

TEST(GenerateCamTest, SequenceStartsAtZeroPerNic) {
    const NodeConfig n = static_rsu();
    NodeState s = NodeState::boot(n);
    for (std::uint32_t i = 0; i < 5; ++i) {
        const auto frames = generate_cam(n, s, 1000 * i);
        ASSERT_EQ(frames.size(), 2u);
        EXPECT_EQ(frames[0].seq_num, i);
        EXPECT_EQ(frames[1].seq_num, i);
        EXPECT_EQ(frames[0].nic, Nic::HP);
        EXPECT_EQ(frames[1].nic, Nic::LP);
        EXPECT_NE(frames[0].src_mac, frames[1].src_mac);
    }
}

TEST(GenerateCamTest, RsuReportsItsSite) {
    const NodeConfig n = static_rsu();
    NodeState s = NodeState::boot(n);
    const auto f = generate_cam(n, s, 123).front();
    EXPECT_EQ(f.gps_lat, kBristolOrigin.lat);
    EXPECT_EQ(f.inter_lat, f.gps_lat);
    EXPECT_EQ(f.inter_lon, f.gps_lon);
    EXPECT_EQ(f.gps_speed, 0.0);
    EXPECT_EQ(f.timestamp_us, 123);
}

TEST(GenerateCamTest, ObuRawFixLagsInterpolation) {
    const NodeConfig n = moving_obu();
    NodeState s = NodeState::boot(n);
    // at a knot the two agree
    const auto at_knot = generate_cam(n, s, 3'000'000).front();
    EXPECT_DOUBLE_EQ(at_knot.gps_lon, at_knot.inter_lon);
    EXPECT_DOUBLE_EQ(at_knot.gps_lat, at_knot.inter_lat);
    // half a second later the raw fix is still the knot
    const auto mid = generate_cam(n, s, 3'500'000).front();
    EXPECT_DOUBLE_EQ(mid.gps_lon, at_knot.gps_lon);
    const LocalFrame f(kBristolOrigin);
    EXPECT_NEAR(f.to_local(mid.inter_lat, mid.inter_lon).x_m, 35.0, 1e-6);
    EXPECT_NEAR(mid.heading, 90.0, 1e-9);
}

TEST(GenerateCamTest, OffTraceProducesNothing) {
    const NodeConfig n = moving_obu();
    NodeState s = NodeState::boot(n);
    EXPECT_TRUE(generate_cam(n, s, 60'000'000).empty());
    EXPECT_EQ(s.next_seq[0], 0u);
}

TEST(OnReceiveTest, StaticReceiverRecordsOwnSite) {
    const NodeConfig rsu = static_rsu();
    const NodeConfig obu = moving_obu();
    NodeState s = NodeState::boot(obu);
    const CamFrame f = generate_cam(obu, s, 2'000'000).front();
    const auto rec = on_receive(rsu, f, 2'000'400);
    ASSERT_TRUE(rec);
    EXPECT_EQ(rec->rx_mac, f.src_mac);
    EXPECT_EQ(rec->inter_lat, Degrees::from_double(kBristolOrigin.lat));
    EXPECT_EQ(rec->inter_lon, Degrees::from_double(kBristolOrigin.lon));
    EXPECT_EQ(rec->rx_lon, Degrees::from_double(f.inter_lon));
    EXPECT_EQ(rec->timestamp_us(), 2'000'000);
    EXPECT_EQ(rec->local_rx_time_us(), 2'000'400);
}

TEST(OnReceiveTest, OwnFramesIgnored) {
    const NodeConfig rsu = static_rsu();
    NodeState s = NodeState::boot(rsu);
    for (const auto& f : generate_cam(rsu, s, 0)) EXPECT_FALSE(on_receive(rsu, f, 10));
}
