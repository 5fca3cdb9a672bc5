#include <gtest/gtest.h>

#include <random>

#include "camnet/channel.hpp"

using namespace camnet;

namespace {

// 32.44 + 20 log10(f_MHz) + 20 log10(d_km)
double fspl_db(double f_hz, double d_m) {
    return 32.44 + 20.0 * std::log10(f_hz / 1e6) + 20.0 * std::log10(d_m / 1000.0);
}

std::vector<double> none;

} // namespace

TEST(NicProfileTest, TableValues) {
    const auto lp_rsu = lp_rsu_profile(), lp_obu = lp_obu_profile(), hp_rsu = hp_rsu_profile(),
               hp_obu = hp_obu_profile();
    EXPECT_EQ(lp_rsu.tx_power_dbm, 25.0);
    EXPECT_EQ(lp_obu.tx_power_dbm, 25.0);
    EXPECT_EQ(hp_rsu.tx_power_dbm, 29.0);
    EXPECT_EQ(hp_obu.tx_power_dbm, 29.0);
    EXPECT_EQ(lp_rsu.antenna_gain_dbi, 7.0);
    EXPECT_EQ(lp_obu.antenna_gain_dbi, 5.0);
    EXPECT_EQ(hp_rsu.antenna_gain_dbi, 9.0);
    EXPECT_EQ(hp_obu.antenna_gain_dbi, 5.0);
    EXPECT_EQ(lp_rsu.center_freq_hz, 5.89e9);
    EXPECT_EQ(hp_rsu.center_freq_hz, 5.9e9);
    for (const auto& p : {lp_rsu, lp_obu, hp_rsu, hp_obu}) {
        EXPECT_EQ(p.bandwidth_hz, 10e6);
        EXPECT_EQ(p.mcs, "QPSK-1/2");
        EXPECT_EQ(p.cw_min, 15);
        EXPECT_EQ(p.cw_max, 1023);
    }
    EXPECT_EQ(profile_by_name("HP-OBU")->antenna_gain_dbi, 5.0);
    EXPECT_FALSE(profile_by_name("MP-OBU"));
}

TEST(PathLossTest, FreeSpaceAt100m) {
    ChannelParams p;
    p.n_exp = 2.0;
    EXPECT_NEAR(path_loss_db(p, 100.0), 87.86, 0.05);
    EXPECT_NEAR(path_loss_db(p, 100.0), fspl_db(5.9e9, 100.0), 0.05);
}

TEST(PathLossTest, ReferenceDistanceAndClamp) {
    ChannelParams p;
    EXPECT_EQ(path_loss_db(p, 1.0), p.pl0_db);
    EXPECT_EQ(path_loss_db(p, 0.25), p.pl0_db);
    EXPECT_THROW(path_loss_db(p, 0.0), DomainError);
    EXPECT_THROW(path_loss_db(p, -3.0), DomainError);
}

TEST(PathLossTest, DoublingStep) {
    ChannelParams p;
    p.n_exp = 3.5;
    EXPECT_NEAR(path_loss_db(p, 400.0) - path_loss_db(p, 200.0), 10.0 * 3.5 * std::log10(2.0), 1e-9);
    EXPECT_NEAR(path_loss_db(p, 400.0) - path_loss_db(p, 200.0), 10.54, 0.005);
}

TEST(PathLossProperty, MonotoneInDistance) {
    ChannelParams p;
    p.n_exp = 2.7;
    double prev = path_loss_db(p, 0.01);
    for (double d = 0.02; d < 5000; d *= 1.07) {
        const double cur = path_loss_db(p, d);
        ASSERT_GE(cur, prev);
        prev = cur;
    }
}

TEST(LinkBudgetTest, UnitDistanceBudgets) {
    ChannelParams p;
    EXPECT_NEAR(rx_power_dbm(hp_rsu_profile(), hp_obu_profile(), 1.0, p), 29 + 9 + 5 - 47.86, 1e-12);
    EXPECT_NEAR(rx_power_dbm(hp_rsu_profile(), hp_obu_profile(), 1.0, p), -4.86, 1e-9);
    EXPECT_NEAR(rx_power_dbm(lp_obu_profile(), lp_obu_profile(), 1.0, p), -12.86, 1e-9);
}

TEST(LinkBudgetTest, Reciprocity) {
    ChannelParams p;
    for (double d : {1.0, 50.0, 700.0}) {
        EXPECT_DOUBLE_EQ(rx_power_dbm(hp_rsu_profile(), hp_obu_profile(), d, p),
                         rx_power_dbm(hp_obu_profile(), hp_rsu_profile(), d, p));
    }
}

TEST(DeliverTest, StrongLoneFrame) {
    ChannelParams p;
    p.noise_floor_dbm = -99;
    EXPECT_NEAR(sinr_db(-60, none, p), 39.0, 1e-12);
    EXPECT_EQ(deliver(-60, none, p), Verdict::Delivered);
}

TEST(DeliverTest, BelowSensitivity) {
    ChannelParams p;
    EXPECT_EQ(deliver(-95, none, p), Verdict::LostNoise);
    const std::vector<double> weak{-120};
    EXPECT_EQ(deliver(-95, weak, p), Verdict::LostNoise);
}

TEST(DeliverTest, StrongerInterfererCollides) {
    ChannelParams p;
    p.noise_floor_dbm = -99;
    const std::vector<double> i{-55};
    // -60 - 10log10(10^-5.5 + 10^-9.9)
    const double expect = -60 - 10 * std::log10(std::pow(10, -5.5) + std::pow(10, -9.9));
    EXPECT_NEAR(sinr_db(-60, i, p), expect, 1e-9);
    EXPECT_NEAR(sinr_db(-60, i, p), -5.0, 0.01);
    EXPECT_EQ(deliver(-60, i, p), Verdict::LostCollision);
}

TEST(DeliverTest, PowerSumOfEqualInterferers) {
    const std::vector<double> two{-70, -70};
    EXPECT_NEAR(power_sum_dbm(two), -70 + 10 * std::log10(2.0), 1e-12);
}

TEST(DeliverTest, CaptureBoundaryIsInclusive) {
    ChannelParams p;
    p.noise_floor_dbm = -200;
    const std::vector<double> i{-80};
    EXPECT_EQ(deliver(-70.0 + 1e-9, i, p), Verdict::Delivered);
    EXPECT_EQ(deliver(-70.1, i, p), Verdict::LostCollision);
}

TEST(DeliverProperty, Monotone) {
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> pw(-110, -40);
    ChannelParams p;
    for (int i = 0; i < 20'000; ++i) {
        std::vector<double> ints;
        const int k = static_cast<int>(g() % 4);
        for (int j = 0; j < k; ++j) ints.push_back(pw(g));
        const double rx = pw(g);
        const bool ok = deliver(rx, ints, p) == Verdict::Delivered;
        if (ok) {
            ASSERT_EQ(deliver(rx + 3.0, ints, p), Verdict::Delivered);
        }
        auto more = ints;
        more.push_back(pw(g));
        if (!ok) {
            ASSERT_NE(deliver(rx, more, p), Verdict::Delivered);
        }
    }
}

TEST(CalibrationTest, HpRsuAt700m) {
    ChannelParams p;
    const double n = calibrate_exponent(700, hp_rsu_profile(), hp_obu_profile(), p);
    EXPECT_NEAR(n, 3.06, 0.01);
    EXPECT_NEAR(n, (29 + 9 + 5 - 47.86 + 92) / (10 * std::log10(700.0)), 1e-12);
}

TEST(CalibrationTest, LpV2vAt80m) {
    ChannelParams p;
    const double n = calibrate_exponent(80, lp_obu_profile(), lp_obu_profile(), p);
    EXPECT_NEAR(n, 4.16, 0.01);
}

TEST(CalibrationTest, FreeSpaceRangeGivesTwo) {
    ChannelParams p;
    const auto tx = hp_rsu_profile(), rx = hp_obu_profile();
    const double budget = tx.tx_power_dbm + tx.antenna_gain_dbi + rx.antenna_gain_dbi - p.pl0_db - p.sensitivity_dbm;
    const double free_range = std::pow(10.0, budget / 20.0);
    EXPECT_NEAR(calibrate_exponent(free_range, tx, rx, p), 2.0, 1e-12);
}

TEST(CalibrationTest, RejectsShortRange) {
    ChannelParams p;
    EXPECT_THROW(calibrate_exponent(1.0, hp_rsu_profile(), hp_obu_profile(), p), DomainError);
    EXPECT_THROW(calibrate_exponent(0.5, hp_rsu_profile(), hp_obu_profile(), p), DomainError);
}

TEST(CalibrationProperty, BoundarySitsAtTarget) {
    for (double range : {80.0, 150.0, 400.0, 700.0, 1500.0}) {
        for (const auto& [tx, rx] : {std::pair{hp_rsu_profile(), hp_obu_profile()},
                                     std::pair{lp_obu_profile(), lp_obu_profile()}}) {
            ChannelParams p;
            p.n_exp = calibrate_exponent(range, tx, rx, p);
            if (p.n_exp < 2.0) continue;
            // scan for the last delivered distance on a 0.05% grid
            double last = 0;
            for (double d = range * 0.9; d < range * 1.1; d *= 1.0005) {
                if (deliver(rx_power_dbm(tx, rx, d, p), none, p) == Verdict::Delivered) last = d;
            }
            EXPECT_NEAR(last / range, 1.0, 0.005) << range;
        }
    }
}

TEST(ShadowingTest, ReproducibleAndKeyed) {
    ChannelParams p;
    p.shadow_sigma_db = 4;
    p.seed = 7;
    const ShadowKey k{1, 2, 3};
    EXPECT_EQ(shadow_sample_db(p, k), shadow_sample_db(p, k));
    EXPECT_NE(shadow_sample_db(p, k), shadow_sample_db(p, ShadowKey{1, 2, 4}));
    p.shadow_sigma_db = 0;
    EXPECT_EQ(shadow_sample_db(p, k), 0.0);
}

TEST(ShadowingTest, PerLinkIsReciprocalAndFrameIndependent) {
    ChannelParams p;
    p.shadow_sigma_db = 4;
    p.shadowing = ShadowingMode::PerLink;
    EXPECT_EQ(shadow_sample_db(p, {5, 9, 1}), shadow_sample_db(p, {9, 5, 2}));
}

TEST(ShadowingTest, MomentsMatchSigma) {
    ChannelParams p;
    p.shadow_sigma_db = 4;
    p.seed = 3;
    double sum = 0, sq = 0;
    const int n = 200'000;
    for (int i = 0; i < n; ++i) {
        const double s = shadow_sample_db(p, {1, 2, static_cast<std::uint64_t>(i)});
        sum += s;
        sq += s * s;
    }
    const double mean = sum / n;
    EXPECT_NEAR(mean, 0.0, 0.05);
    EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 4.0, 0.05);
}

TEST(MaxRangeTest, CoversEveryDeliverableDistance) {
    ChannelParams p;
    p.n_exp = 3.06;
    p.shadow_sigma_db = 4;
    const double r = max_range_m(hp_rsu_profile(), hp_obu_profile(), p);
    EXPECT_GT(rx_power_dbm(hp_rsu_profile(), hp_obu_profile(), r * 0.999, p, -3 * 4.0 - 1e-9), p.sensitivity_dbm);
    EXPECT_LT(rx_power_dbm(hp_rsu_profile(), hp_obu_profile(), r * 1.001, p, -3 * 4.0), p.sensitivity_dbm);
}
