#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <wsqkd/workflows.hpp>
#include <wsqkd/xtalk.hpp>

#include "oracles.hpp"

using namespace wsqkd;

namespace {

CrosstalkContribution point_at(double offset_ns, double db = -50.0) {
    CrosstalkContribution c;
    c.kind = CrosstalkKind::point;
    c.power_ratio_db = db;
    c.arrival_offset_ns = offset_ns;
    return c;
}

CrosstalkContribution continuous(double db) {
    CrosstalkContribution c;
    c.kind = CrosstalkKind::continuous;
    c.power_ratio_db = db;
    return c;
}

}  // namespace

TEST(DeltaQber, Examples) {
    for (double q : {0.0, 0.03, 0.25, 0.5}) {
        EXPECT_EQ(delta_qber(0.0, q), 0.0);
    }
    EXPECT_NEAR(delta_qber(0.01, 0.03), 0.004515, 5e-7);
    EXPECT_THROW(delta_qber(-0.1, 0.03), std::domain_error);
    EXPECT_THROW(delta_qber(0.1, 0.6), std::domain_error);
}

TEST(DeltaQber, EqualsDirectCountingOfMixedClicks) {
    for (double chi = 0.0; chi <= 1.0; chi += 0.05) {
        for (double q = 0.0; q <= 0.5; q += 0.025) {
            EXPECT_NEAR(delta_qber(chi, q), oracle::mixed_qber_shift(chi, q), 1e-15);
        }
    }
}

TEST(DeltaQber, ShapeOnGrid) {
    for (int i = 1; i <= 100; ++i) {
        const double chi = i / 100.0;
        for (int j = 0; j < 50; ++j) {
            const double q = 0.5 * j / 49.0;
            const double d = delta_qber(chi, q);
            EXPECT_LT(d, chi / 2.0);
            if (j < 49) {
                EXPECT_GT(d, delta_qber(chi - 0.005, q));  // increasing in chi
                EXPECT_GE(d, delta_qber(chi, q + 0.5 / 49.0));  // decreasing in QBER0
                // doubling chi adds less than double
                EXPECT_LT(delta_qber(2 * chi, q), 2 * d);
                EXPECT_GT(delta_qber(2 * chi, q), d);
            }
        }
    }
}

TEST(ChiFromGains, Examples) {
    EXPECT_EQ(chi_from_gains(0.0, 1e-3), 0.0);
    EXPECT_DOUBLE_EQ(chi_from_gains(1e-3, 1e-3), 1.0);
    const double chi = chi_from_gains(7.98e-6, 1.354e-3);
    EXPECT_NEAR(chi, 5.9e-3, 0.05e-3);
    EXPECT_NEAR(delta_qber(chi, 0.05), 0.0025, 0.0002);
    EXPECT_THROW(chi_from_gains(1e-6, 0.0), std::invalid_argument);
}

TEST(AggregateChi, Empty) {
    const auto s = aggregate_chi({}, 1.0, 50.0, 1e-2, 0.46, 0.2);
    EXPECT_EQ(s.chi_worst, 0.0);
    EXPECT_EQ(s.chi_best, 0.0);
}

TEST(AggregateChi, PointInsideGateCountsInBoth) {
    std::vector<CrosstalkContribution> c{point_at(0.2)};
    const auto s = aggregate_chi(c, 1.0, 50.0, 1e-2, 0.46, 0.2);
    EXPECT_GT(s.chi_worst, 0.0);
    EXPECT_EQ(s.chi_best, s.chi_worst);
    EXPECT_NEAR(s.y_worst, 0.46 * 1e-5 * 0.2, 1e-20);
}

TEST(AggregateChi, PointOutsideGateOnlyWorst) {
    std::vector<CrosstalkContribution> c{point_at(20.0), continuous(-60.0)};
    const auto s = aggregate_chi(c, 1.0, 50.0, 1e-2, 0.46, 0.2);
    const double cont = 0.46 * 1e-6 * 0.2 * (1.0 / 50.0);
    EXPECT_NEAR(s.y_best, cont, 1e-22);
    EXPECT_NEAR(s.y_worst, cont + 0.46 * 1e-5 * 0.2, 1e-20);
    EXPECT_LE(s.chi_best, s.chi_worst);
    EXPECT_THROW(aggregate_chi(c, 60.0, 50.0, 1e-2, 0.46, 0.2), std::invalid_argument);
}

TEST(AggregateChi, InterbandExcludedByDefault) {
    auto inter = point_at(0.0);
    inter.band = CrosstalkBand::interband;
    std::vector<CrosstalkContribution> c{point_at(10.0), inter};
    const auto without = aggregate_chi(c, 1.0, 50.0, 1e-2, 0.46, 0.2, false);
    const auto with = aggregate_chi(c, 1.0, 50.0, 1e-2, 0.46, 0.2, true);
    EXPECT_LE(without.chi_worst, with.chi_worst);
    EXPECT_LE(without.chi_best, with.chi_best);
    EXPECT_EQ(without.chi_best, 0.0);
    EXPECT_EQ(without.included_band, IncludedBand::intraband_only);
}

TEST(LeakageFloor, Examples) {
    const auto f = leakage_floor_check(-34.62, 14.77, 27.0);
    EXPECT_TRUE(f.above_floor);
    EXPECT_NEAR(f.margin_db, 7.15, 1e-9);
    EXPECT_FALSE(leakage_floor_check(-60.0, 14.77, 27.0).above_floor);
    const auto edge = leakage_floor_check(-41.77, 14.77, 27.0);
    EXPECT_FALSE(edge.above_floor);
    EXPECT_NEAR(edge.margin_db, 0.0, 1e-12);
}

TEST(RecommendDelay, Examples) {
    EXPECT_EQ(recommend_delay({}, 1.0, 50.0), 0.0);
    std::vector<CrosstalkContribution> centred{point_at(0.0)};
    const auto d = recommend_delay(centred, 1.0, 50.0);
    ASSERT_TRUE(d.has_value());
    EXPECT_NEAR(*d, 0.5 + kDelayGuardNs, 1e-12);
    std::vector<CrosstalkContribution> dense;
    for (int i = 0; i < 50; ++i) {
        dense.push_back(point_at(i * 1.0));
    }
    EXPECT_FALSE(recommend_delay(dense, 1.0, 50.0).has_value());
    EXPECT_THROW(recommend_delay(centred, 50.0, 50.0), std::invalid_argument);
}

TEST(RecommendDelay, ClearsEveryPointTerm) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<CrosstalkContribution> c{continuous(-70.0)};
        for (int i = 0; i < 1 + trial % 12; ++i) {
            c.push_back(point_at(u(rng)));
        }
        const auto d = recommend_delay(c, 1.0, 50.0);
        ASSERT_TRUE(d.has_value());
        const auto shifted = shift_point_offsets(c, *d, 50.0);
        for (const auto& x : shifted) {
            if (x.kind == CrosstalkKind::point) {
                EXPECT_FALSE(within_gate(x.arrival_offset_ns, 0.5 + kDelayGuardNs - 1e-9, 50.0));
            }
        }
        const auto s = aggregate_chi(shifted, 1.0, 50.0, 1e-2, 0.46, 0.2);
        const auto cont_only = aggregate_chi(std::vector<CrosstalkContribution>{continuous(-70.0)}, 1.0, 50.0, 1e-2,
                                             0.46, 0.2);
        EXPECT_NEAR(s.chi_best, cont_only.chi_best, 1e-18);
    }
}

TEST(ApplyCrosstalk, ZeroChiLeavesReportUnchanged) {
    const auto r = link_performance(10.0, {}, {}, {});
    CrosstalkSummary none;
    const auto imp = apply_crosstalk_to_link(r, none);
    EXPECT_EQ(imp.adjusted.secure_bps, r.secure_bps);
    EXPECT_EQ(imp.adjusted.observables.e_mu, r.observables.e_mu);
    EXPECT_TRUE(imp.negligible);
}

TEST(ApplyCrosstalk, FieldLinkEtoAWorstCase) {
    const auto sc = wuhu_dataset();
    const auto a = analyze_crosstalk(sc, "E2R2A", GateCase::worst);
    EXPECT_NEAR(a.summary.y_worst, 7.98e-6, 1e-12);
    EXPECT_TRUE(a.impact.below_dark_count);
    EXPECT_LE(a.impact.delta_qber_signal, a.impact.qber0_signal / 10.0);
    EXPECT_LE(a.impact.delta_qber_decoy, a.impact.qber0_decoy / 10.0);
    EXPECT_TRUE(a.impact.negligible);
    EXPECT_LT(a.impact.adjusted.secure_bps, a.report.secure_bps);
    EXPECT_NEAR(a.impact.adjusted.observables.q_mu, a.report.observables.q_mu + 7.98e-6, 1e-15);
}

TEST(Calibration, OffsetHitsTarget) {
    std::vector<CrosstalkContribution> c{point_at(10.0, -52.0), continuous(-65.0)};
    const auto s = aggregate_chi(c, 1.0, 50.0, 4e-3, 0.46, 0.2);
    const double off = calibration_offset_db(s, 7.98e-6, GateCase::worst);
    const auto s2 = aggregate_chi(offset_power(c, off), 1.0, 50.0, 4e-3, 0.46, 0.2);
    EXPECT_NEAR(s2.y_worst, 7.98e-6, 1e-15);
    EXPECT_THROW(calibration_offset_db(CrosstalkSummary{}, 1e-6, GateCase::worst), std::invalid_argument);
}
