#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "clipsam/metrics.hpp"
#include "oracles.hpp"

using namespace clipsam;
namespace oracle = clipsam::oracle;

namespace {

ScoredPixels pixels(std::vector<double> s, std::vector<int> y) { return {std::move(s), std::move(y)}; }

}  // namespace

TEST(Auroc, PerfectAndAllTies) {
    EXPECT_EQ(auroc(pixels({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0})), 1.0);
    EXPECT_EQ(auroc(pixels({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0})), 0.5);
}

TEST(Auroc, NeedsBothClasses) {
    EXPECT_THROW(auroc(pixels({0.1, 0.2}, {1, 1})), MetricError);
    EXPECT_THROW(auroc(pixels({0.1, 0.2}, {1})), MetricError);
}

TEST(Auroc, FlippedLabelsSumToOneWithoutTies) {
    for (std::uint64_t seed = 0; seed < 200; seed += 2) {
        auto inst = oracle::random_instance(seed, 12, 12);
        std::vector<int> flipped;
        for (int v : inst.labels) flipped.push_back(1 - v);
        EXPECT_NEAR(auroc(pixels(inst.flat, inst.labels)) + auroc(pixels(inst.flat, flipped)), 1.0, 1e-12);
    }
}

TEST(AveragePrecision, AnalyticCases) {
    EXPECT_EQ(average_precision(pixels({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})), 1.0);
    for (std::size_t k = 2; k < 10; ++k) {
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t i = 0; i < k; ++i) {
            s.push_back(static_cast<double>(k - i));
            y.push_back(i + 1 == k);
        }
        EXPECT_NEAR(average_precision(pixels(s, y)), 1.0 / static_cast<double>(k), 1e-15);
    }
}

TEST(F1Max, AnalyticCases) {
    EXPECT_EQ(f1_max(pixels({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})), 1.0);
    EXPECT_EQ(f1_max(pixels({0.4, 0.1, 0.7}, {1, 1, 1})), 1.0);
}

TEST(Pro, PerfectAndDisjoint) {
    BinaryMask gt(8, 8);
    for (std::size_t y = 2; y < 5; ++y)
        for (std::size_t x = 1; x < 4; ++x) gt.set(y, x, true);
    gt.set(7, 7, true);
    EXPECT_NEAR(pro(gt.to_tensor(), gt), 1.0, 1e-12);

    Tensor disjoint = gt.to_tensor();
    for (auto& v : disjoint.storage()) v = 1.0 - v;
    EXPECT_NEAR(pro(disjoint, gt), 0.0, 1e-12);
}

TEST(Metrics, MatchBruteForceOraclesOn1000Instances) {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto inst = oracle::random_instance(seed, 15, 20);
        const ScoredPixels sp = pixels(inst.flat, inst.labels);
        ASSERT_NEAR(auroc(sp), oracle::auroc_pairs(inst.flat, inst.labels), 1e-12) << "seed " << seed;
        ASSERT_NEAR(average_precision(sp), oracle::ap_rank_walk(inst.flat, inst.labels), 1e-12) << "seed " << seed;
        ASSERT_NEAR(f1_max(sp), oracle::f1_sweep(inst.flat, inst.labels), 1e-12) << "seed " << seed;
        ASSERT_NEAR(pro(inst.scores, inst.gt), oracle::pro_dense(inst.scores, inst.gt, kProFprLimit), 1e-6)
            << "seed " << seed;
    }
}

TEST(Pro, MatchesDenseSweepOn24x24Maps) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = oracle::random_instance(seed + 5000, 24, 24);
        for (double limit : {0.05, 0.3, 1.0}) {
            ASSERT_NEAR(pro(inst.scores, inst.gt, limit), oracle::pro_dense(inst.scores, inst.gt, limit), 1e-6)
                << "seed " << seed << " limit " << limit;
        }
    }
}

TEST(Metrics, InvariantUnderIncreasingTransform) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = oracle::random_instance(seed, 10, 12);
        Tensor warped = inst.scores;
        for (auto& v : warped.storage()) v = std::exp(3.0 * v) - 7.0;
        const MetricsReport a = evaluate_map(inst.scores, inst.gt), b = evaluate_map(warped, inst.gt);
        EXPECT_NEAR(a.auroc, b.auroc, 1e-12);
        EXPECT_NEAR(a.ap, b.ap, 1e-12);
        EXPECT_NEAR(a.f1_max, b.f1_max, 1e-12);
        EXPECT_NEAR(a.pro, b.pro, 1e-12);
    }
}

TEST(Metrics, RangeAndPerfectPrediction) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = oracle::random_instance(seed, 12, 12);
        const MetricsReport r = evaluate_map(inst.scores, inst.gt);
        for (double v : {r.auroc, r.ap, r.f1_max, r.pro}) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
        const MetricsReport perfect = evaluate_map(inst.gt.to_tensor(), inst.gt);
        EXPECT_EQ(perfect.auroc, 1.0);
        EXPECT_EQ(perfect.ap, 1.0);
        EXPECT_EQ(perfect.f1_max, 1.0);
        EXPECT_NEAR(perfect.pro, 1.0, 1e-12);
    }
}

TEST(Metrics, CsvHasHeaderRowsAndMean) {
    std::ostringstream os;
    write_metrics_csv(os, {"a", "b"}, {{1, 0.5, 0.25, 0}, {0, 0.5, 0.75, 1}});
    EXPECT_EQ(os.str(),
              "image,auroc,ap,f1_max,pro\n"
              "a,1.000000,0.500000,0.250000,0.000000\n"
              "b,0.000000,0.500000,0.750000,1.000000\n"
              "mean,0.500000,0.500000,0.500000,0.500000\n");
}
