#include <gtest/gtest.h>

#include "pcinfluence/analysis.hpp"
#include "support/fixtures.hpp"

using namespace pcinfluence;

namespace {

AnalysisConfig config(std::set<Method> methods, std::size_t k = 1) {
    AnalysisConfig cfg;
    cfg.methods = std::move(methods);
    cfg.k = k;
    return cfg;
}

}  // namespace

TEST(Analysis, ColumnsCountsAndPairs) {
    const Dataset d = fixtures::default_synthetic(7, 40, 200);
    const auto r = run_analysis(d, config({Method::exact, Method::approx, Method::shortcut}, 2));
    ASSERT_TRUE(r.exact && r.approx && r.shortcut);
    EXPECT_EQ(r.n, 40u);
    EXPECT_EQ(r.spearman_pair, "exact/shortcut");
    ASSERT_TRUE(r.spearman);
    EXPECT_GE(*r.spearman, 0.9);
    EXPECT_EQ(r.iterations.at("exact_fits"), 41u);
    EXPECT_EQ(r.iterations.at("approx"), 40u * 2u * 198u);
    EXPECT_EQ(r.iterations.at("shortcut"), 40u * 2u * 37u);
    EXPECT_EQ(r.flagged.at("exact").size(), 5u);
    EXPECT_EQ(r.config.at("selection"), "1,2");
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Analysis, PairPriority) {
    const Dataset d = fixtures::default_synthetic(8, 30, 6);
    EXPECT_EQ(run_analysis(d, config({Method::exact, Method::approx})).spearman_pair, "exact/approx");
    EXPECT_EQ(run_analysis(d, config({Method::approx, Method::shortcut})).spearman_pair, "approx/shortcut");
    const auto single = run_analysis(d, config({Method::approx}));
    EXPECT_FALSE(single.spearman);
    EXPECT_TRUE(single.spearman_pair.empty());
}

TEST(Analysis, DeterministicApartFromTimings) {
    const Dataset d = fixtures::default_synthetic(9, 20, 50);
    auto a = run_analysis(d, config({Method::exact, Method::shortcut}, 2));
    auto b = run_analysis(d, config({Method::exact, Method::shortcut}, 2));
    a.timings.clear();
    b.timings.clear();
    EXPECT_EQ(a, b);
}

TEST(Analysis, ExplicitSubset) {
    const Dataset d = fixtures::default_synthetic(10, 30, 6);
    AnalysisConfig cfg = config({Method::approx});
    cfg.subset = {1, 3};
    const auto r = run_analysis(d, cfg);
    EXPECT_EQ(r.config.at("selection"), "1,3");
    const Vector direct = approx_influence(d, Estimator::covariance, SubspaceSelection::from_one_based({1, 3}, 6));
    EXPECT_EQ(*r.approx, std::vector<double>(direct.data(), direct.data() + direct.size()));
}

TEST(Analysis, Rejections) {
    const Dataset d = fixtures::default_synthetic(11, 20, 5);
    AnalysisConfig cfg = config({Method::shortcut});
    cfg.estimator = Estimator::correlation;
    EXPECT_THROW(run_analysis(d, cfg), Error);
    cfg = config({Method::approx});
    cfg.estimator = Estimator::phd;
    EXPECT_THROW(run_analysis(d, cfg), Error);
    EXPECT_THROW(run_analysis(d, config({})), Error);
    EXPECT_THROW(run_analysis(d, config({Method::approx}, 0)), Error);
    EXPECT_THROW(run_analysis(d, config({Method::approx}, 6)), Error);
}

TEST(Analysis, Condition1NamesTheGap) {
    Dataset d;
    d.x = Matrix{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    try {
        run_analysis(d, config({Method::approx}));
        FAIL();
    } catch (const Condition1Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::condition1_violation);
        EXPECT_NE(std::string(e.what()).find("gap"), std::string::npos);
    }
}

TEST(Analysis, IllConditionedWarning) {
    Dataset d;
    const double t = 1e-7;
    d.x = Matrix{{1 + t, 0}, {-1 - t, 0}, {0, 1}, {0, -1}};
    AnalysisConfig cfg = config({Method::approx});
    const auto r = run_analysis(d, cfg);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find("ill-conditioned"), std::string::npos);
}

TEST(Bench, RowsAndErrors) {
    const Dataset d = fixtures::default_synthetic(12, 30, 80);
    const auto rows = run_bench(d, config({Method::exact, Method::approx, Method::shortcut}), {1, 2});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1].k, 2u);
    EXPECT_TRUE(rows[0].t_exact && rows[0].t_approx && rows[0].t_shortcut);
    EXPECT_EQ(rows[0].spearman_pair, "exact/shortcut");
    const std::string csv = bench_to_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "K,T_exact,T_approx,T_shortcut,SR,SR_pair");
    EXPECT_THROW(run_bench(d, config({Method::exact, Method::approx}), {}), Error);
    EXPECT_THROW(run_bench(d, config({Method::approx}), {1}), Error);
}

TEST(Methods, Parse) {
    EXPECT_EQ(parse_method("shortcut"), Method::shortcut);
    EXPECT_THROW(parse_method("fast"), Error);
    EXPECT_EQ(parse_estimator("corr"), Estimator::correlation);
    EXPECT_THROW(parse_estimator("pca"), Error);
}
