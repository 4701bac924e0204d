#include <gtest/gtest.h>

#include "support.hpp"

using namespace ojaci;
using testing_support::median;
using testing_support::random_matrix;
using testing_support::random_unit;

TEST(PlanSchedule, ExperimentSettings)
{
    const Schedule s = plan_schedule(5000, 2000, 0.05, 3);
    EXPECT_EQ(s.m1, 3);
    EXPECT_EQ(s.m2, 9);
    EXPECT_EQ(s.batch, 185);
    EXPECT_EQ(s.used, 185 * 27);
    EXPECT_EQ(s.dropped, 5000 - 185 * 27);
}

TEST(PlanSchedule, DefaultFormula)
{
    // n = 54 (ln n just below 4), d = 2, delta = 1/e: m1 = ceil(8 ln(2e)) = 14, m2 = 4, B = 0.
    EXPECT_EQ(static_cast<long>(std::ceil(8.0 * std::log(2.0 * std::exp(1.0)))), 14);
    EXPECT_THROW(plan_schedule(54, 2, std::exp(-1.0)), InvalidArgument);
    const Schedule s = plan_schedule(100000, 2, std::exp(-1.0));
    EXPECT_EQ(s.m1, 14);
    EXPECT_EQ(s.m2, 12);
}

TEST(PlanSchedule, UnitOverridesUseEverySample)
{
    const Schedule s = plan_schedule(777, 10, 0.05, 1, 1);
    EXPECT_EQ(s.batch, 777);
    EXPECT_EQ(s.dropped, 0);
}

TEST(PlanSchedule, Preconditions)
{
    EXPECT_THROW(plan_schedule(3, 2, 0.1), InvalidArgument);
    EXPECT_THROW(plan_schedule(100, 2, 0.0), InvalidArgument);
    EXPECT_THROW(plan_schedule(100, 2, 1.0), InvalidArgument);
    EXPECT_THROW(plan_schedule(100, 2, 0.1, 0), InvalidArgument);
}

TEST(BatchVariance, AllEqualProxy)
{
    const Vector v = Vector{{0.6, 0.8, 0.0}};
    EXPECT_EQ(batch_variance({v, v, v}, v), Vector::Zero(3));
}

TEST(BatchVariance, OrthogonalSingleBatch)
{
    const Vector v{{0.0, 0.6, 0.8}};
    EXPECT_EQ(batch_variance({v}, Vector::Unit(3, 0)), Vector(v.cwiseAbs2()));
}

TEST(BatchVariance, HandComputation)
{
    const Vector s = batch_variance({Vector::Unit(2, 1), Vector{{0.6, 0.8}}}, Vector::Unit(2, 0));
    EXPECT_DOUBLE_EQ(s[0], 0.0);
    EXPECT_DOUBLE_EQ(s[1], 0.82);
}

TEST(BatchVariance, SignFlipInvariant)
{
    std::mt19937_64 rng(1);
    const Vector vt = random_unit(rng, 5);
    std::vector<Vector> vs{random_unit(rng, 5), random_unit(rng, 5), random_unit(rng, 5)};
    const Vector a = batch_variance(vs, vt);
    vs[1] = -vs[1];
    EXPECT_EQ(a, batch_variance(vs, vt));
    EXPECT_THROW(batch_variance({}, vt), InvalidArgument);
    EXPECT_THROW(batch_variance({Vector::Unit(4, 0)}, vt), InvalidArgument);
}

TEST(MedianOfMeans, Conventions)
{
    EXPECT_EQ(median_of_means({1, 2, 3, 4, 5}), 3.0);
    EXPECT_EQ(median_of_means({4, 1, 3, 2}), 2.5);
    EXPECT_EQ(median_of_means({7}), 7.0);
    EXPECT_THROW(median_of_means({}), InvalidArgument);
}

TEST(OjaVarEst, ExactBatchesGiveZero)
{
    SampleMatrix x = SampleMatrix::Zero(200, 3);
    x.col(0).setOnes();
    VarEstConfig config;
    config.m1 = 2;
    config.m2 = 2;
    config.init = Vector::Unit(3, 0);
    const VarEstResult r = ojavarest(Dataset(x), Vector::Unit(3, 0), 1.0, config);
    EXPECT_EQ(r.gamma, Vector::Zero(3));
}

TEST(OjaVarEst, CollapsedSchedule)
{
    const Dataset data = testing_support::spiked(1000, 4, 2);
    VarEstConfig config;
    config.m1 = 1;
    config.m2 = 1;
    config.seed = {3, 0};
    const Vector vt = Vector{{0.99, 0.1, 0.0, 0.0}}.normalized();
    const double gap = 3.0;
    const VarEstResult r = ojavarest(data, vt, gap, config);
    const double eta = learning_rate(1000, gap, config.alpha);
    EXPECT_EQ(r.eta_b, eta);
    const Vector vhat = oja_run(data, eta, batch_initial_vector(config, 4, 0)).estimate;
    const Vector resid = vhat - vt.dot(vhat) * vt;
    for (Eigen::Index k = 0; k < 4; ++k) EXPECT_NEAR(r.gamma[k], resid[k] * resid[k] / (eta * gap), 1e-15);
}

TEST(OjaVarEst, ScaleIdentityAndNonnegativity)
{
    const Dataset data = testing_support::spiked(3000, 6, 4);
    VarEstConfig config = VarEstConfig::paper_experiments();
    config.seed = {4, 0};
    const VarEstResult r = ojavarest_with_proxy(data, 3.0, config);
    EXPECT_TRUE((r.gamma.array() >= 0.0).all());
    for (Eigen::Index k = 0; k < 6; ++k) {
        std::vector<double> col;
        for (Eigen::Index l = 0; l < r.schedule.m1; ++l) col.push_back(r.batch_sigma2(l, k));
        EXPECT_NEAR(r.gamma[k] * r.eta_b * r.gap, median(col), 1e-15 * median(col));
        EXPECT_EQ(r.median_sigma2[k], median(col));
    }
}

TEST(OjaVarEst, SignFlipsLeaveResultBitIdentical)
{
    const Dataset data = testing_support::spiked(2000, 5, 5);
    VarEstConfig config = VarEstConfig::paper_experiments();
    config.seed = {5, 0};
    config.keep_batches = true;
    const VarEstResult r = ojavarest(data, Vector::Unit(5, 0), 3.0, config);
    std::vector<Vector> flipped = r.batch_estimates;
    for (std::size_t i = 0; i < flipped.size(); i += 2) flipped[i] = -flipped[i];
    const VarEstResult f = aggregate_batches(flipped, r.vtilde, r.schedule, r.eta_b, r.gap);
    EXPECT_EQ(f.gamma, r.gamma);
    EXPECT_EQ(f.batch_sigma2, r.batch_sigma2);
}

TEST(OjaVarEst, FusedSweepMatchesSeparatePasses)
{
    const Dataset data = testing_support::spiked(2500, 5, 6);
    VarEstConfig config = VarEstConfig::paper_experiments();
    config.seed = {6, 0};
    const VarEstResult fused = ojavarest_with_proxy(data, 3.0, config);
    const Vector vt = oja_run(data, learning_rate(2500, 3.0, config.alpha), proxy_initial_vector(config, 5)).estimate;
    EXPECT_EQ(fused.vtilde, vt);
    const VarEstResult separate = ojavarest(data, vt, 3.0, config);
    EXPECT_EQ(fused.gamma, separate.gamma);
    EXPECT_EQ(*fused.eta_n, learning_rate(2500, 3.0, config.alpha));
}

TEST(OjaVarEst, Deterministic)
{
    const Dataset data = testing_support::spiked(2000, 4, 7);
    VarEstConfig config;
    config.m1 = 3;
    config.seed = {7, 1};
    const auto a = ojavarest_with_proxy(data, 3.0, config);
    const auto b = ojavarest_with_proxy(data, 3.0, config);
    EXPECT_EQ(a.gamma, b.gamma);
    EXPECT_EQ(a.vtilde, b.vtilde);
    config.seed = {8, 1};
    EXPECT_NE(ojavarest_with_proxy(data, 3.0, config).gamma, a.gamma);
}

TEST(OjaVarEst, Preconditions)
{
    const Dataset data = testing_support::spiked(100, 3, 8);
    VarEstConfig config;
    EXPECT_THROW(ojavarest(data, Vector::Unit(3, 0), 0.0, config), InvalidArgument);
    EXPECT_THROW(ojavarest(data, Vector::Unit(3, 0), 1.0, config), InvalidArgument);  // m1 = ceil(8 ln 60) = 33
    config.m1 = 2;
    EXPECT_THROW(ojavarest(data, Vector{{1.0, 1.0, 0.0}}, 1.0, config), InvalidArgument);
    EXPECT_THROW(ojavarest(data, Vector::Unit(4, 0), 1.0, config), InvalidArgument);
}

TEST(OjaVarEst, ErrorShrinksWithSampleSize)
{
    // d = 50 synthetic family: median over trials of the worst relative error
    // over the 5 largest V_kk must not grow from n = 10000 to n = 40000. Uses the
    // default m1 = ceil(8 ln(d / delta)); with m1 fixed at 3 the median over three
    // groups keeps a variance floor that n does not reduce.
    SynthSpec spec;
    spec.d = 50;
    const SynthModel model = build_sigma(spec);
    const auto moments = estimate_mtilde(SynthSampler(model), model.eigen, 200000, {31, 0});
    const Vector vkk = build_r0_v(moments, model.eigen).v.diagonal();
    std::vector<Eigen::Index> top(50);
    std::iota(top.begin(), top.end(), 0);
    std::partial_sort(top.begin(), top.begin() + 5, top.end(), [&](auto a, auto b) { return vkk[a] > vkk[b]; });
    top.resize(5);
    auto worst = [&](Eigen::Index n) {
        std::vector<double> errs;
        for (int t = 0; t < 30; ++t) {
            SynthSpec ts = spec;
            ts.seed = SeedSpec{32, static_cast<std::uint64_t>(n)}.derive(static_cast<std::uint64_t>(t));
            const Dataset data = sample(ts, model.root, n);
            VarEstConfig config;
            config.seed = ts.seed.derive(1);
            const VarEstResult r = ojavarest_with_proxy(data, model.eigen.gap(), config);
            double e = 0.0;
            for (Eigen::Index k : top) e = std::max(e, std::abs(r.gamma[k] - vkk[k]) / vkk[k]);
            errs.push_back(e);
        }
        return median(errs);
    };
    const double small = worst(10000), large = worst(40000);
    EXPECT_LE(large, small) << small << " -> " << large;
}
