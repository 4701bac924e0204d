#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace ojaci;
using testing_support::median;
using testing_support::random_matrix;
using testing_support::random_unit;
using testing_support::spiked;

TEST(LearningRate, Examples)
{
    EXPECT_NEAR(learning_rate(1000, 1.0, 2.0), 2.0 * std::log(1000.0) / 1000.0, 1e-17);
    EXPECT_NEAR(learning_rate(1000, 1.0, 2.0), 0.0138155, 1e-7);
    // n = e^2 is not an integer; the formula itself is checked at that point.
    const double n = std::exp(2.0);
    EXPECT_NEAR(1.5 * std::log(n) / n, 3.0 / std::exp(2.0), 1e-15);
    EXPECT_NEAR(3.0 / std::exp(2.0), 0.40601, 1e-5);
}

TEST(LearningRate, Preconditions)
{
    EXPECT_THROW(learning_rate(1000, 0.0, 2.0), InvalidArgument);
    EXPECT_THROW(learning_rate(1000, -1.0, 2.0), InvalidArgument);
    EXPECT_THROW(learning_rate(1, 1.0, 2.0), InvalidArgument);
    EXPECT_THROW(learning_rate(1000, 1.0, 1.0), InvalidArgument);
    EXPECT_GT(learning_rate(2, 1.0, 1.01), 0.0);
}

TEST(OjaRun, OneStepHandComputation)
{
    const Dataset data(SampleMatrix{{1.0, 0.0}});
    const OjaResult r = oja_run(data, 0.5, Vector{{0.6, 0.8}});
    // Unnormalized (0.9, 0.8).
    EXPECT_NEAR(r.estimate[0], 0.9 / std::hypot(0.9, 0.8), 1e-15);
    EXPECT_NEAR(r.estimate[0], 0.74741, 1e-5);
    EXPECT_NEAR(r.estimate[1], 0.66437, 1e-5);
    EXPECT_EQ(r.samples_consumed, 1);
    EXPECT_EQ(r.eta_used, 0.5);
    EXPECT_EQ(r.init_vector, (Vector{{0.6, 0.8}}));
}

TEST(OjaRun, FixedPoint)
{
    SampleMatrix x = SampleMatrix::Zero(50, 3);
    x.col(0).setOnes();
    const OjaResult r = oja_run(Dataset(x), 0.3, Vector::Unit(3, 0));
    EXPECT_EQ(r.estimate, Vector::Unit(3, 0));
}

TEST(OjaRun, MatchesExplicitProduct)
{
    std::mt19937_64 rng(17);
    for (int t = 0; t < 40; ++t) {
        const Eigen::Index n = 1 + t % 50, d = 2 + t % 9;
        const Matrix x = random_matrix(rng, n, d);
        const Vector u0 = random_unit(rng, d);
        const double eta = 0.05;
        std::vector<Matrix> a;
        for (Eigen::Index i = 0; i < n; ++i) a.push_back(x.row(i).transpose() * x.row(i));
        const Vector ref = (oracle::column_product(a, eta, d) * u0).normalized();
        const OjaResult r = oja_run(testing_support::dataset(x), eta, u0);
        EXPECT_LE(sin2(r.estimate, ref), 1e-8);
        EXPECT_GT(r.estimate.dot(ref), 0.0);
        EXPECT_NEAR(r.estimate.norm(), 1.0, 1e-10);
    }
}

TEST(OjaRun, MatchesReferenceUpdate)
{
    std::mt19937_64 rng(4);
    const Matrix x = random_matrix(rng, 300, 6);
    std::vector<Vector> xs;
    for (Eigen::Index i = 0; i < x.rows(); ++i) xs.push_back(x.row(i).transpose());
    const Vector u0 = random_unit(rng, 6);
    const Vector ref = oracle::oja(xs, 0.01, u0);
    EXPECT_LE((oja_run(testing_support::dataset(x), 0.01, u0).estimate - ref).norm(), 1e-12);
}

TEST(OjaRun, NegativeStepStillNormalizes)
{
    // Bootstrap multipliers can be negative; the update must stay well defined.
    std::mt19937_64 rng(8);
    Vector u = random_unit(rng, 5);
    const Vector x = random_matrix(rng, 5, 1);
    detail::oja_step(u.data(), x.data(), 5, -0.3);
    EXPECT_NEAR(u.norm(), 1.0, 1e-12);
}

TEST(OjaRun, Preconditions)
{
    const Dataset data(SampleMatrix{{1.0, 0.0}});
    EXPECT_THROW(oja_run(data, 0.5, Vector{{1.0, 0.0, 0.0}}), InvalidArgument);
    EXPECT_THROW(oja_run(data, 0.0, Vector{{1.0, 0.0}}), InvalidArgument);
    EXPECT_THROW(oja_run(data, 0.5, Vector{{1.0, 1.0}}), InvalidArgument);
}

TEST(OjaRun, DiverseSeedsRecoverSpike)
{
    // Sigma = diag(4, 1, ..., 1): the run should land near e1 in >= 90% of trials.
    const Eigen::Index d = 10, n = 2000;
    const double gap = 3.0;
    int good = 0;
    for (int t = 0; t < 100; ++t) {
        const Dataset data = spiked(n, d, 1000 + t);
        OjaConfig config;
        config.seed = {static_cast<std::uint64_t>(t), 1};
        const OjaResult r = oja_run(data, learning_rate(n, gap, 2.0), initial_vector(config, d));
        if (sin2(r.estimate, Vector::Unit(d, 0)) <= 0.05) ++good;
    }
    EXPECT_GE(good, 90);
}

TEST(OjaRun, StateIsIndependentOfStreamLength)
{
    // The streaming state is one d-vector: pushing samples never allocates.
    OjaStream s(Vector::Unit(3, 0), 0.1);
    const double x[3] = {1.0, 2.0, 3.0};
    for (int i = 0; i < 1000; ++i) s.push(x);
    EXPECT_EQ(s.count(), 1000);
    EXPECT_EQ(s.dim(), 3);
    EXPECT_EQ(sizeof(OjaStream), sizeof(Vector) + sizeof(double) + sizeof(Eigen::Index));
}

TEST(GeometricAggregate, PicksCoincidingPair)
{
    const Vector a = Vector::Unit(3, 0), c = Vector::Unit(3, 2);
    EXPECT_EQ(geometric_aggregate({a, a, c}), 0u);
    EXPECT_EQ(geometric_aggregate({c, a, a}), 1u);
    EXPECT_EQ(geometric_aggregate({a}), 0u);
    EXPECT_THROW(geometric_aggregate({}), InvalidArgument);
}

TEST(OjaBoosted, SingleBatchEqualsPlainRun)
{
    const Dataset data = spiked(500, 4, 3);
    OjaConfig config;
    config.gap = 3.0;
    config.seed = {9, 0};
    const OjaResult boosted = oja_boosted(data, 0.5, config);
    const OjaResult plain = oja_run(data, learning_rate(500, 3.0, config.alpha), initial_vector(config, 4, 0));
    EXPECT_EQ(boosted.estimate, plain.estimate);
    EXPECT_EQ(boosted.samples_consumed, 500);
}

TEST(OjaBoosted, Preconditions)
{
    const Dataset data = spiked(5, 3, 1);
    OjaConfig config;
    config.gap = 3.0;
    EXPECT_THROW(oja_boosted(data, 0.05, config), InvalidArgument);  // q = 3 needs N >= 6
    EXPECT_THROW(oja_boosted(data, 1.0, config), InvalidArgument);
    EXPECT_THROW(oja_boosted(data, 0.0, config), InvalidArgument);
}

TEST(OjaBoosted, NoWorseThanMedianSingleBatch)
{
    const Eigen::Index d = 10, n = 6000;
    const double delta = 0.05;
    const auto q = static_cast<Eigen::Index>(std::ceil(std::log(1.0 / delta)));
    std::vector<double> boosted, single;
    for (int t = 0; t < 50; ++t) {
        const Dataset data = spiked(n, d, 5000 + t);
        OjaConfig config;
        config.gap = 3.0;
        config.seed = {static_cast<std::uint64_t>(t), 2};
        boosted.push_back(sin2(oja_boosted(data, delta, config).estimate, Vector::Unit(d, 0)));
        const double eta = learning_rate(n / q, 3.0, config.alpha);
        std::vector<double> batch;
        for (Eigen::Index b = 0; b < q; ++b)
            batch.push_back(sin2(oja_run(data, b * (n / q), n / q, eta, initial_vector(config, d, b)).estimate,
                                 Vector::Unit(d, 0)));
        single.push_back(median(batch));
    }
    EXPECT_LE(median(boosted), median(single));
}

TEST(OjaRun, EstimatedGapIsUsable)
{
    const Dataset data = spiked(4000, 5, 77);
    const double gap = estimate_gap(data);
    EXPECT_NEAR(gap, 3.0, 0.5);
}
