#include <gtest/gtest.h>

#include <chrono>

#include "support.hpp"

using namespace ojaci;
using testing_support::random_unit;

TEST(Bootstrap, UnitMultiplierReducesToOja)
{
    const Dataset data = testing_support::spiked(1500, 6, 1);
    std::mt19937_64 rng(1);
    const Vector u0 = random_unit(rng, 6);
    BootstrapConfig config;
    config.b = 1;
    config.law = MultiplierLaw::unit;
    config.eta = 0.004;
    const auto replicas = bootstrap_run(data, config, u0);
    ASSERT_EQ(replicas.size(), 1u);
    EXPECT_EQ(replicas[0], oja_run(data, 0.004, u0).estimate);
}

TEST(Bootstrap, FixedPoint)
{
    SampleMatrix x = SampleMatrix::Zero(100, 3);
    x.col(0).setConstant(1.5);
    BootstrapConfig config;
    config.b = 7;
    config.eta = 0.2;
    config.seed = {2, 0};
    for (const auto& v : bootstrap_run(Dataset(x), config, Vector::Unit(3, 0))) EXPECT_EQ(v, Vector::Unit(3, 0));
}

TEST(Bootstrap, ProxyLaneMatchesPlainRun)
{
    const Dataset data = testing_support::spiked(800, 4, 3);
    std::mt19937_64 rng(3);
    const Vector u0 = random_unit(rng, 4), p0 = random_unit(rng, 4);
    BootstrapConfig config;
    config.b = 5;
    config.eta = 0.005;
    config.seed = {3, 0};
    const BootstrapOutput out = bootstrap_with_proxy(data, config, u0, p0, 0.007);
    EXPECT_EQ(*out.vtilde, oja_run(data, 0.007, p0).estimate);
    EXPECT_EQ(out.replicas, bootstrap_run(data, config, u0));
}

TEST(Bootstrap, ReplicaExchangeability)
{
    const Dataset data = testing_support::spiked(1000, 5, 4);
    std::mt19937_64 rng(4);
    const Vector u0 = random_unit(rng, 5);
    BootstrapConfig config;
    config.b = 4;
    config.eta = 0.004;
    config.seed = {4, 0};
    config.replica_streams = std::vector<std::uint64_t>{10, 11, 12, 13};
    const auto a = bootstrap_run(data, config, u0);
    config.replica_streams = std::vector<std::uint64_t>{12, 10, 13, 11};
    const auto b = bootstrap_run(data, config, u0);
    EXPECT_EQ(a[2], b[0]);
    EXPECT_EQ(a[0], b[1]);
    EXPECT_EQ(a[3], b[2]);
    EXPECT_EQ(a[1], b[3]);
    const Vector vt = oja_run(data, 0.004, u0).estimate;
    EXPECT_LE((bootstrap_variance(a, vt) - bootstrap_variance(b, vt)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bootstrap, NormalMultipliersStayUnit)
{
    const Dataset data = testing_support::spiked(500, 4, 5);
    BootstrapConfig config;
    config.b = 3;
    config.law = MultiplierLaw::normal;
    config.eta = 0.01;
    config.seed = {5, 0};
    for (const auto& v : bootstrap_run(data, config, Vector::Unit(4, 1))) EXPECT_NEAR(v.norm(), 1.0, 1e-12);
}

TEST(Bootstrap, Preconditions)
{
    const Dataset data = testing_support::spiked(50, 3, 6);
    BootstrapConfig config;
    config.eta = 0.01;
    config.b = 0;
    EXPECT_THROW(bootstrap_run(data, config, Vector::Unit(3, 0)), InvalidArgument);
    config.b = 2;
    EXPECT_THROW(bootstrap_run(data, config, Vector::Unit(2, 0)), InvalidArgument);
    config.eta = 0.0;
    EXPECT_THROW(bootstrap_run(data, config, Vector::Unit(3, 0)), InvalidArgument);
    EXPECT_THROW(parse_multiplier_law("poisson"), InvalidArgument);
    EXPECT_EQ(parse_multiplier_law("exponential"), MultiplierLaw::exponential);
    EXPECT_EQ(parse_multiplier_law("normal"), MultiplierLaw::normal);
}

TEST(BootstrapVariance, Examples)
{
    const Vector vt = Vector{{0.6, 0.8}};
    EXPECT_EQ(bootstrap_variance({vt, vt}, vt), Vector::Zero(2));
    const Vector v = Vector::Unit(2, 0);
    const Vector r = v - vt.dot(v) * vt;
    EXPECT_EQ(bootstrap_variance({v}, vt), Vector(r.cwiseAbs2()));
    EXPECT_EQ(bootstrap_variance({v}, vt), bootstrap_variance({Vector(-v)}, vt));
    EXPECT_THROW(bootstrap_variance({}, vt), InvalidArgument);
}

TEST(Bootstrap, CostIsLinearInReplicas)
{
    SynthSpec spec;
    spec.d = 1000;
    spec.seed = {7, 0};
    const SynthModel model = build_sigma(spec);
    const Dataset data = sample(model, 5000);
    const double eta = learning_rate(5000, model.eigen.gap(), 2.0);
    auto time_b = [&](Eigen::Index b) {
        BootstrapConfig config;
        config.b = b;
        config.eta = eta;
        config.seed = {7, 1};
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto replicas = bootstrap_run(data, config, Vector::Unit(1000, 0));
            const auto t1 = std::chrono::steady_clock::now();
            EXPECT_EQ(static_cast<Eigen::Index>(replicas.size()), b);
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        }
        return best;
    };
    const double ratio = time_b(20) / time_b(1);
    EXPECT_GE(ratio, 8.0);
    EXPECT_LE(ratio, 30.0);
}
