#include <gtest/gtest.h>

#include "support.hpp"

using namespace ojaci;

namespace {

SynthSpec make(Eigen::Index d, double beta = 1.0, std::uint64_t seed = 1)
{
    SynthSpec s;
    s.d = d;
    s.beta = beta;
    s.seed = {seed, 0};
    return s;
}

void expect_covariance_fidelity(Eigen::Index d, Eigen::Index n)
{
    const SynthModel model = build_sigma(make(d, 1.0, 40 + static_cast<std::uint64_t>(d)));
    const Dataset data = sample(model, n);
    const Matrix s = sample_covariance(data);
    const auto& x = data.samples();
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            const Vector prod = x.col(i).cwiseProduct(x.col(j));
            const double mean = prod.mean();
            const double se = std::sqrt((prod.array() - mean).square().sum() / (n - 1.0) / static_cast<double>(n));
            EXPECT_LE(std::abs(s(i, j) - model.sigma(i, j)), 5.0 * se) << i << "," << j;
        }
}

}  // namespace

TEST(BuildSigma, LargeDecayIsNearlyDiagonal)
{
    SynthSpec s = make(2);
    s.c = 50.0;
    const SynthModel m = build_sigma(s);
    EXPECT_NEAR(m.sigma(0, 0), 25.0, 1e-12);
    EXPECT_NEAR(m.sigma(1, 1), 6.25, 1e-12);
    EXPECT_LE(std::abs(m.sigma(0, 1)), 1e-20);
}

TEST(BuildSigma, RejectsOneDimension)
{
    EXPECT_THROW(build_sigma(make(1)), InvalidArgument);
    SynthSpec s = make(3);
    s.c = 0.0;
    EXPECT_THROW(build_sigma(s), InvalidArgument);
    s = make(3);
    s.scale = -1.0;
    EXPECT_THROW(build_sigma(s), InvalidArgument);
}

TEST(BuildSigma, EntryFormula)
{
    const SynthModel m = build_sigma(make(3));
    EXPECT_NEAR(m.sigma(0, 1), std::exp(-0.01) * 5.0 * 2.5, 1e-13);
    EXPECT_NEAR(m.sigma(0, 1), 12.3756, 1e-4);
    EXPECT_NEAR(m.sigma(2, 2), 25.0 / 9.0, 1e-13);
}

TEST(BuildSigma, RootSquaresToSigma)
{
    const SynthModel m = build_sigma(make(20, 0.2));
    EXPECT_LE((m.root * m.root - m.sigma).norm(), 1e-8 * m.sigma.norm());
    EXPECT_TRUE((m.eigen.eigenvalues.array() >= 0.0).all());
}

TEST(BuildSigma, PositiveGapAtFifty)
{
    EXPECT_GT(build_sigma(make(50)).eigen.gap(), 1e-6);
}

TEST(BuildSigma, AllPresetsBuild)
{
    for (double beta : kBetaPresets) EXPECT_GT(build_sigma(make(30, beta)).eigen.gap(), 0.0) << beta;
}

TEST(Sample, UniformHasUnitVariance)
{
    Engine rng = SeedSpec{3, 0}.engine();
    const int n = 1000000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = uniform_sqrt3(rng);
        ASSERT_LT(std::abs(z), std::sqrt(3.0));
        sum += z;
        sq += z * z;
    }
    const double var = (sq - sum * sum / n) / (n - 1);
    EXPECT_GE(var, 0.995);
    EXPECT_LE(var, 1.005);
}

TEST(Sample, CovarianceFidelityThree) { expect_covariance_fidelity(3, 100000); }

TEST(Sample, CovarianceFidelityTen) { expect_covariance_fidelity(10, 100000); }

TEST(Sample, MeanZero)
{
    const SynthModel model = build_sigma(make(4, 1.0, 9));
    const Dataset data = sample(model, 100000);
    const auto& x = data.samples();
    for (Eigen::Index j = 0; j < 4; ++j) {
        const double mean = x.col(j).mean();
        const double se = std::sqrt((x.col(j).array() - mean).square().sum() / (x.rows() - 1.0) / x.rows());
        EXPECT_LE(std::abs(mean), 5.0 * se);
    }
}

TEST(Sample, Deterministic)
{
    const SynthModel model = build_sigma(make(5, 1.0, 4));
    EXPECT_EQ(sample(model, 3000).samples(), sample(model, 3000).samples());
    SynthModel other = model;
    other.spec.seed = {5, 0};
    EXPECT_NE(sample(model, 10).samples(), sample(other, 10).samples());
}

TEST(Sample, PrefixStable)
{
    // Block-keyed streams: a shorter draw is a prefix of a longer one.
    const SynthModel model = build_sigma(make(3, 1.0, 6));
    const auto longer = sample(model, 2500).samples();
    EXPECT_EQ(sample(model, 1500).samples(), longer.topRows(1500));
}

TEST(Sample, Preconditions)
{
    const SynthModel model = build_sigma(make(3));
    EXPECT_THROW(sample(model, 0), InvalidArgument);
    EXPECT_THROW(sample(make(4), model.root, 10), InvalidArgument);
}

TEST(MaskMissing, ZeroRateIsIdentity)
{
    const SynthModel model = build_sigma(make(4));
    const Dataset data = sample(model, 100);
    EXPECT_EQ(mask_missing(data, 0.0, {1, 0}).samples(), data.samples());
}

TEST(MaskMissing, FractionConcentrates)
{
    const SynthModel model = build_sigma(make(100));
    const Dataset data = sample(model, 10000);
    const Dataset masked = mask_missing(data, 0.1, {2, 0});
    const double frac = static_cast<double>((masked.samples().array() == 0.0).count()) / 1e6;
    EXPECT_GE(frac, 0.097);
    EXPECT_LE(frac, 0.103);
    // The input is left untouched.
    EXPECT_EQ((data.samples().array() == 0.0).count(), 0);
    const auto kept = (masked.samples().array() != 0.0);
    EXPECT_TRUE((kept.select(masked.samples().array() - data.samples().array(), 0.0) == 0.0).all());
}

TEST(MaskMissing, RejectsRateOne)
{
    const Dataset data = sample(build_sigma(make(3)), 10);
    EXPECT_THROW(mask_missing(data, 1.0, {1, 0}), InvalidArgument);
    EXPECT_THROW(mask_missing(data, -0.1, {1, 0}), InvalidArgument);
    EXPECT_NO_THROW(mask_missing(data, std::nextafter(1.0, 0.0), {1, 0}));
}
