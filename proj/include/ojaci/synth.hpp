#pragma once

#include <array>
#include <cmath>

#include "core.hpp"
#include "random.hpp"

namespace ojaci {

/// Sigma_ij = exp(-c |i - j|) s_i s_j with s_i = scale * i^{-beta}, X = Sigma^{1/2} Z,
/// Z_ij ~ Uniform(-sqrt 3, sqrt 3).
struct SynthSpec {
    Eigen::Index d = 2;
    double beta = 1.0;
    double c = 0.01;
    double scale = 5.0;
    SeedSpec seed;
};

/// Decay exponents shipped as presets; outputs always record the value used.
inline constexpr std::array<double, 4> kBetaPresets{0.02, 0.2, 1.0, 2.0};

struct SynthModel {
    SynthSpec spec;
    Matrix sigma;
    EigenSystem eigen;
    Matrix root;
};

inline void validate(const SynthSpec& spec)
{
    detail::require(spec.d >= 2, "synth: need d >= 2");
    detail::require(spec.c > 0.0, "synth: need c > 0");
    detail::require(spec.scale > 0.0, "synth: need scale > 0");
    detail::require(std::isfinite(spec.beta), "synth: beta must be finite");
}

inline Matrix build_sigma_matrix(const SynthSpec& spec)
{
    validate(spec);
    Matrix sigma(spec.d, spec.d);
    for (Eigen::Index i = 0; i < spec.d; ++i) {
        const double si = spec.scale * std::pow(static_cast<double>(i + 1), -spec.beta);
        for (Eigen::Index j = 0; j < spec.d; ++j) {
            const double sj = spec.scale * std::pow(static_cast<double>(j + 1), -spec.beta);
            sigma(i, j) = std::exp(-spec.c * std::abs(static_cast<double>(i - j))) * si * sj;
        }
    }
    return sigma;
}

/// Sigma, its eigensystem (eigenvalues clamped at 0) and Sigma^{1/2}.
inline SynthModel build_sigma(const SynthSpec& spec)
{
    SynthModel m;
    m.spec = spec;
    m.sigma = build_sigma_matrix(spec);
    m.eigen = eigendecompose(m.sigma);
    if (m.eigen.eigenvalues.minCoeff() < -1e-8 * m.eigen.lambda1())
        throw NumericalError("synth: constructed covariance is not PSD");
    m.eigen.eigenvalues = m.eigen.eigenvalues.cwiseMax(0.0);
    const Vector root = m.eigen.eigenvalues.cwiseSqrt();
    m.root = m.eigen.eigenvectors * root.asDiagonal() * m.eigen.eigenvectors.transpose();
    m.root = 0.5 * (m.root + m.root.transpose()).eval();
    return m;
}

inline double uniform_sqrt3(Engine& rng)
{
    return std::sqrt(3.0) * (2.0 * uniform_open01(rng) - 1.0);
}

/// Draws X = Sigma^{1/2} Z; satisfies the asymvar Sampler concept.
class SynthSampler {
public:
    explicit SynthSampler(Matrix root) : root_(std::move(root)) {}
    explicit SynthSampler(const SynthModel& model) : root_(model.root) {}

    [[nodiscard]] Eigen::Index dim() const noexcept { return root_.rows(); }

    [[nodiscard]] Vector draw(Engine& rng) const
    {
        Vector z(dim());
        for (Eigen::Index j = 0; j < dim(); ++j) z[j] = uniform_sqrt3(rng);
        return root_ * z;
    }

    [[nodiscard]] SampleMatrix draw_block(Engine& rng, Eigen::Index count) const
    {
        SampleMatrix z(count, dim());
        for (Eigen::Index i = 0; i < count; ++i)
            for (Eigen::Index j = 0; j < dim(); ++j) z(i, j) = uniform_sqrt3(rng);
        // root is symmetric, so the rows of Z root are (root z_i)'.
        return z * root_;
    }

    [[nodiscard]] const Matrix& root() const noexcept { return root_; }

private:
    Matrix root_;
};

inline constexpr Eigen::Index kSampleBlock = 1024;

/// n samples generated in blocks of 1024 rows; block b uses seed.derive(b),
/// so the output is fixed by (spec.seed, n) alone.
inline Dataset sample(const SynthSpec& spec, const Matrix& sigma_root, Eigen::Index n)
{
    detail::require(n >= 1, "synth: need n >= 1");
    detail::require(sigma_root.rows() == spec.d && sigma_root.cols() == spec.d, "synth: root dimension mismatch");
    const SynthSampler sampler(sigma_root);
    SampleMatrix x(n, spec.d);
    for (Eigen::Index begin = 0, b = 0; begin < n; begin += kSampleBlock, ++b) {
        const Eigen::Index count = std::min(kSampleBlock, n - begin);
        Engine rng = spec.seed.derive(static_cast<std::uint64_t>(b)).engine();
        x.middleRows(begin, count) = sampler.draw_block(rng, count);
    }
    return Dataset(std::move(x), Provenance::synthetic);
}

inline Dataset sample(const SynthModel& model, Eigen::Index n) { return sample(model.spec, model.root, n); }

/// Zeroes each entry independently with probability `rate`.
inline Dataset mask_missing(const Dataset& data, double rate, SeedSpec seed)
{
    detail::require(rate >= 0.0 && rate < 1.0, "mask_missing: rate must lie in [0, 1)");
    SampleMatrix x = data.samples();
    if (rate > 0.0) {
        Engine rng = seed.engine();
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index j = 0; j < x.cols(); ++j)
                if (uniform_open01(rng) < rate) x(i, j) = 0.0;
    }
    return Dataset(std::move(x), data.provenance());
}

}  // namespace ojaci
