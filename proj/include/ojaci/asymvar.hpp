#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <vector>

#include "core.hpp"
#include "hoeffding.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace ojaci {

/// A source of i.i.d. mean-zero samples x in R^d.
template <class S>
concept Sampler = requires(const S& s, Engine& rng) {
    { s.dim() } -> std::convertible_to<Eigen::Index>;
    { s.draw(rng) } -> std::convertible_to<Vector>;
};

/// `count` rows from the sampler; uses a native block generator when present.
template <Sampler S>
SampleMatrix draw_block(const S& sampler, Engine& rng, Eigen::Index count)
{
    if constexpr (requires { { sampler.draw_block(rng, count) } -> std::convertible_to<SampleMatrix>; }) {
        return sampler.draw_block(rng, count);
    } else {
        SampleMatrix x(count, sampler.dim());
        for (Eigen::Index i = 0; i < count; ++i) x.row(i) = sampler.draw(rng).transpose();
        return x;
    }
}

struct MomentEstimates {
    /// E[V_perp'(A - Sigma) v1 v1'(A - Sigma) V_perp], (d-1) x (d-1).
    Matrix mtilde;
    Matrix mc_stderr;
    Eigen::Index mc_samples = 0;
    /// E[||A - Sigma||^2]^{1/2}, E[||A - Sigma||^4]^{1/4} and ||E[(A - Sigma)^2]||,
    /// estimated on the first moment_samples draws.
    double m2 = 0.0;
    double m4 = 0.0;
    double vstat = 0.0;
    Eigen::Index moment_samples = 0;
    SeedSpec seed;
};

struct AsymptoticVariance {
    Matrix r0;
    /// V = V_perp R0 V_perp' / (lambda_1 - lambda_2), d x d.
    Matrix v;
    Vector d_factors;
};

namespace detail {

/// Largest |eigenvalue| of x x' - sigma by power iteration.
inline double centered_operator_norm(const Vector& x, const Matrix& sigma, Vector start, int iterations = 50)
{
    double estimate = 0.0;
    start.normalize();
    for (int it = 0; it < iterations; ++it) {
        Vector y = x * x.dot(start) - sigma * start;
        estimate = y.norm();
        if (estimate == 0.0) return 0.0;
        start = y / estimate;
    }
    // Rayleigh quotient of the final direction.
    return std::abs(x.dot(start) * x.dot(start) - start.dot(sigma * start));
}

struct MomentPartial {
    Matrix sum;
    Matrix sum_sq;
    Eigen::Index count = 0;
    double norm2_sum = 0.0;
    double norm4_sum = 0.0;
    Matrix square_sum;
    Eigen::Index moment_count = 0;
};

}  // namespace detail

inline constexpr Eigen::Index kMomentSubsample = 2000;
inline constexpr Eigen::Index kMonteCarloChunk = 8192;

template <Sampler S>
MomentEstimates estimate_mtilde(const S& sampler, const EigenSystem& eigen, Eigen::Index mc_samples, SeedSpec seed,
                                unsigned threads = 1)
{
    detail::require(mc_samples >= 100, "estimate_mtilde: need at least 100 Monte-Carlo samples");
    detail::require(static_cast<Eigen::Index>(sampler.dim()) == eigen.dim(), "estimate_mtilde: sampler dimension mismatch");
    eigen.require_gap();
    const Eigen::Index d = eigen.dim();
    const Vector v1 = eigen.leading();
    const Matrix vp = eigen.perp();
    const Matrix sigma = eigen.reconstruct();
    const Eigen::Index moment_samples = std::min(mc_samples, kMomentSubsample);

    const Eigen::Index chunks = (mc_samples + kMonteCarloChunk - 1) / kMonteCarloChunk;
    std::vector<detail::MomentPartial> parts(static_cast<std::size_t>(chunks));
    parallel_for(parts.size(), threads, [&](std::size_t c) {
        const Eigen::Index begin = static_cast<Eigen::Index>(c) * kMonteCarloChunk;
        const Eigen::Index count = std::min(kMonteCarloChunk, mc_samples - begin);
        Engine rng = seed.derive(c).engine();
        const SampleMatrix x = draw_block(sampler, rng, count);
        // p_i = V_perp'(A_i - Sigma) v1 = (V_perp' x_i)(x_i' v1), since V_perp' Sigma v1 = 0.
        const Vector proj1 = x * v1;
        Matrix p = (x * vp).transpose();
        p.array().rowwise() *= proj1.transpose().array();
        auto& part = parts[c];
        part.sum = p * p.transpose();
        Matrix sq = Matrix::Zero(d - 1, d - 1);
        for (Eigen::Index i = 0; i < count; ++i) {
            const Vector pi = p.col(i);
            sq.array() += (pi * pi.transpose()).array().square();
        }
        part.sum_sq = sq;
        part.count = count;
        part.square_sum = Matrix::Zero(d, d);
        for (Eigen::Index i = 0; i < count && begin + i < moment_samples; ++i) {
            const Vector xi = x.row(i).transpose();
            const double op = detail::centered_operator_norm(xi, sigma, xi + v1);
            part.norm2_sum += op * op;
            part.norm4_sum += op * op * op * op;
            // (x x' - S)^2 = |x|^2 x x' - x (S x)' - (S x) x' + S^2.
            const Vector sx = sigma * xi;
            part.square_sum += xi.squaredNorm() * xi * xi.transpose() - xi * sx.transpose() - sx * xi.transpose();
            ++part.moment_count;
        }
    });
    const auto total = tree_reduce(std::move(parts), [](const detail::MomentPartial& l, const detail::MomentPartial& r) {
        detail::MomentPartial out;
        out.sum = l.sum + r.sum;
        out.sum_sq = l.sum_sq + r.sum_sq;
        out.count = l.count + r.count;
        out.norm2_sum = l.norm2_sum + r.norm2_sum;
        out.norm4_sum = l.norm4_sum + r.norm4_sum;
        out.square_sum = l.square_sum + r.square_sum;
        out.moment_count = l.moment_count + r.moment_count;
        return out;
    });

    MomentEstimates m;
    const auto n = static_cast<double>(total.count);
    m.mtilde = total.sum / n;
    m.mtilde = 0.5 * (m.mtilde + m.mtilde.transpose()).eval();
    const Matrix var = ((total.sum_sq / n).array() - m.mtilde.array().square()).cwiseMax(0.0) * (n / (n - 1.0));
    m.mc_stderr = (var / n).cwiseSqrt();
    m.mc_samples = total.count;
    const auto mn = static_cast<double>(total.moment_count);
    m.m2 = std::sqrt(total.norm2_sum / mn);
    m.m4 = std::pow(total.norm4_sum / mn, 0.25);
    const Matrix e_sq = total.square_sum / mn + sigma * sigma;
    m.vstat = eigendecompose(0.5 * (e_sq + e_sq.transpose())).eigenvalues.cwiseAbs().maxCoeff();
    m.moment_samples = total.moment_count;
    m.seed = seed;
    return m;
}

namespace detail {

inline Matrix r0_denominators(const EigenSystem& eigen)
{
    eigen.require_gap();
    const Vector lp = eigen.perp_eigenvalues();
    const Eigen::Index k = lp.size();
    Matrix den(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) den(i, j) = 2.0 * eigen.lambda1() - lp[i] - lp[j];
    if (den.minCoeff() < kGapTolerance) throw NumericalError("asymvar: denominator 2 lambda_1 - lambda_k - lambda_l vanished");
    return den;
}

}  // namespace detail

/// (R0)_{kl} = Mtilde_{kl} / (2 lambda_1 - lambda_{k+1} - lambda_{l+1}); V = V_perp R0 V_perp' / gap.
inline AsymptoticVariance build_r0_v(const Matrix& mtilde, const EigenSystem& eigen)
{
    const Matrix den = detail::r0_denominators(eigen);
    detail::require(mtilde.rows() == den.rows() && mtilde.cols() == den.cols(), "build_r0_v: mtilde dimension mismatch");
    AsymptoticVariance out;
    out.r0 = mtilde.cwiseQuotient(den);
    const Matrix vp = eigen.perp();
    out.v = vp * out.r0 * vp.transpose() / eigen.gap();
    out.v = 0.5 * (out.v + out.v.transpose()).eval();
    return out;
}

inline AsymptoticVariance build_r0_v(const MomentEstimates& moments, const EigenSystem& eigen)
{
    return build_r0_v(moments.mtilde, eigen);
}

/// d_k = 1 - eta (lambda_1 - lambda_{k+1}) / (1 + eta lambda_1), k = 1..d-1.
inline Vector d_factors(const EigenSystem& eigen, double eta)
{
    const double grow = 1.0 + eta * eigen.lambda1();
    return (1.0 - eta * (eigen.lambda1() - eigen.perp_eigenvalues().array()) / grow).matrix();
}

/// R^(n)_{kl} = Mtilde_{kl} / (1 + eta lambda_1)^2 * (1 - (d_k d_l)^n) / (1 - d_k d_l).
inline Matrix build_rn(const Matrix& mtilde, const EigenSystem& eigen, Eigen::Index n, double eta)
{
    eigen.require_gap();
    detail::require(n >= 1, "build_rn: need n >= 1");
    detail::require(eta > 0.0 && eta * eigen.lambda1() < 1.0, "build_rn: need 0 < eta lambda_1 < 1");
    const Eigen::Index k = eigen.dim() - 1;
    detail::require(mtilde.rows() == k && mtilde.cols() == k, "build_rn: mtilde dimension mismatch");
    const double grow = 1.0 + eta * eigen.lambda1();
    // eps_k = 1 - d_k, kept separately so 1 - d_k d_l = eps_k + eps_l - eps_k eps_l has no cancellation.
    const Vector eps = (eta * (eigen.lambda1() - eigen.perp_eigenvalues().array()) / grow).matrix();
    Matrix rn(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const double one_minus = eps[i] + eps[j] - eps[i] * eps[j];
            if (one_minus <= kGapTolerance) throw NumericalError("build_rn: d_k d_l = 1");
            rn(i, j) = mtilde(i, j) / (grow * grow) * (-std::expm1(static_cast<double>(n) * std::log1p(-one_minus))) /
                       one_minus;
        }
    }
    return rn;
}

inline Matrix build_rn(const MomentEstimates& moments, const EigenSystem& eigen, Eigen::Index n, double eta)
{
    return build_rn(moments.mtilde, eigen, n, eta);
}

/// E[Psi Psi'] = eta^2 V_perp R^(n) V_perp'.
inline Matrix hajek_covariance(const Matrix& mtilde, const EigenSystem& eigen, Eigen::Index n, double eta)
{
    const Matrix vp = eigen.perp();
    return eta * eta * vp * build_rn(mtilde, eigen, n, eta) * vp.transpose();
}

/// Standard error of hajek_covariance propagated entrywise from Mtilde's
/// standard errors through the linear map (triangle bound, conservative).
inline Matrix hajek_covariance_stderr(const Matrix& mtilde_stderr, const EigenSystem& eigen, Eigen::Index n, double eta)
{
    const Matrix vp = eigen.perp().cwiseAbs();
    return eta * eta * vp * build_rn(mtilde_stderr, eigen, n, eta).cwiseAbs() * vp.transpose();
}

struct HajekCovariance {
    Matrix mean;
    Matrix standard_error;
    Eigen::Index trials = 0;
};

/// Monte-Carlo E[Psi_{n,1} Psi_{n,1}'] over fresh datasets of size n.
template <Sampler S>
HajekCovariance empirical_hajek_covariance(const S& sampler, const EigenSystem& eigen, Eigen::Index n, double eta,
                                          Eigen::Index trials, SeedSpec seed, unsigned threads = 1)
{
    detail::require(trials >= 1, "empirical_hajek_covariance: need at least one trial");
    detail::require(static_cast<Eigen::Index>(sampler.dim()) == eigen.dim(), "empirical_hajek_covariance: sampler dimension mismatch");
    const Eigen::Index d = eigen.dim();
    const Matrix sigma = eigen.reconstruct();
    const Vector v1 = eigen.leading();
    std::vector<Vector> psi(static_cast<std::size_t>(trials));
    parallel_for(psi.size(), threads, [&](std::size_t t) {
        Engine rng = seed.derive(t).engine();
        const Dataset data(draw_block(sampler, rng, n));
        psi[t] = hajek_projection(data, sigma, eigen, eta, v1);
    });
    HajekCovariance out;
    out.trials = trials;
    Matrix sum = Matrix::Zero(d, d);
    Matrix sum_sq = Matrix::Zero(d, d);
    for (const auto& p : psi) {
        const Matrix o = p * p.transpose();
        sum += o;
        sum_sq.array() += o.array().square();
    }
    const auto nt = static_cast<double>(trials);
    out.mean = sum / nt;
    if (trials > 1) {
        const Matrix var = ((sum_sq / nt).array() - out.mean.array().square()).cwiseMax(0.0) * (nt / (nt - 1.0));
        out.standard_error = (var / nt).cwiseSqrt();
    } else {
        out.standard_error = Matrix::Zero(d, d);
    }
    return out;
}

/// c_k = sqrt(E[(e_k' E1_B)^2] / eta_B * gap / M2^2), a diagnostic only.
inline Vector ck_diagnostic(const Matrix& hajek_cov, double eta_b, double gap, double m2)
{
    return (hajek_cov.diagonal().array().max(0.0) / eta_b * gap / (m2 * m2)).sqrt().matrix();
}

}  // namespace ojaci
