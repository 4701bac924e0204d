#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "core.hpp"
#include "oja.hpp"

namespace ojaci {

/// Subset enumeration is C(n, k) products of n factors; 14 keeps it sub-second at d <= 6.
inline constexpr Eigen::Index kMaxEnumeration = 14;

inline std::vector<Matrix> outer_products(const Dataset& data)
{
    std::vector<Matrix> a;
    a.reserve(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const Vector x = data.row(i).transpose();
        a.push_back(x * x.transpose());
    }
    return a;
}

namespace detail {

inline void require_square_family(std::span<const Matrix> a, Eigen::Index d, const char* who)
{
    for (const auto& m : a)
        require(m.rows() == d && m.cols() == d, std::string(who) + ": dimension mismatch");
}

inline double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace detail

/// B_n = (I + eta A_n) ... (I + eta A_1); the identity when a is empty.
inline Matrix matrix_product(std::span<const Matrix> a, double eta, Eigen::Index dim)
{
    detail::require_square_family(a, dim, "matrix_product");
    Matrix b = Matrix::Identity(dim, dim);
    for (const auto& ai : a) b = (b + eta * ai * b).eval();
    return b;
}

inline Matrix matrix_product(std::span<const Matrix> a, double eta)
{
    detail::require(!a.empty(), "matrix_product: dimension unknown for an empty product");
    return matrix_product(a, eta, a.front().rows());
}

namespace detail {

/// prod_{i=n..1} M_{S,i} for the subset encoded in `mask` (bit i-1 <=> i in S).
inline Matrix subset_product(std::span<const Matrix> a, const Matrix& sigma, double eta, std::uint32_t mask)
{
    const Eigen::Index d = sigma.rows();
    const Matrix drift = Matrix::Identity(d, d) + eta * sigma;
    Matrix p = Matrix::Identity(d, d);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (mask & (1u << i))
            p = (eta * (a[i] - sigma) * p).eval();
        else
            p = (drift * p).eval();
    }
    return p;
}

inline void require_enumerable(std::span<const Matrix> a, const Matrix& sigma, const char* who)
{
    require(sigma.rows() == sigma.cols(), std::string(who) + ": sigma must be square");
    require(static_cast<Eigen::Index>(a.size()) <= kMaxEnumeration,
            std::string(who) + ": n exceeds the enumeration cap of 14");
    require_square_family(a, sigma.rows(), who);
}

}  // namespace detail

/// T_{n,k} = sum over |S| = k of prod_{i=1..n} M_{S,n+1-i}, with
/// M_{S,i} = eta (A_i - Sigma) for i in S and I + eta Sigma otherwise.
inline Matrix hoeffding_term(std::span<const Matrix> a, const Matrix& sigma, double eta, Eigen::Index k)
{
    detail::require_enumerable(a, sigma, "hoeffding_term");
    const auto n = static_cast<Eigen::Index>(a.size());
    detail::require(k >= 0 && k <= n, "hoeffding_term: order out of range");
    const Eigen::Index d = sigma.rows();
    Matrix t = Matrix::Zero(d, d);
    if (k == 0) return detail::subset_product(a, sigma, eta, 0u);
    // Gosper's hack walks the k-subsets of n bits in increasing order.
    const std::uint32_t limit = 1u << n;
    for (std::uint32_t mask = (1u << k) - 1u; mask < limit;) {
        t += detail::subset_product(a, sigma, eta, mask);
        const std::uint32_t low = mask & (~mask + 1u);
        const std::uint32_t ripple = mask + low;
        mask = (((ripple ^ mask) >> 2) / low) | ripple;
    }
    return t;
}

/// All of T_{n,0}, ..., T_{n,n} in one sweep over the 2^n subsets.
inline std::vector<Matrix> hoeffding_terms(std::span<const Matrix> a, const Matrix& sigma, double eta)
{
    detail::require_enumerable(a, sigma, "hoeffding_terms");
    const auto n = static_cast<std::size_t>(a.size());
    const Eigen::Index d = sigma.rows();
    std::vector<Matrix> terms(n + 1, Matrix::Zero(d, d));
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask)
        terms[static_cast<std::size_t>(std::popcount(mask))] += detail::subset_product(a, sigma, eta, mask);
    return terms;
}

/// Psi_{n,1} = E^1_n = eta sum_j X^n_j with
/// X^n_j = sign(v1'u0)/(1 + eta lambda_1) V_perp Lambda_perp^{n-j} V_perp' (A_j - Sigma) v_1.
inline Vector hajek_projection(std::span<const Matrix> a, const Matrix& sigma, const EigenSystem& eigen, double eta,
                               const Vector& u0)
{
    eigen.require_gap();
    const Eigen::Index d = eigen.dim();
    detail::require(sigma.rows() == d && sigma.cols() == d && u0.size() == d, "hajek_projection: dimension mismatch");
    detail::require_square_family(a, d, "hajek_projection");
    const Vector v1 = eigen.leading();
    const Matrix vp = eigen.perp();
    const double shrink = 1.0 + eta * eigen.lambda1();
    const Vector lambda_perp = ((1.0 + eta * eigen.perp_eigenvalues().array()) / shrink).matrix();
    const Vector sigma_v1 = sigma * v1;

    // Horner: acc_j = Lambda_perp acc_{j-1} + V_perp'(A_j - Sigma) v_1.
    Vector acc = Vector::Zero(d - 1);
    for (const auto& aj : a) acc = (lambda_perp.cwiseProduct(acc) + vp.transpose() * (aj * v1 - sigma_v1)).eval();
    return (eta * detail::sign_of(v1.dot(u0)) / shrink) * (vp * acc);
}

inline Vector hajek_projection(const Dataset& data, const Matrix& sigma, const EigenSystem& eigen, double eta,
                               const Vector& u0)
{
    eigen.require_gap();
    const Eigen::Index d = eigen.dim();
    detail::require(data.dim() == d && sigma.rows() == d && u0.size() == d, "hajek_projection: dimension mismatch");
    const Vector v1 = eigen.leading();
    const Matrix vp = eigen.perp();
    const double shrink = 1.0 + eta * eigen.lambda1();
    const Vector lambda_perp = ((1.0 + eta * eigen.perp_eigenvalues().array()) / shrink).matrix();
    const Vector perp_sigma_v1 = vp.transpose() * (sigma * v1);

    Vector acc = Vector::Zero(d - 1);
    for (Eigen::Index j = 0; j < data.rows(); ++j) {
        const Vector x = data.row(j).transpose();
        acc = (lambda_perp.cwiseProduct(acc) + (vp.transpose() * x) * x.dot(v1) - perp_sigma_v1).eval();
    }
    return (eta * detail::sign_of(v1.dot(u0)) / shrink) * (vp * acc);
}

/// Exact terms of v_oja - (vtilde' v_oja) vtilde = E0 + E1 + E2 + E3 + E4 on one instance.
struct DecompositionReport {
    Eigen::Index n = 0;
    Eigen::Index d = 0;
    double eta = 0.0;
    Matrix sigma;
    Vector u0;
    Vector vtilde;
    /// Oja output from a direct streaming run over the A_i.
    Vector v_oja;
    /// B_n = bn_scaled * exp(log_scale), log_scale = n log(1 + eta lambda_1).
    Matrix bn_scaled;
    double log_scale = 0.0;
    /// T_{n,0..n}; empty when n exceeds the enumeration cap.
    std::vector<Matrix> terms;
    Vector e0, e1, e2, e3, e4;
    /// E2 by the recentered-remainder route, kept as a cross-check.
    Vector e2_remainder;
    bool e2_enumerated = false;

    [[nodiscard]] Matrix bn() const { return bn_scaled * std::exp(log_scale); }
    [[nodiscard]] Vector lhs() const { return v_oja - vtilde.dot(v_oja) * vtilde; }
    [[nodiscard]] Vector residual_sum() const { return e0 + e1 + e2 + e3 + e4; }
    [[nodiscard]] double identity_error() const { return (lhs() - residual_sum()).norm(); }

    /// ||B_n - sum_k T_{n,k}||_F / ||B_n||_F, or NaN without terms.
    [[nodiscard]] double hoeffding_error() const
    {
        if (terms.empty()) return std::nan("");
        Matrix sum = Matrix::Zero(d, d);
        for (const auto& t : terms) sum += t;
        const Matrix b = bn();
        return (b - sum).norm() / b.norm();
    }
};

namespace detail {

/// Streaming Oja over general symmetric A_i: u <- normalize(u + eta A_i u).
inline Vector oja_over_matrices(std::span<const Matrix> a, double eta, const Vector& u0)
{
    Vector u = u0;
    for (const auto& ai : a) {
        u += eta * (ai * u);
        const double norm = u.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("oja: iterate vanished or diverged");
        u /= norm;
    }
    return u;
}

}  // namespace detail

inline DecompositionReport residual_decomposition(std::span<const Matrix> a, const Matrix& sigma,
                                                  const EigenSystem& eigen, double eta, const Vector& u0,
                                                  const Vector& vtilde)
{
    eigen.require_gap();
    const Eigen::Index d = eigen.dim();
    detail::require(sigma.rows() == d && sigma.cols() == d && u0.size() == d && vtilde.size() == d,
                    "residual_decomposition: dimension mismatch");
    detail::require_square_family(a, d, "residual_decomposition");
    detail::require(eta > 0.0, "residual_decomposition: eta must be positive");
    detail::require_unit(u0, "residual_decomposition: u0");
    detail::require_unit(vtilde, "residual_decomposition: vtilde");
    const Vector v1 = eigen.leading();
    const double overlap = v1.dot(u0);
    detail::require(overlap != 0.0, "residual_decomposition: v1'u0 = 0 leaves E3/E4 undefined");

    DecompositionReport r;
    r.n = static_cast<Eigen::Index>(a.size());
    r.d = d;
    r.eta = eta;
    r.sigma = sigma;
    r.u0 = u0;
    r.vtilde = vtilde;
    r.v_oja = detail::oja_over_matrices(a, eta, u0);

    const double grow = 1.0 + eta * eigen.lambda1();
    const double shrink = 1.0 / grow;
    const Matrix id = Matrix::Identity(d, d);
    Matrix bs = id;
    for (const auto& ai : a) bs = ((bs + eta * ai * bs) * shrink).eval();
    r.bn_scaled = bs;
    r.log_scale = static_cast<double>(r.n) * std::log1p(eta * eigen.lambda1());

    const Matrix vp = eigen.perp();
    const Matrix proj = vp * vp.transpose();
    const double sgn = detail::sign_of(overlap);
    const double abs_overlap = std::abs(overlap);

    r.e0 = v1.dot(r.v_oja) * v1 - vtilde.dot(r.v_oja) * vtilde;
    r.e1 = hajek_projection(a, sigma, eigen, eta, u0);

    // E[B_n] / (1 + eta lambda_1)^n in closed form.
    Matrix mean_scaled = id;
    const Matrix drift_scaled = (id + eta * sigma) * shrink;
    for (Eigen::Index i = 0; i < r.n; ++i) mean_scaled = (drift_scaled * mean_scaled).eval();
    r.e2_remainder = sgn * (proj * ((bs - mean_scaled) * v1)) - r.e1;

    if (r.n <= kMaxEnumeration) {
        r.terms = hoeffding_terms(a, sigma, eta);
        Matrix higher = Matrix::Zero(d, d);
        for (std::size_t k = 2; k < r.terms.size(); ++k) higher += r.terms[k];
        r.e2 = (sgn * std::pow(shrink, static_cast<double>(r.n))) * (proj * (higher * v1));
        r.e2_enumerated = true;
    } else {
        r.e2 = r.e2_remainder;
    }

    const Vector bu = bs * u0;
    r.e3 = (proj * bu) * (1.0 / bu.norm() - 1.0 / abs_overlap);
    r.e4 = (proj * (bs * (proj * u0))) / abs_overlap;
    return r;
}

inline DecompositionReport residual_decomposition(const Dataset& data, const Matrix& sigma, const EigenSystem& eigen,
                                                  double eta, const Vector& u0, const Vector& vtilde)
{
    const std::vector<Matrix> a = outer_products(data);
    return residual_decomposition(std::span<const Matrix>(a), sigma, eigen, eta, u0, vtilde);
}

}  // namespace ojaci
