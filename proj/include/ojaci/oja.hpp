#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "core.hpp"
#include "random.hpp"

namespace ojaci {

struct OjaConfig {
    double alpha = 2.0;
    /// lambda_1 - lambda_2. Estimated from the data when absent.
    std::optional<double> gap;
    SeedSpec seed;
    /// Explicit unit initial vector; otherwise u0 = g/||g||, g ~ N(0, I).
    std::optional<Vector> init;
};

struct OjaResult {
    Vector estimate;
    double eta_used = 0.0;
    Eigen::Index samples_consumed = 0;
    Vector init_vector;
};

/// eta_n = alpha * ln(n) / (n * gap).
inline double learning_rate(Eigen::Index n, double gap, double alpha)
{
    detail::require(n >= 2, "learning_rate: need n >= 2");
    detail::require(gap > 0.0 && std::isfinite(gap), "learning_rate: gap must be positive");
    detail::require(alpha > 1.0, "learning_rate: alpha must exceed 1");
    return alpha * std::log(static_cast<double>(n)) / (static_cast<double>(n) * gap);
}

namespace detail {

/// u <- (u + eta (x.u) x) / ||.||, for unit u. With s = x.u and c = eta s,
/// ||u + c x||^2 = (1 + c s)^2 + c^2 (||x||^2 - s^2), a sum of nonnegative terms
/// for any sign of eta, so the update costs two passes over the coordinates.
/// ||x||^2 accumulates alongside x.u in the first pass.
inline void oja_step(double* u, const double* x, Eigen::Index d, double eta)
{
    double s = 0.0;
    double x_sq = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        s += x[i] * u[i];
        x_sq += x[i] * x[i];
    }
    const double c = eta * s;
    const double lead = 1.0 + c * s;
    const double norm2 = lead * lead + c * c * std::max(0.0, x_sq - s * s);
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) throw NumericalError("oja: iterate vanished or diverged");
    const double inv = 1.0 / std::sqrt(norm2);
    for (Eigen::Index i = 0; i < d; ++i) u[i] = (u[i] + c * x[i]) * inv;
}

inline double squared_norm(const double* x, Eigen::Index d)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) s += x[i] * x[i];
    return s;
}

inline Vector normalized(const Vector& u)
{
    const double norm = u.norm();
    if (!(norm > 0.0)) throw NumericalError("oja: zero iterate");
    return u / norm;
}

}  // namespace detail

/// Single-pass Oja iterate. Holds O(d) state; samples are pushed one at a time.
class OjaStream {
public:
    OjaStream(const Vector& u0, double eta) : u_(u0), eta_(eta)
    {
        detail::require(eta > 0.0 && std::isfinite(eta), "oja: eta must be positive");
        detail::require_unit(u0, "oja");
    }

    void push(std::span<const double> x)
    {
        detail::require(static_cast<Eigen::Index>(x.size()) == u_.size(), "oja: dimension mismatch");
        push(x.data());
    }

    /// x points at dim() contiguous coordinates.
    void push(const double* x)
    {
        detail::oja_step(u_.data(), x, u_.size(), eta_);
        ++count_;
    }

    [[nodiscard]] Vector estimate() const { return detail::normalized(u_); }
    [[nodiscard]] Eigen::Index count() const noexcept { return count_; }
    [[nodiscard]] double eta() const noexcept { return eta_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return u_.size(); }

private:
    Vector u_;
    double eta_;
    Eigen::Index count_ = 0;
};

/// Oja over rows [begin, begin + count) of data.
inline OjaResult oja_run(const Dataset& data, Eigen::Index begin, Eigen::Index count, double eta, const Vector& u0)
{
    detail::require(u0.size() == data.dim(), "oja_run: dimension mismatch");
    detail::require(count >= 1 && begin >= 0 && begin + count <= data.rows(), "oja_run: sample range out of bounds");
    OjaStream stream(u0, eta);
    const auto& x = data.samples();
    const Eigen::Index d = data.dim();
    for (Eigen::Index i = begin; i < begin + count; ++i) {
        const double* row = x.data() + i * d;
        stream.push(row);
    }
    return {stream.estimate(), eta, count, u0};
}

inline OjaResult oja_run(const Dataset& data, double eta, const Vector& u0)
{
    return oja_run(data, 0, data.rows(), eta, u0);
}

/// Gap of the sample covariance of the first min(n, max_rows) rows.
inline double estimate_gap(const Dataset& data, Eigen::Index max_rows = 4096)
{
    const Eigen::Index rows = std::min(data.rows(), max_rows);
    const EigenSystem es = eigendecompose(sample_covariance(data.slice(0, rows)));
    es.require_gap();
    return es.gap();
}

inline double resolve_gap(const OjaConfig& config, const Dataset& data)
{
    if (config.gap) {
        detail::require(*config.gap > 0.0, "oja: gap must be positive");
        return *config.gap;
    }
    return estimate_gap(data);
}

/// Initial vector for the run keyed by `stream_index`: the explicit init when
/// configured, else a Gaussian direction from seed.derive(stream_index).
inline Vector initial_vector(const OjaConfig& config, Eigen::Index d, std::uint64_t stream_index = 0)
{
    if (config.init) {
        detail::require(config.init->size() == d, "oja: init vector dimension mismatch");
        detail::require_unit(*config.init, "oja: init");
        return *config.init;
    }
    Engine rng = config.seed.derive(stream_index).engine();
    return random_unit_vector(rng, d);
}

/// Index of the candidate whose median sin^2 distance to the others is smallest.
inline std::size_t geometric_aggregate(const std::vector<Vector>& candidates)
{
    detail::require(!candidates.empty(), "geometric_aggregate: no candidates");
    if (candidates.size() == 1) return 0;
    std::size_t best = 0;
    double best_score = 0.0;
    std::vector<double> dist;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        dist.clear();
        for (std::size_t j = 0; j < candidates.size(); ++j)
            if (j != i) dist.push_back(sin2(candidates[i], candidates[j]));
        std::sort(dist.begin(), dist.end());
        const std::size_t m = dist.size();
        const double med = m % 2 == 1 ? dist[m / 2] : 0.5 * (dist[m / 2 - 1] + dist[m / 2]);
        if (i == 0 || med < best_score) {
            best = i;
            best_score = med;
        }
    }
    return best;
}

/// High-probability variant: q = max(1, ceil(ln(1/delta))) contiguous batches,
/// one Oja run each at eta_{N/q}, aggregated geometrically.
inline OjaResult oja_boosted(const Dataset& data, double delta, const OjaConfig& config)
{
    detail::require(delta > 0.0 && delta < 1.0, "oja_boosted: delta must lie in (0, 1)");
    const auto q = static_cast<Eigen::Index>(std::max(1.0, std::ceil(std::log(1.0 / delta))));
    const Eigen::Index n = data.rows();
    detail::require(n >= 2 * q, "oja_boosted: too few samples for the batch count");
    const Eigen::Index size = n / q;
    const double gap = resolve_gap(config, data);
    const double eta = learning_rate(size, gap, config.alpha);

    std::vector<OjaResult> runs;
    runs.reserve(static_cast<std::size_t>(q));
    for (Eigen::Index b = 0; b < q; ++b)
        runs.push_back(oja_run(data, b * size, size, eta, initial_vector(config, data.dim(), static_cast<std::uint64_t>(b))));
    std::vector<Vector> candidates;
    for (const auto& r : runs) candidates.push_back(r.estimate);
    OjaResult best = runs[geometric_aggregate(candidates)];
    best.samples_consumed = size * q;
    return best;
}

}  // namespace ojaci
