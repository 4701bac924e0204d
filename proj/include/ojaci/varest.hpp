#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "core.hpp"
#include "oja.hpp"
#include "random.hpp"

namespace ojaci {

struct Schedule {
    Eigen::Index m1 = 1;
    Eigen::Index m2 = 1;
    Eigen::Index batch = 0;
    /// m1 * m2 * batch samples are used; the rest are dropped.
    Eigen::Index used = 0;
    Eigen::Index dropped = 0;
};

/// m1 = ceil(8 ln(d/delta)), m2 = max(2, ceil(ln n)), B = floor(n / (m1 m2)).
inline Schedule plan_schedule(Eigen::Index n, Eigen::Index d, double delta, std::optional<Eigen::Index> m1_override = {},
                              std::optional<Eigen::Index> m2_override = {})
{
    detail::require(n >= 4, "plan_schedule: need n >= 4");
    detail::require(d >= 1, "plan_schedule: need d >= 1");
    detail::require(delta > 0.0 && delta < 1.0, "plan_schedule: delta must lie in (0, 1)");
    Schedule s;
    if (m1_override) {
        detail::require(*m1_override >= 1, "plan_schedule: m1 must be >= 1");
        s.m1 = *m1_override;
    } else {
        s.m1 = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(8.0 * std::log(static_cast<double>(d) / delta))));
    }
    if (m2_override) {
        detail::require(*m2_override >= 1, "plan_schedule: m2 must be >= 1");
        s.m2 = *m2_override;
    } else {
        s.m2 = std::max<Eigen::Index>(2, static_cast<Eigen::Index>(std::ceil(std::log(static_cast<double>(n)))));
    }
    s.batch = n / (s.m1 * s.m2);
    if (s.batch < 2)
        throw InvalidArgument("plan_schedule: batch size " + std::to_string(s.batch) + " < 2; insufficient data for m1=" +
                              std::to_string(s.m1) + ", m2=" + std::to_string(s.m2));
    s.used = s.batch * s.m1 * s.m2;
    s.dropped = n - s.used;
    return s;
}

/// sigma2_k = (1/m2) sum_j (e_k'(v_j - (vtilde'v_j) vtilde))^2.
inline Vector batch_variance(const std::vector<Vector>& batch_vectors, const Vector& vtilde)
{
    detail::require(!batch_vectors.empty(), "batch_variance: no batch vectors");
    Vector acc = Vector::Zero(vtilde.size());
    for (const auto& v : batch_vectors) {
        detail::require(v.size() == vtilde.size(), "batch_variance: dimension mismatch");
        const Vector r = v - vtilde.dot(v) * vtilde;
        acc += r.cwiseAbs2();
    }
    return acc / static_cast<double>(batch_vectors.size());
}

/// Middle order statistic; mean of the two middle ones for an even count.
inline double median_of_means(std::vector<double> values)
{
    detail::require(!values.empty(), "median_of_means: empty input");
    const std::size_t m = values.size();
    std::sort(values.begin(), values.end());
    return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

struct VarEstConfig {
    double delta = 0.05;
    std::optional<Eigen::Index> m1;
    std::optional<Eigen::Index> m2;
    double alpha = 2.0;
    SeedSpec seed;
    /// Forces every batch to start from this unit vector instead of a fresh Gaussian draw.
    std::optional<Vector> init;
    bool keep_batches = false;

    /// m1 = 3, m2 = ln n: the outer-group count used for the coverage experiments.
    static VarEstConfig paper_experiments()
    {
        VarEstConfig c;
        c.m1 = 3;
        return c;
    }
};

struct VarEstResult {
    Vector gamma;
    /// m1 x d matrix of per-group sigma^2_{l,k}.
    Matrix batch_sigma2;
    /// Median over groups of sigma^2_{l,k}; equals gamma * eta_B * gap.
    Vector median_sigma2;
    double eta_b = 0.0;
    double gap = 0.0;
    Schedule schedule;
    Vector vtilde;
    /// Set when vtilde was computed in the same sweep.
    std::optional<double> eta_n;
    std::vector<Vector> batch_estimates;
};

/// Stream index of batch (l, j); stream 0 is reserved for the proxy run.
inline std::uint64_t batch_stream(Eigen::Index index) { return 1 + static_cast<std::uint64_t>(index); }

inline Vector batch_initial_vector(const VarEstConfig& config, Eigen::Index d, Eigen::Index index)
{
    if (config.init) {
        detail::require(config.init->size() == d, "ojavarest: init vector dimension mismatch");
        detail::require_unit(*config.init, "ojavarest: init");
        return *config.init;
    }
    Engine rng = config.seed.derive(batch_stream(index)).engine();
    return random_unit_vector(rng, d);
}

/// Median-of-means aggregation of m1 * m2 batch estimates (group-major order).
inline VarEstResult aggregate_batches(const std::vector<Vector>& estimates, const Vector& vtilde, const Schedule& schedule,
                                      double eta_b, double gap)
{
    detail::require(static_cast<Eigen::Index>(estimates.size()) == schedule.m1 * schedule.m2,
                    "ojavarest: batch estimate count does not match the schedule");
    detail::require(gap > 0.0, "ojavarest: gap must be positive");
    const Eigen::Index d = vtilde.size();
    VarEstResult out;
    out.schedule = schedule;
    out.eta_b = eta_b;
    out.gap = gap;
    out.vtilde = vtilde;
    out.batch_sigma2.resize(schedule.m1, d);
    for (Eigen::Index l = 0; l < schedule.m1; ++l) {
        const auto first = estimates.begin() + l * schedule.m2;
        const std::vector<Vector> group(first, first + schedule.m2);
        out.batch_sigma2.row(l) = batch_variance(group, vtilde).transpose();
    }
    out.median_sigma2.resize(d);
    std::vector<double> column(static_cast<std::size_t>(schedule.m1));
    for (Eigen::Index k = 0; k < d; ++k) {
        for (Eigen::Index l = 0; l < schedule.m1; ++l) column[static_cast<std::size_t>(l)] = out.batch_sigma2(l, k);
        out.median_sigma2[k] = median_of_means(column);
    }
    out.gamma = out.median_sigma2 / (eta_b * gap);
    return out;
}

/// OjaVarEst around a given proxy vtilde.
inline VarEstResult ojavarest(const Dataset& data, const Vector& vtilde, double gap, const VarEstConfig& config)
{
    detail::require(vtilde.size() == data.dim(), "ojavarest: vtilde dimension mismatch");
    detail::require_unit(vtilde, "ojavarest: vtilde");
    detail::require(gap > 0.0, "ojavarest: gap must be positive");
    const Schedule schedule = plan_schedule(data.rows(), data.dim(), config.delta, config.m1, config.m2);
    const double eta_b = learning_rate(schedule.batch, gap, config.alpha);
    std::vector<Vector> estimates;
    estimates.reserve(static_cast<std::size_t>(schedule.m1 * schedule.m2));
    for (Eigen::Index b = 0; b < schedule.m1 * schedule.m2; ++b)
        estimates.push_back(
            oja_run(data, b * schedule.batch, schedule.batch, eta_b, batch_initial_vector(config, data.dim(), b)).estimate);
    VarEstResult out = aggregate_batches(estimates, vtilde, schedule, eta_b, gap);
    if (config.keep_batches) out.batch_estimates = std::move(estimates);
    return out;
}

/// OjaVarEst with vtilde = Oja(D_n, eta_n, u0) computed in the same sweep:
/// each sample advances the proxy iterate and the iterate of the batch that
/// contains it. u0 comes from stream 0 of config.seed.
inline VarEstResult ojavarest_with_proxy(const Dataset& data, double gap, const VarEstConfig& config)
{
    detail::require(gap > 0.0, "ojavarest: gap must be positive");
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.dim();
    const Schedule schedule = plan_schedule(n, d, config.delta, config.m1, config.m2);
    const double eta_b = learning_rate(schedule.batch, gap, config.alpha);
    const double eta_n = learning_rate(n, gap, config.alpha);

    Engine proxy_rng = config.seed.derive(0).engine();
    OjaStream proxy(random_unit_vector(proxy_rng, d), eta_n);
    std::vector<Vector> estimates;
    estimates.reserve(static_cast<std::size_t>(schedule.m1 * schedule.m2));

    const double* x = data.samples().data();
    for (Eigen::Index b = 0; b < schedule.m1 * schedule.m2; ++b) {
        OjaStream lane(batch_initial_vector(config, d, b), eta_b);
        for (Eigen::Index i = b * schedule.batch; i < (b + 1) * schedule.batch; ++i) {
            const double* row = x + i * d;
            proxy.push(row);
            lane.push(row);
        }
        estimates.push_back(lane.estimate());
    }
    for (Eigen::Index i = schedule.used; i < n; ++i) {
        const double* row = x + i * d;
        proxy.push(row);
    }

    VarEstResult out = aggregate_batches(estimates, proxy.estimate(), schedule, eta_b, gap);
    out.eta_n = eta_n;
    if (config.keep_batches) out.batch_estimates = std::move(estimates);
    return out;
}

/// Proxy initial vector used by ojavarest_with_proxy, for reproducing it separately.
inline Vector proxy_initial_vector(const VarEstConfig& config, Eigen::Index d)
{
    Engine rng = config.seed.derive(0).engine();
    return random_unit_vector(rng, d);
}

}  // namespace ojaci
