#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "core.hpp"

namespace ojaci {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Phi^{-1}(p) by bisection on erfc, to 1e-12 in x.
inline double normal_quantile(double p)
{
    detail::require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0, 1)");
    double lo = -40.0;
    double hi = 40.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (normal_cdf(mid) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Two-sided critical value z with P(|Z| <= z) = level.
inline double two_sided_z(double level)
{
    detail::require(level > 0.0 && level < 1.0, "confidence level must lie in (0, 1)");
    return normal_quantile(1.0 - (1.0 - level) / 2.0);
}

/// `batch`: sigma2 is used as is. `full`: sigma2 is rescaled by eta_n / eta_B,
/// moving a batch-size variance to the full-sample learning rate.
enum class ScaleMode { batch, full };
enum class SigmaSource { ojavarest, bootstrap };

inline const char* to_string(ScaleMode m) { return m == ScaleMode::batch ? "batch" : "full"; }
inline const char* to_string(SigmaSource s) { return s == SigmaSource::ojavarest ? "ojavarest" : "bootstrap"; }

inline ScaleMode parse_scale_mode(const std::string& s)
{
    if (s == "batch") return ScaleMode::batch;
    if (s == "full") return ScaleMode::full;
    throw InvalidArgument("unknown ci scale '" + s + "' (expected batch or full)");
}

struct ConfidenceBand {
    Vector center;
    Vector half_width;
    double level = 0.95;
    ScaleMode scale_mode = ScaleMode::full;
    SigmaSource sigma_source = SigmaSource::ojavarest;

    [[nodiscard]] double lower(Eigen::Index k) const { return center[k] - half_width[k]; }
    [[nodiscard]] double upper(Eigen::Index k) const { return center[k] + half_width[k]; }
};

/// center +- z * sqrt(s_k), s_k per scale_mode.
inline ConfidenceBand build_ci(const Vector& vtilde, const Vector& sigma2, double level, ScaleMode scale_mode,
                               double eta_b, double eta_n, SigmaSource source = SigmaSource::ojavarest)
{
    detail::require(vtilde.size() == sigma2.size(), "build_ci: dimension mismatch");
    detail::require((sigma2.array() >= 0.0).all(), "build_ci: negative variance");
    double factor = 1.0;
    if (scale_mode == ScaleMode::full) {
        detail::require(eta_b > 0.0 && eta_n > 0.0, "build_ci: learning rates must be positive");
        factor = eta_n / eta_b;
    }
    ConfidenceBand band;
    band.center = vtilde;
    band.half_width = two_sided_z(level) * (sigma2 * factor).cwiseSqrt();
    band.level = level;
    band.scale_mode = scale_mode;
    band.sigma_source = source;
    return band;
}

/// Band whose variance is already at the target scale (bootstrap replicas run at eta_n).
inline ConfidenceBand build_ci(const Vector& vtilde, const Vector& sigma2, double level,
                               SigmaSource source = SigmaSource::bootstrap)
{
    return build_ci(vtilde, sigma2, level, ScaleMode::batch, 1.0, 1.0, source);
}

struct CoverageReport {
    Eigen::Index trials = 0;
    std::vector<Eigen::Index> hits;
    std::vector<double> rates;
    std::map<std::string, std::string> config;
};

/// True iff truth_k lies in the band after aligning the center's sign to truth.
inline bool band_covers(const ConfidenceBand& band, const Vector& truth, Eigen::Index k)
{
    const double c = truth.dot(band.center) < 0.0 ? -band.center[k] : band.center[k];
    return std::abs(truth[k] - c) <= band.half_width[k];
}

inline CoverageReport evaluate_coverage(const std::vector<ConfidenceBand>& bands, const Vector& truth)
{
    detail::require_unit(truth, "evaluate_coverage: truth");
    const Eigen::Index d = truth.size();
    CoverageReport report;
    report.trials = static_cast<Eigen::Index>(bands.size());
    report.hits.assign(static_cast<std::size_t>(d), 0);
    for (const auto& band : bands) {
        detail::require(band.center.size() == d && band.half_width.size() == d, "evaluate_coverage: dimension mismatch");
        for (Eigen::Index k = 0; k < d; ++k)
            if (band_covers(band, truth, k)) ++report.hits[static_cast<std::size_t>(k)];
    }
    report.rates.resize(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k)
        report.rates[static_cast<std::size_t>(k)] =
            bands.empty() ? 0.0 : static_cast<double>(report.hits[static_cast<std::size_t>(k)]) / static_cast<double>(bands.size());
    return report;
}

/// Type-7 (linear interpolation) sample quantile.
inline double quantile(std::vector<double> values, double q)
{
    detail::require(!values.empty(), "quantile: empty input");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct EntrywiseReport {
    /// 75th percentile of |e_k' r| / sqrt(eta_n gap V_kk ln d); NaN when excluded.
    std::vector<double> ratio;
    std::vector<Eigen::Index> flagged;
    std::vector<Eigen::Index> excluded;
    double threshold = 3.0;
    Eigen::Index trials = 0;
};

/// Rows of `residuals` are independent draws of r_oja = v_oja - (v1'v_oja) v1.
inline EntrywiseReport check_entrywise_bound(const Matrix& residuals, const Matrix& v, double eta_n, double gap,
                                             double threshold = 3.0, double percentile = 0.75)
{
    const Eigen::Index d = v.rows();
    detail::require(d >= 2 && residuals.cols() == d, "check_entrywise_bound: dimension mismatch");
    detail::require(residuals.rows() >= 1, "check_entrywise_bound: no trials");
    detail::require(eta_n > 0.0 && gap > 0.0, "check_entrywise_bound: eta and gap must be positive");
    EntrywiseReport report;
    report.threshold = threshold;
    report.trials = residuals.rows();
    report.ratio.assign(static_cast<std::size_t>(d), std::numeric_limits<double>::quiet_NaN());
    const double logd = std::log(static_cast<double>(d));
    for (Eigen::Index k = 0; k < d; ++k) {
        if (!(v(k, k) >= 1e-12)) {
            report.excluded.push_back(k);
            continue;
        }
        const double scale = std::sqrt(eta_n * gap * v(k, k) * logd);
        std::vector<double> r(static_cast<std::size_t>(residuals.rows()));
        for (Eigen::Index t = 0; t < residuals.rows(); ++t) r[static_cast<std::size_t>(t)] = std::abs(residuals(t, k)) / scale;
        const double q = quantile(std::move(r), percentile);
        report.ratio[static_cast<std::size_t>(k)] = q;
        if (q > threshold) report.flagged.push_back(k);
    }
    return report;
}

struct AndersonDarling {
    double a2 = 0.0;
    /// Small-sample adjusted statistic for estimated mean and variance.
    double a2_star = 0.0;
    double p_value = 1.0;
};

/// Anderson-Darling normality test on values standardized by their own mean and sd.
inline AndersonDarling anderson_darling(std::vector<double> values)
{
    const auto n = values.size();
    detail::require(n >= 8, "anderson_darling: need at least 8 values");
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : values) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    detail::require(sd > 0.0, "anderson_darling: zero variance");
    for (double& x : values) x = (x - mean) / sd;
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = std::clamp(normal_cdf(values[i]), 1e-300, 1.0 - 1e-16);
        const double hi = std::clamp(normal_cdf(values[n - 1 - i]), 1e-300, 1.0 - 1e-16);
        s += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log1p(-hi));
    }
    const auto nd = static_cast<double>(n);
    AndersonDarling out;
    out.a2 = -nd - s / nd;
    const double a = out.a2 * (1.0 + 0.75 / nd + 2.25 / (nd * nd));
    out.a2_star = a;
    // Piecewise p-value approximation for the estimated-parameter case.
    double p = 0.0;
    if (a >= 0.6)
        p = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
    else if (a >= 0.34)
        p = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
    else if (a >= 0.2)
        p = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
    else
        p = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
    out.p_value = std::clamp(p, 0.0, 1.0);
    return out;
}

struct CltReport {
    std::vector<Eigen::Index> coordinates;
    /// Empirical variance of e_k' r / sqrt(eta_n gap), divided by V_kk.
    std::vector<double> variance_ratio;
    std::vector<double> mean;
    std::vector<AndersonDarling> normality;
    double threshold_b = 0.0;
    Eigen::Index trials = 0;
};

inline constexpr Eigen::Index kCltMinTrials = 1000;

/// Variance matching and normality for J = {k : V_kk >= b}.
inline CltReport check_clt(const Matrix& residuals, const Matrix& v, double eta_n, double gap, double b)
{
    const Eigen::Index d = v.rows();
    detail::require(residuals.cols() == d, "check_clt: dimension mismatch");
    detail::require(residuals.rows() >= kCltMinTrials, "check_clt: need at least 1000 trials");
    detail::require(eta_n > 0.0 && gap > 0.0, "check_clt: eta and gap must be positive");
    CltReport report;
    report.threshold_b = b;
    report.trials = residuals.rows();
    for (Eigen::Index k = 0; k < d; ++k)
        if (v(k, k) >= b) report.coordinates.push_back(k);
    if (report.coordinates.empty()) throw InvalidArgument("check_clt: no coordinate has V_kk >= b");
    const double scale = 1.0 / std::sqrt(eta_n * gap);
    const auto nt = static_cast<double>(residuals.rows());
    for (Eigen::Index k : report.coordinates) {
        std::vector<double> z(static_cast<std::size_t>(residuals.rows()));
        for (Eigen::Index t = 0; t < residuals.rows(); ++t) z[static_cast<std::size_t>(t)] = residuals(t, k) * scale;
        const double mean = std::accumulate(z.begin(), z.end(), 0.0) / nt;
        double ss = 0.0;
        for (double x : z) ss += (x - mean) * (x - mean);
        report.mean.push_back(mean);
        report.variance_ratio.push_back(ss / (nt - 1.0) / v(k, k));
        report.normality.push_back(anderson_darling(std::move(z)));
    }
    return report;
}

}  // namespace ojaci
