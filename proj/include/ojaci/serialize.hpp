#pragma once

#include <cmath>
#include <vector>

#include <json.hpp>

#include "asymvar.hpp"
#include "core.hpp"
#include "hoeffding.hpp"
#include "inference.hpp"
#include "oja.hpp"
#include "varest.hpp"

namespace ojaci {

using Json = nlohmann::json;

/// Non-finite values become null.
inline Json json_number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json to_json(const Vector& v)
{
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(json_number(v[i]));
    return out;
}

/// Row-major nested arrays.
inline Json to_json(const Matrix& m)
{
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
    return out;
}

inline Json to_json(const SeedSpec& s) { return {{"master", s.master}, {"stream", s.stream}}; }

inline Json to_json(const EigenSystem& e)
{
    return {{"eigenvalues", to_json(e.eigenvalues)}, {"eigenvectors", to_json(e.eigenvectors)}, {"gap", e.gap()}};
}

inline Json to_json(const OjaResult& r)
{
    return {{"estimate", to_json(r.estimate)},
            {"eta_used", r.eta_used},
            {"samples_consumed", r.samples_consumed},
            {"init_vector", to_json(r.init_vector)}};
}

inline Json to_json(const Schedule& s)
{
    return {{"m1", s.m1}, {"m2", s.m2}, {"B", s.batch}, {"used", s.used}, {"dropped", s.dropped}};
}

inline Json to_json(const VarEstResult& r)
{
    Json j{{"gamma", to_json(r.gamma)},
           {"batch_sigma2", to_json(r.batch_sigma2)},
           {"median_sigma2", to_json(r.median_sigma2)},
           {"eta_B", r.eta_b},
           {"gap", r.gap},
           {"schedule", to_json(r.schedule)},
           {"vtilde", to_json(r.vtilde)}};
    if (r.eta_n) j["eta_n"] = *r.eta_n;
    if (!r.batch_estimates.empty()) {
        Json b = Json::array();
        for (const auto& v : r.batch_estimates) b.push_back(to_json(v));
        j["batch_estimates"] = std::move(b);
    }
    return j;
}

inline Json to_json(const DecompositionReport& r)
{
    Json terms = Json::array();
    for (const auto& t : r.terms) terms.push_back(to_json(t));
    return {{"n", r.n},
            {"d", r.d},
            {"eta", r.eta},
            {"sigma", to_json(r.sigma)},
            {"u0", to_json(r.u0)},
            {"vtilde", to_json(r.vtilde)},
            {"v_oja", to_json(r.v_oja)},
            {"B_n", to_json(r.bn())},
            {"terms", std::move(terms)},
            {"E0", to_json(r.e0)},
            {"E1", to_json(r.e1)},
            {"E2", to_json(r.e2)},
            {"E3", to_json(r.e3)},
            {"E4", to_json(r.e4)},
            {"E2_remainder", to_json(r.e2_remainder)},
            {"E2_enumerated", r.e2_enumerated},
            {"identity_error", r.identity_error()},
            {"hoeffding_error", json_number(r.hoeffding_error())}};
}

inline Json to_json(const MomentEstimates& m)
{
    return {{"mtilde", to_json(m.mtilde)},       {"mc_stderr", to_json(m.mc_stderr)}, {"mc_samples", m.mc_samples},
            {"M2", m.m2},                        {"M4", m.m4},                        {"Vstat", m.vstat},
            {"moment_samples", m.moment_samples}, {"seed", to_json(m.seed)}};
}

inline Json to_json(const AsymptoticVariance& a)
{
    return {{"R0", to_json(a.r0)}, {"V", to_json(a.v)}, {"d_factors", to_json(a.d_factors)}};
}

inline Json to_json(const HajekCovariance& h)
{
    return {{"mean", to_json(h.mean)}, {"standard_error", to_json(h.standard_error)}, {"trials", h.trials}};
}

inline Json to_json(const ConfidenceBand& b)
{
    return {{"center", to_json(b.center)},
            {"half_width", to_json(b.half_width)},
            {"level", b.level},
            {"scale_mode", to_string(b.scale_mode)},
            {"sigma_source", to_string(b.sigma_source)}};
}

inline Json to_json(const CoverageReport& r)
{
    Json rates = Json::array();
    for (double x : r.rates) rates.push_back(x);
    return {{"trials", r.trials}, {"hits", r.hits}, {"rates", std::move(rates)}, {"config", r.config}};
}

inline Json to_json(const EntrywiseReport& r)
{
    Json ratio = Json::array();
    for (double x : r.ratio) ratio.push_back(json_number(x));
    return {{"ratio", std::move(ratio)},
            {"flagged", r.flagged},
            {"excluded", r.excluded},
            {"threshold", r.threshold},
            {"trials", r.trials}};
}

inline Json to_json(const AndersonDarling& a)
{
    return {{"A2", a.a2}, {"A2_star", a.a2_star}, {"p_value", a.p_value}};
}

inline Json to_json(const CltReport& r)
{
    Json normality = Json::array();
    for (const auto& a : r.normality) normality.push_back(to_json(a));
    return {{"coordinates", r.coordinates},
            {"variance_ratio", r.variance_ratio},
            {"mean", r.mean},
            {"normality", std::move(normality)},
            {"threshold_b", r.threshold_b},
            {"trials", r.trials}};
}

}  // namespace ojaci
