#pragma once

#include <chrono>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bootstrap.hpp"
#include "inference.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "synth.hpp"
#include "varest.hpp"

namespace ojaci {

/// "ojavarest" or "bootstrap:<b>".
struct MethodSpec {
    SigmaSource kind = SigmaSource::ojavarest;
    Eigen::Index b = 0;

    [[nodiscard]] std::string label() const
    {
        return kind == SigmaSource::ojavarest ? std::string("ojavarest") : "bootstrap:" + std::to_string(b);
    }
    friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

inline std::vector<MethodSpec> parse_methods(const std::string& list)
{
    std::vector<MethodSpec> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (item == "ojavarest") {
            out.push_back({SigmaSource::ojavarest, 0});
            continue;
        }
        const std::string prefix = "bootstrap:";
        if (item.rfind(prefix, 0) != 0) throw InvalidArgument("unknown method '" + item + "'");
        double b = 0.0;
        if (!detail::parse_number(item.substr(prefix.size()), b) || b < 1.0 || b != static_cast<double>(static_cast<Eigen::Index>(b)))
            throw InvalidArgument("bad replica count in '" + item + "'");
        out.push_back({SigmaSource::bootstrap, static_cast<Eigen::Index>(b)});
    }
    if (out.empty()) throw InvalidArgument("no methods given");
    return out;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point from, Clock::time_point to)
{
    return std::chrono::duration<double, std::milli>(to - from).count();
}

/// Stream layout within one trial: 0 data, 1 OjaVarEst, 2 + m bootstrap method m.
inline SeedSpec trial_seed(const SeedSpec& master, Eigen::Index trial) { return master.derive(static_cast<std::uint64_t>(trial)); }

}  // namespace detail

struct CoverageConfig {
    Eigen::Index n = 5000;
    Eigen::Index d = 200;
    double beta = 1.0;
    Eigen::Index trials = 200;
    double level = 0.95;
    std::vector<MethodSpec> methods{{SigmaSource::ojavarest, 0}, {SigmaSource::bootstrap, 1}, {SigmaSource::bootstrap, 20}};
    VarEstConfig varest = VarEstConfig::paper_experiments();
    ScaleMode scale = ScaleMode::full;
    MultiplierLaw law = MultiplierLaw::exponential;
    SeedSpec seed;
    unsigned threads = default_threads();
    std::vector<Eigen::Index> coordinates{0, 1};
};

struct CoverageResult {
    std::vector<ExperimentRecord> records;
    /// One report per method, in CoverageConfig::methods order.
    std::vector<CoverageReport> reports;
    Vector truth;
    double gap = 0.0;
};

inline std::map<std::string, std::string> config_echo(const CoverageConfig& c, const MethodSpec& m)
{
    return {{"n", std::to_string(c.n)},
            {"d", std::to_string(c.d)},
            {"beta", format_double(c.beta)},
            {"method", m.label()},
            {"b", std::to_string(m.b)},
            {"level", format_double(c.level)},
            {"ci_scale", to_string(c.scale)},
            {"multiplier", to_string(c.law)},
            {"alpha", format_double(c.varest.alpha)},
            {"seed", std::to_string(c.seed.master)},
            {"stream", std::to_string(c.seed.stream)}};
}

/// Repeated synthetic trials. Per trial: fresh data, OjaVarEst with its proxy
/// vtilde, then each bootstrap method recentred on that same vtilde. Output
/// depends only on the config, never on the thread count.
inline CoverageResult run_coverage(const CoverageConfig& config)
{
    detail::require(config.trials >= 1, "coverage: need trials >= 1");
    detail::require(!config.methods.empty(), "coverage: no methods");
    for (Eigen::Index k : config.coordinates)
        detail::require(k >= 0 && k < config.d, "coverage: tracked coordinate out of range");
    SynthSpec spec;
    spec.d = config.d;
    spec.beta = config.beta;
    const SynthModel model = build_sigma(spec);
    model.eigen.require_gap();
    const double gap = model.eigen.gap();
    const Vector truth = model.eigen.leading();
    const double eta_n = learning_rate(config.n, gap, config.varest.alpha);

    const auto nm = config.methods.size();
    const auto nt = static_cast<std::size_t>(config.trials);
    std::vector<std::vector<ExperimentRecord>> per_trial(nt);
    std::vector<std::vector<ConfidenceBand>> bands(nm, std::vector<ConfidenceBand>(nt));

    parallel_for(nt, config.threads, [&](std::size_t t) {
        const SeedSpec ts = detail::trial_seed(config.seed, static_cast<Eigen::Index>(t));
        SynthSpec trial_spec = spec;
        trial_spec.seed = ts.derive(0);
        const Dataset data = sample(trial_spec, model.root, config.n);

        VarEstConfig vc = config.varest;
        vc.seed = ts.derive(1);
        const auto t0 = detail::Clock::now();
        const VarEstResult ve = ojavarest_with_proxy(data, gap, vc);
        const auto t1 = detail::Clock::now();
        const Vector& vtilde = ve.vtilde;

        auto record = [&](const MethodSpec& m, const ConfidenceBand& band) {
            ExperimentRecord r;
            r.trial = static_cast<Eigen::Index>(t);
            r.method = m.kind == SigmaSource::ojavarest ? "ojavarest" : "bootstrap";
            r.n = config.n;
            r.d = config.d;
            r.beta = config.beta;
            r.b = m.b;
            r.coordinates = config.coordinates;
            for (Eigen::Index k : config.coordinates) {
                r.hits.push_back(band_covers(band, truth, k) ? 1 : 0);
                r.half_widths.push_back(band.half_width[k]);
            }
            r.sin2_error = sin2(vtilde, truth);
            return r;
        };

        for (std::size_t mi = 0; mi < nm; ++mi) {
            const MethodSpec& m = config.methods[mi];
            ExperimentRecord r;
            if (m.kind == SigmaSource::ojavarest) {
                const auto a0 = detail::Clock::now();
                const ConfidenceBand band =
                    build_ci(vtilde, ve.median_sigma2, config.level, config.scale, ve.eta_b, eta_n, SigmaSource::ojavarest);
                const auto a1 = detail::Clock::now();
                r = record(m, band);
                r.ms_sweep = detail::elapsed_ms(t0, t1);
                r.ms_aggregate = detail::elapsed_ms(a0, a1);
                bands[mi][t] = band;
            } else {
                BootstrapConfig bc;
                bc.b = m.b;
                bc.law = config.law;
                bc.eta = eta_n;
                bc.seed = ts.derive(2 + mi);
                Engine init_rng = bc.seed.derive(~0ULL).engine();
                const Vector u0 = random_unit_vector(init_rng, config.d);
                const auto s0 = detail::Clock::now();
                const auto replicas = bootstrap_run(data, bc, u0);
                const auto s1 = detail::Clock::now();
                const ConfidenceBand band = build_ci(vtilde, bootstrap_variance(replicas, vtilde), config.level);
                const auto s2 = detail::Clock::now();
                r = record(m, band);
                r.ms_sweep = detail::elapsed_ms(s0, s1);
                r.ms_aggregate = detail::elapsed_ms(s1, s2);
                bands[mi][t] = band;
            }
            r.ms_total = r.ms_sweep + r.ms_aggregate;
            per_trial[t].push_back(std::move(r));
        }
    });

    CoverageResult out;
    out.truth = truth;
    out.gap = gap;
    for (auto& rs : per_trial)
        for (auto& r : rs) out.records.push_back(std::move(r));
    for (std::size_t mi = 0; mi < nm; ++mi) {
        CoverageReport rep = evaluate_coverage(bands[mi], truth);
        rep.config = config_echo(config, config.methods[mi]);
        out.reports.push_back(std::move(rep));
    }
    return out;
}

/// Coverage rate of tracked coordinate k (0-based) for method index mi.
inline double coverage_rate(const CoverageResult& r, std::size_t mi, Eigen::Index k)
{
    return r.reports.at(mi).rates.at(static_cast<std::size_t>(k));
}

/// Rows (n, d, beta, coordinate); one rate column per method. Coordinates are 1-based.
inline void write_coverage_table(const CoverageConfig& config, const CoverageResult& result, std::ostream& out)
{
    out << "n,d,beta,coordinate";
    for (const auto& m : config.methods) out << ',' << m.label();
    out << '\n';
    for (Eigen::Index k : config.coordinates) {
        out << config.n << ',' << config.d << ',' << format_double(config.beta) << ',' << (k + 1);
        for (std::size_t mi = 0; mi < config.methods.size(); ++mi) out << ',' << format_double(coverage_rate(result, mi, k));
        out << '\n';
    }
}

struct BenchConfig {
    Eigen::Index n = 5000;
    Eigen::Index d = 1000;
    double beta = 1.0;
    std::vector<MethodSpec> methods{{SigmaSource::ojavarest, 0}, {SigmaSource::bootstrap, 1}, {SigmaSource::bootstrap, 20}};
    Eigen::Index repeats = 1;
    VarEstConfig varest = VarEstConfig::paper_experiments();
    MultiplierLaw law = MultiplierLaw::exponential;
    double level = 0.95;
    SeedSpec seed;
};

/// Times each method from data to confidence band on one thread. Every method
/// also produces its own vtilde: OjaVarEst inside its sweep, the bootstrap as
/// an extra lane of its replica sweep. Data generation is not timed.
inline std::vector<ExperimentRecord> run_bench(const BenchConfig& config)
{
    detail::require(config.repeats >= 1, "bench: need repeats >= 1");
    SynthSpec spec;
    spec.d = config.d;
    spec.beta = config.beta;
    const SynthModel model = build_sigma(spec);
    model.eigen.require_gap();
    const double gap = model.eigen.gap();
    const Vector truth = model.eigen.leading();
    const double eta_n = learning_rate(config.n, gap, config.varest.alpha);
    spec.seed = config.seed.derive(0);
    const Dataset data = sample(spec, model.root, config.n);

    std::vector<ExperimentRecord> out;
    for (Eigen::Index rep = 0; rep < config.repeats; ++rep) {
        for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
            const MethodSpec& m = config.methods[mi];
            ExperimentRecord r;
            r.trial = rep;
            r.n = config.n;
            r.d = config.d;
            r.beta = config.beta;
            r.b = m.b;
            const SeedSpec ms = config.seed.derive(1 + mi);
            if (m.kind == SigmaSource::ojavarest) {
                r.method = "ojavarest";
                VarEstConfig vc = config.varest;
                vc.seed = ms;
                const auto t0 = detail::Clock::now();
                const VarEstResult ve = ojavarest_with_proxy(data, gap, vc);
                const auto t1 = detail::Clock::now();
                const ConfidenceBand band = build_ci(ve.vtilde, ve.median_sigma2, config.level, ScaleMode::full, ve.eta_b, eta_n);
                const auto t2 = detail::Clock::now();
                r.ms_sweep = detail::elapsed_ms(t0, t1);
                r.ms_aggregate = detail::elapsed_ms(t1, t2);
                r.sin2_error = sin2(ve.vtilde, truth);
                r.half_widths = {band.half_width[0]};
            } else {
                r.method = "bootstrap";
                BootstrapConfig bc;
                bc.b = m.b;
                bc.law = config.law;
                bc.eta = eta_n;
                bc.seed = ms;
                Engine init_rng = ms.derive(~0ULL).engine();
                const Vector u0 = random_unit_vector(init_rng, config.d);
                const Vector proxy_u0 = random_unit_vector(init_rng, config.d);
                const auto t0 = detail::Clock::now();
                const BootstrapOutput bo = bootstrap_with_proxy(data, bc, u0, proxy_u0, eta_n);
                const auto t1 = detail::Clock::now();
                const ConfidenceBand band = build_ci(*bo.vtilde, bootstrap_variance(bo.replicas, *bo.vtilde), config.level);
                const auto t2 = detail::Clock::now();
                r.ms_sweep = detail::elapsed_ms(t0, t1);
                r.ms_aggregate = detail::elapsed_ms(t1, t2);
                r.sin2_error = sin2(*bo.vtilde, truth);
                r.half_widths = {band.half_width[0]};
            }
            r.coordinates = {0};
            r.ms_total = r.ms_sweep + r.ms_aggregate;
            out.push_back(std::move(r));
        }
    }
    return out;
}

/// Minimum total milliseconds per method label over repeats.
inline std::map<std::string, double> best_times(const std::vector<ExperimentRecord>& records)
{
    std::map<std::string, double> best;
    for (const auto& r : records) {
        const std::string key = r.method == "ojavarest" ? r.method : "bootstrap:" + std::to_string(r.b);
        auto it = best.find(key);
        if (it == best.end() || r.ms_total < it->second) best[key] = r.ms_total;
    }
    return best;
}

}  // namespace ojaci
