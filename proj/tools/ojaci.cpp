#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ojaci/ojaci.hpp"

namespace {

using namespace ojaci;

struct Common {
    std::optional<std::uint64_t> seed;
    unsigned threads = default_threads();
};

std::uint64_t resolve_seed(const Common& c)
{
    if (c.seed) return *c.seed;
    if (const char* env = std::getenv("OJA_INFER_SEED")) {
        double v = 0.0;
        if (!detail::parse_number(env, v) || v < 0.0) throw InvalidArgument("OJA_INFER_SEED is not a nonnegative integer");
        return static_cast<std::uint64_t>(std::stoull(env));
    }
    return 0;
}

/// Every option of the subcommand, given or defaulted, as strings.
Json echo_options(const CLI::App& app)
{
    Json j = Json::object();
    for (const CLI::Option* opt : app.get_options()) {
        const std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
        if (name.empty() || name == "help") continue;
        if (opt->count() > 0) {
            const auto results = opt->reduced_results();
            j[name] = results.size() == 1 ? Json(results.front()) : Json(results);
        } else if (!opt->get_default_str().empty()) {
            j[name] = opt->get_default_str();
        }
    }
    return j;
}

RunManifest start_manifest(const CLI::App& app, std::uint64_t seed, const std::string& input_path = {})
{
    RunManifest m;
    m.subcommand = app.get_name();
    m.config = echo_options(app);
    m.seed = seed;
    m.started = utc_timestamp();
    m.input_hash = input_path.empty() ? content_hash(m.config.dump()) : content_hash(detail::read_file(input_path));
    return m;
}

void finish_json(RunManifest& m, Json payload, const std::string& out)
{
    m.finished = utc_timestamp();
    payload["manifest"] = m.to_json();
    if (out.empty() || out == "-")
        std::cout << payload.dump(2) << '\n';
    else
        write_json(payload, out);
}

void finish_sidecar(RunManifest& m, const std::string& out)
{
    m.finished = utc_timestamp();
    write_json(m.to_json(), out + ".manifest.json");
}

double resolve_gap(std::optional<double> gap, const Dataset& data)
{
    if (gap) {
        detail::require(*gap > 0.0, "--gap must be positive");
        return *gap;
    }
    return estimate_gap(data);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Streaming PCA with entrywise confidence intervals"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    Common common;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", common.seed, "master seed (falls back to OJA_INFER_SEED, then 0)");
        sub->add_option("--threads", common.threads, "worker cap; results do not depend on it")->capture_default_str();
    };

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic samples X = Sigma^{1/2} Z");
    SynthSpec sspec;
    Eigen::Index synth_n = 1000;
    double mask_rate = 0.0;
    std::string synth_out, sigma_out;
    bool synth_header = false;
    synth_cmd->add_option("--n", synth_n, "sample count")->capture_default_str();
    synth_cmd->add_option("--d", sspec.d, "dimension")->capture_default_str();
    synth_cmd->add_option("--beta", sspec.beta, "decay exponent of the scales")->capture_default_str();
    synth_cmd->add_option("--c", sspec.c, "kernel decay")->capture_default_str();
    synth_cmd->add_option("--scale", sspec.scale, "leading scale")->capture_default_str();
    synth_cmd->add_option("--mask-rate", mask_rate, "probability of zeroing each entry")->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "output CSV")->required();
    synth_cmd->add_option("--sigma-out", sigma_out, "optional JSON with Sigma and its eigensystem");
    synth_cmd->add_flag("--header", synth_header, "write a header row");
    add_common(synth_cmd);

    // shared data options
    struct DataArgs {
        std::string input;
        bool center = false;
        std::optional<double> gap;
        double alpha = 2.0;
        std::string out;
    };
    auto add_data = [&](CLI::App* sub, DataArgs& a) {
        sub->add_option("--input", a.input, "numeric CSV, one sample per row")->required()->check(CLI::ExistingFile);
        sub->add_flag("--center", a.center, "subtract column means");
        sub->add_option("--gap", a.gap, "eigengap lambda_1 - lambda_2 (estimated when absent)");
        sub->add_option("--alpha", a.alpha, "learning-rate constant, > 1")->capture_default_str();
        sub->add_option("--out", a.out, "output path ('-' for stdout)");
        add_common(sub);
    };

    // oja
    auto* oja_cmd = app.add_subcommand("oja", "leading eigenvector by Oja's algorithm");
    DataArgs oja_args;
    std::optional<double> oja_delta;
    add_data(oja_cmd, oja_args);
    oja_cmd->add_option("--boost-delta", oja_delta, "split into ceil(ln 1/delta) batches and aggregate");

    // varest
    auto* varest_cmd = app.add_subcommand("varest", "entrywise variance by OjaVarEst");
    DataArgs ve_args;
    VarEstConfig ve_config;
    std::string ve_preset, ve_csv, ve_vtilde = "oja", ve_scale = "full";
    double ve_level = 0.95;
    std::optional<Eigen::Index> ve_m1, ve_m2;
    add_data(varest_cmd, ve_args);
    varest_cmd->add_option("--delta", ve_config.delta, "failure probability")->capture_default_str();
    varest_cmd->add_option("--m1", ve_m1, "outer group count override");
    varest_cmd->add_option("--m2", ve_m2, "inner batch count override");
    varest_cmd->add_option("--preset", ve_preset, "paper-experiments: m1 = 3")->check(CLI::IsMember({"paper-experiments"}));
    varest_cmd->add_option("--vtilde", ve_vtilde, "proxy: oja (full pass) or boosted")
        ->check(CLI::IsMember({"oja", "boosted"}))
        ->capture_default_str();
    varest_cmd->add_option("--level", ve_level, "confidence level")->capture_default_str();
    varest_cmd->add_option("--ci-scale", ve_scale, "batch or full")->check(CLI::IsMember({"batch", "full"}))->capture_default_str();
    varest_cmd->add_option("--csv", ve_csv, "d-row CSV: coordinate, gamma, per-group sigma2");
    varest_cmd->add_flag("--keep-batches", ve_config.keep_batches, "include batch estimates in JSON");

    // bootstrap
    auto* bs_cmd = app.add_subcommand("bootstrap", "online multiplier bootstrap");
    DataArgs bs_args;
    Eigen::Index bs_b = 20;
    std::string bs_law = "exponential", bs_csv;
    double bs_level = 0.95;
    add_data(bs_cmd, bs_args);
    bs_cmd->add_option("--b", bs_b, "replica count")->capture_default_str();
    bs_cmd->add_option("--law", bs_law, "multiplier law: exponential, normal, unit")->capture_default_str();
    bs_cmd->add_option("--level", bs_level, "confidence level")->capture_default_str();
    bs_cmd->add_option("--csv", bs_csv, "d-row CSV: coordinate, sigma2");

    // coverage
    auto* cov_cmd = app.add_subcommand("coverage", "coverage of the per-coordinate intervals on synthetic data");
    CoverageConfig cov;
    std::string cov_preset, cov_methods = "ojavarest,bootstrap:1,bootstrap:20", cov_scale = "full", cov_law = "exponential";
    std::string cov_out, cov_records, cov_report, cov_format = "csv";
    bool cov_no_timing = false;
    cov_cmd->add_option("--preset", cov_preset, "paper-experiments: m1 = 3")->check(CLI::IsMember({"paper-experiments"}));
    cov_cmd->add_option("--n", cov.n, "samples per trial")->capture_default_str();
    cov_cmd->add_option("--d", cov.d, "dimension")->capture_default_str();
    cov_cmd->add_option("--beta", cov.beta, "decay exponent")->capture_default_str();
    cov_cmd->add_option("--trials", cov.trials, "trial count")->capture_default_str();
    cov_cmd->add_option("--level", cov.level, "confidence level")->capture_default_str();
    cov_cmd->add_option("--alpha", cov.varest.alpha, "learning-rate constant")->capture_default_str();
    cov_cmd->add_option("--methods", cov_methods, "comma list of ojavarest, bootstrap:<b>")->capture_default_str();
    cov_cmd->add_option("--ci-scale", cov_scale, "batch or full")->check(CLI::IsMember({"batch", "full"}))->capture_default_str();
    cov_cmd->add_option("--law", cov_law, "bootstrap multiplier law")->capture_default_str();
    cov_cmd->add_option("--out", cov_out, "coverage table CSV ('-' for stdout)");
    cov_cmd->add_option("--records", cov_records, "per-trial records");
    cov_cmd->add_option("--format", cov_format, "records format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    cov_cmd->add_flag("--no-timing", cov_no_timing, "omit wall-clock columns from records");
    cov_cmd->add_option("--report", cov_report, "JSON coverage reports");
    add_common(cov_cmd);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "single-thread timing of the variance methods");
    BenchConfig bench;
    std::string bench_methods = "ojavarest,bootstrap:1,bootstrap:10,bootstrap:20", bench_out, bench_law = "exponential";
    bench_cmd->add_option("--n", bench.n, "samples")->capture_default_str();
    bench_cmd->add_option("--d", bench.d, "dimension")->capture_default_str();
    bench_cmd->add_option("--beta", bench.beta, "decay exponent")->capture_default_str();
    bench_cmd->add_option("--repeats", bench.repeats, "repetitions per method")->capture_default_str();
    bench_cmd->add_option("--alpha", bench.varest.alpha, "learning-rate constant")->capture_default_str();
    bench_cmd->add_option("--methods", bench_methods, "comma list of ojavarest, bootstrap:<b>")->capture_default_str();
    bench_cmd->add_option("--law", bench_law, "bootstrap multiplier law")->capture_default_str();
    bench_cmd->add_option("--out", bench_out, "timing CSV ('-' for stdout)");
    add_common(bench_cmd);

    // oracle
    auto* oracle_cmd = app.add_subcommand("oracle", "exact Hoeffding and residual decomposition of one synthetic instance");
    SynthSpec ospec;
    ospec.d = 3;
    Eigen::Index oracle_n = 8;
    std::optional<double> oracle_eta;
    std::string oracle_out;
    oracle_cmd->add_option("--n", oracle_n, "samples")->capture_default_str();
    oracle_cmd->add_option("--d", ospec.d, "dimension")->capture_default_str();
    oracle_cmd->add_option("--beta", ospec.beta, "decay exponent")->capture_default_str();
    oracle_cmd->add_option("--eta", oracle_eta, "step size (default: learning rate at n with alpha 2)");
    oracle_cmd->add_option("--out", oracle_out, "output JSON ('-' for stdout)");
    add_common(oracle_cmd);

    // asymvar
    auto* av_cmd = app.add_subcommand("asymvar", "asymptotic covariance of the Oja residual for the synthetic family");
    SynthSpec aspec;
    aspec.d = 3;
    Eigen::Index av_mc = 100000, av_n = 1000, av_trials = 0;
    double av_alpha = 2.0;
    std::string av_out;
    av_cmd->add_option("--d", aspec.d, "dimension")->capture_default_str();
    av_cmd->add_option("--beta", aspec.beta, "decay exponent")->capture_default_str();
    av_cmd->add_option("--mc-samples", av_mc, "Monte-Carlo draws for M-tilde")->capture_default_str();
    av_cmd->add_option("--n", av_n, "sample size for R^(n)")->capture_default_str();
    av_cmd->add_option("--alpha", av_alpha, "learning-rate constant")->capture_default_str();
    av_cmd->add_option("--hajek-trials", av_trials, "also estimate E[Psi Psi'] by simulation")->capture_default_str();
    av_cmd->add_option("--out", av_out, "output JSON ('-' for stdout)");
    add_common(av_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const std::uint64_t seed = resolve_seed(common);
        const SeedSpec master{seed, 0};

        if (synth_cmd->parsed()) {
            auto m = start_manifest(*synth_cmd, seed);
            sspec.seed = master.derive(0);
            const SynthModel model = build_sigma(sspec);
            Dataset data = sample(model, synth_n);
            if (mask_rate > 0.0) data = mask_missing(data, mask_rate, master.derive(1));
            write_csv(data, synth_out, synth_header);
            if (!sigma_out.empty())
                write_json({{"sigma", to_json(model.sigma)}, {"eigen", to_json(model.eigen)}, {"manifest", m.to_json()}},
                           sigma_out);
            finish_sidecar(m, synth_out);
        } else if (oja_cmd->parsed()) {
            auto m = start_manifest(*oja_cmd, seed, oja_args.input);
            const Dataset data = read_csv(oja_args.input, {oja_args.center});
            OjaConfig config;
            config.alpha = oja_args.alpha;
            config.gap = resolve_gap(oja_args.gap, data);
            config.seed = master;
            OjaResult r;
            if (oja_delta) {
                r = oja_boosted(data, *oja_delta, config);
            } else {
                r = oja_run(data, learning_rate(data.rows(), *config.gap, config.alpha), initial_vector(config, data.dim()));
            }
            Json out = to_json(r);
            out["gap"] = *config.gap;
            finish_json(m, std::move(out), oja_args.out);
        } else if (varest_cmd->parsed()) {
            auto m = start_manifest(*varest_cmd, seed, ve_args.input);
            const Dataset data = read_csv(ve_args.input, {ve_args.center});
            if (ve_preset == "paper-experiments") {
                const auto p = VarEstConfig::paper_experiments();
                ve_config.m1 = p.m1;
            }
            if (ve_m1) ve_config.m1 = ve_m1;
            if (ve_m2) ve_config.m2 = ve_m2;
            ve_config.alpha = ve_args.alpha;
            ve_config.seed = master;
            const double gap = resolve_gap(ve_args.gap, data);
            const double eta_n = learning_rate(data.rows(), gap, ve_config.alpha);
            VarEstResult r;
            if (ve_vtilde == "boosted") {
                OjaConfig oc;
                oc.alpha = ve_config.alpha;
                oc.gap = gap;
                oc.seed = master.derive(0x7e57);
                const Vector vtilde = oja_boosted(data, ve_config.delta, oc).estimate;
                r = ojavarest(data, vtilde, gap, ve_config);
                r.eta_n = eta_n;
            } else {
                r = ojavarest_with_proxy(data, gap, ve_config);
            }
            const ConfidenceBand band =
                build_ci(r.vtilde, r.median_sigma2, ve_level, parse_scale_mode(ve_scale), r.eta_b, eta_n);
            Json out = to_json(r);
            out["band"] = to_json(band);
            if (!ve_csv.empty()) {
                auto f = detail::open_output(ve_csv);
                f << "coordinate,gamma";
                for (Eigen::Index l = 0; l < r.schedule.m1; ++l) f << ",sigma2_group" << (l + 1);
                f << '\n';
                for (Eigen::Index k = 0; k < data.dim(); ++k) {
                    f << (k + 1) << ',' << format_double(r.gamma[k]);
                    for (Eigen::Index l = 0; l < r.schedule.m1; ++l) f << ',' << format_double(r.batch_sigma2(l, k));
                    f << '\n';
                }
                f.close();
                RunManifest side = m;
                finish_sidecar(side, ve_csv);
            }
            finish_json(m, std::move(out), ve_args.out);
        } else if (bs_cmd->parsed()) {
            auto m = start_manifest(*bs_cmd, seed, bs_args.input);
            const Dataset data = read_csv(bs_args.input, {bs_args.center});
            const double gap = resolve_gap(bs_args.gap, data);
            BootstrapConfig bc;
            bc.b = bs_b;
            bc.law = parse_multiplier_law(bs_law);
            bc.eta = learning_rate(data.rows(), gap, bs_args.alpha);
            bc.seed = master.derive(1);
            Engine init_rng = master.derive(0).engine();
            const Vector u0 = random_unit_vector(init_rng, data.dim());
            const Vector proxy_u0 = random_unit_vector(init_rng, data.dim());
            const BootstrapOutput bo = bootstrap_with_proxy(data, bc, u0, proxy_u0, bc.eta);
            const Vector sigma2 = bootstrap_variance(bo.replicas, *bo.vtilde);
            const ConfidenceBand band = build_ci(*bo.vtilde, sigma2, bs_level);
            Json out{{"sigma2", to_json(sigma2)},
                     {"vtilde", to_json(*bo.vtilde)},
                     {"eta", bc.eta},
                     {"gap", gap},
                     {"b", bc.b},
                     {"multiplier", to_string(bc.law)},
                     {"band", to_json(band)}};
            if (!bs_csv.empty()) {
                auto f = detail::open_output(bs_csv);
                f << "coordinate,sigma2\n";
                for (Eigen::Index k = 0; k < data.dim(); ++k) f << (k + 1) << ',' << format_double(sigma2[k]) << '\n';
                f.close();
                RunManifest side = m;
                finish_sidecar(side, bs_csv);
            }
            finish_json(m, std::move(out), bs_args.out);
        } else if (cov_cmd->parsed()) {
            auto m = start_manifest(*cov_cmd, seed);
            if (cov_preset == "paper-experiments") {
                const double alpha = cov.varest.alpha;
                cov.varest = VarEstConfig::paper_experiments();
                cov.varest.alpha = alpha;
            }
            cov.methods = parse_methods(cov_methods);
            cov.scale = parse_scale_mode(cov_scale);
            cov.law = parse_multiplier_law(cov_law);
            cov.seed = master;
            cov.threads = common.threads;
            const CoverageResult result = run_coverage(cov);
            if (!cov_records.empty()) {
                write_results(result.records, cov_format == "json" ? ResultFormat::json : ResultFormat::csv, cov_records,
                              !cov_no_timing);
                RunManifest side = m;
                finish_sidecar(side, cov_records);
            }
            if (!cov_report.empty()) {
                Json reports = Json::array();
                for (const auto& r : result.reports) reports.push_back(to_json(r));
                RunManifest side = m;
                finish_json(side, {{"reports", std::move(reports)}}, cov_report);
            }
            if (cov_out.empty() || cov_out == "-") {
                write_coverage_table(cov, result, std::cout);
            } else {
                auto f = detail::open_output(cov_out);
                write_coverage_table(cov, result, f);
                f.close();
                finish_sidecar(m, cov_out);
            }
        } else if (bench_cmd->parsed()) {
            auto m = start_manifest(*bench_cmd, seed);
            bench.methods = parse_methods(bench_methods);
            bench.law = parse_multiplier_law(bench_law);
            bench.seed = master;
            const auto records = run_bench(bench);
            if (bench_out.empty() || bench_out == "-") {
                write_results(records, ResultFormat::csv, std::cout);
            } else {
                write_results(records, ResultFormat::csv, bench_out);
                finish_sidecar(m, bench_out);
            }
        } else if (oracle_cmd->parsed()) {
            auto m = start_manifest(*oracle_cmd, seed);
            detail::require(oracle_n <= kMaxEnumeration, "oracle: --n must not exceed 14");
            ospec.seed = master.derive(0);
            const SynthModel model = build_sigma(ospec);
            const Dataset data = sample(model, oracle_n);
            const double eta = oracle_eta ? *oracle_eta : learning_rate(std::max<Eigen::Index>(oracle_n, 2), model.eigen.gap(), 2.0);
            Engine rng = master.derive(1).engine();
            const Vector u0 = random_unit_vector(rng, ospec.d);
            const Vector vtilde = oja_run(data, eta, random_unit_vector(rng, ospec.d)).estimate;
            const DecompositionReport r = residual_decomposition(data, model.sigma, model.eigen, eta, u0, vtilde);
            finish_json(m, to_json(r), oracle_out);
        } else if (av_cmd->parsed()) {
            auto m = start_manifest(*av_cmd, seed);
            aspec.seed = master.derive(0);
            const SynthModel model = build_sigma(aspec);
            const SynthSampler sampler(model);
            const MomentEstimates moments = estimate_mtilde(sampler, model.eigen, av_mc, master.derive(1), common.threads);
            const AsymptoticVariance av = build_r0_v(moments, model.eigen);
            const double eta = learning_rate(av_n, model.eigen.gap(), av_alpha);
            Json out{{"moments", to_json(moments)},
                     {"asymptotic", to_json(av)},
                     {"eigen", to_json(model.eigen)},
                     {"n", av_n},
                     {"eta", eta},
                     {"Rn", to_json(build_rn(moments, model.eigen, av_n, eta))},
                     {"hajek_covariance", to_json(hajek_covariance(moments.mtilde, model.eigen, av_n, eta))}};
            if (av_trials > 0)
                out["hajek_empirical"] = to_json(
                    empirical_hajek_covariance(sampler, model.eigen, av_n, eta, av_trials, master.derive(2), common.threads));
            finish_json(m, std::move(out), av_out);
        }
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
