#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "core.hpp"
#include "oja.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace ojaci {

/// Law of the per-sample multipliers W_{i,j}. All have mean 1; `unit` is W == 1.
enum class MultiplierLaw { exponential, normal, unit };

inline const char* to_string(MultiplierLaw law)
{
    switch (law) {
    case MultiplierLaw::exponential: return "exponential";
    case MultiplierLaw::normal: return "normal";
    case MultiplierLaw::unit: return "unit";
    }
    return "?";
}

inline MultiplierLaw parse_multiplier_law(const std::string& s)
{
    if (s == "exponential" || s == "exp") return MultiplierLaw::exponential;
    if (s == "normal") return MultiplierLaw::normal;
    if (s == "unit") return MultiplierLaw::unit;
    throw InvalidArgument("unknown multiplier law '" + s + "'");
}

struct BootstrapConfig {
    Eigen::Index b = 1;
    MultiplierLaw law = MultiplierLaw::exponential;
    double eta = 0.0;
    SeedSpec seed;
    /// Per-replica stream indices; replica j defaults to seed.derive(j).
    std::optional<std::vector<std::uint64_t>> replica_streams;
};

namespace detail {

class Multiplier {
public:
    Multiplier(MultiplierLaw law, Engine rng) : law_(law), rng_(std::move(rng)) {}

    double operator()()
    {
        switch (law_) {
        case MultiplierLaw::exponential: return exponential_(rng_);
        case MultiplierLaw::normal: return normal_(rng_);
        case MultiplierLaw::unit: return 1.0;
        }
        return 1.0;
    }

private:
    MultiplierLaw law_;
    Engine rng_;
    std::exponential_distribution<double> exponential_{1.0};
    std::normal_distribution<double> normal_{1.0, 1.0};
};

inline std::vector<Multiplier> make_multipliers(const BootstrapConfig& config)
{
    require(config.b >= 1, "bootstrap: need b >= 1");
    require(config.eta > 0.0, "bootstrap: eta must be positive");
    if (config.replica_streams)
        require(static_cast<Eigen::Index>(config.replica_streams->size()) == config.b,
                "bootstrap: replica stream count must equal b");
    std::vector<Multiplier> out;
    out.reserve(static_cast<std::size_t>(config.b));
    for (Eigen::Index j = 0; j < config.b; ++j) {
        const std::uint64_t stream =
            config.replica_streams ? (*config.replica_streams)[static_cast<std::size_t>(j)] : static_cast<std::uint64_t>(j);
        out.emplace_back(config.law, config.seed.derive(stream).engine());
    }
    return out;
}

}  // namespace detail

struct BootstrapOutput {
    std::vector<Vector> replicas;
    /// Plain Oja iterate carried through the same sweep (bootstrap_with_proxy only).
    std::optional<Vector> vtilde;
};

namespace detail {

inline BootstrapOutput bootstrap_sweep(const Dataset& data, const BootstrapConfig& config, const Vector& u0,
                                       const Vector* proxy_u0, double proxy_eta)
{
    require(u0.size() == data.dim(), "bootstrap: dimension mismatch");
    require_unit(u0, "bootstrap: u0");
    auto multipliers = make_multipliers(config);
    const Eigen::Index d = data.dim();
    const auto b = static_cast<std::size_t>(config.b);
    // Replica j occupies column j of a d x b block.
    Matrix u = u0.replicate(1, config.b);
    std::optional<OjaStream> proxy;
    if (proxy_u0) proxy.emplace(*proxy_u0, proxy_eta);

    const double* x = data.samples().data();
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const double* row = x + i * d;
        for (std::size_t j = 0; j < b; ++j)
            oja_step(u.col(static_cast<Eigen::Index>(j)).data(), row, d, config.eta * multipliers[j]());
        if (proxy) proxy->push(row);
    }
    BootstrapOutput out;
    out.replicas.reserve(b);
    for (std::size_t j = 0; j < b; ++j) out.replicas.push_back(normalized(u.col(static_cast<Eigen::Index>(j))));
    if (proxy) out.vtilde = proxy->estimate();
    return out;
}

}  // namespace detail

/// Online multiplier bootstrap: one ordered pass, b replicas updated as
/// u_j <- normalize(u_j + eta W_ij x_i (x_i' u_j)), all starting from u0.
inline std::vector<Vector> bootstrap_run(const Dataset& data, const BootstrapConfig& config, const Vector& u0)
{
    return detail::bootstrap_sweep(data, config, u0, nullptr, 0.0).replicas;
}

/// bootstrap_run plus the proxy Oja(D_n, proxy_eta, proxy_u0) in the same sweep.
inline BootstrapOutput bootstrap_with_proxy(const Dataset& data, const BootstrapConfig& config, const Vector& u0,
                                            const Vector& proxy_u0, double proxy_eta)
{
    detail::require(proxy_u0.size() == data.dim(), "bootstrap: proxy dimension mismatch");
    return detail::bootstrap_sweep(data, config, u0, &proxy_u0, proxy_eta);
}

/// (1/b) sum_j (e_k'(v*_j - (vtilde'v*_j) vtilde))^2.
inline Vector bootstrap_variance(const std::vector<Vector>& replicas, const Vector& vtilde)
{
    detail::require(!replicas.empty(), "bootstrap_variance: empty replica set");
    std::vector<Vector> sq;
    sq.reserve(replicas.size());
    for (const auto& v : replicas) {
        detail::require(v.size() == vtilde.size(), "bootstrap_variance: dimension mismatch");
        sq.push_back((v - vtilde.dot(v) * vtilde).cwiseAbs2());
    }
    const Vector total = tree_reduce(std::move(sq), [](const Vector& l, const Vector& r) { return Vector(l + r); });
    return total / static_cast<double>(replicas.size());
}

}  // namespace ojaci
