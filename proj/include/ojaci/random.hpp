#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ojaci {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using Engine = std::mt19937_64;

/// Identifies one independent pseudo-random stream.
///
/// Equal (master, stream) pairs give equal streams. Consumers that need
/// sub-streams (one per batch, per trial, per replica) call derive() with a
/// stable index so results do not depend on scheduling order.
struct SeedSpec {
    std::uint64_t master = 0;
    std::uint64_t stream = 0;

    [[nodiscard]] SeedSpec derive(std::uint64_t index) const noexcept
    {
        return {master, splitmix64(stream ^ splitmix64(index + 0x632be59bd9b4e019ULL))};
    }

    [[nodiscard]] Engine engine() const
    {
        std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        return Engine(seq);
    }

    friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// Uniform on the open interval (0, 1) from the top 53 bits.
inline double uniform_open01(Engine& rng)
{
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline Eigen::VectorXd standard_normal_vector(Engine& rng, Eigen::Index d)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd g(d);
    for (Eigen::Index i = 0; i < d; ++i) g[i] = normal(rng);
    return g;
}

/// u0 = g / ||g|| with g ~ N(0, I_d).
inline Eigen::VectorXd random_unit_vector(Engine& rng, Eigen::Index d)
{
    Eigen::VectorXd g = standard_normal_vector(rng, d);
    double norm = g.norm();
    while (norm == 0.0) {
        g = standard_normal_vector(rng, d);
        norm = g.norm();
    }
    return g / norm;
}

}  // namespace ojaci
