#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ojaci/ojaci.hpp"

namespace testing_support {

using ojaci::Matrix;
using ojaci::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols)
{
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

inline Vector random_unit(std::mt19937_64& rng, Eigen::Index d)
{
    Vector v = random_matrix(rng, d, 1);
    return v / v.norm();
}

/// Random rank-one A_i = x x' and their mean as Sigma.
struct Instance {
    std::vector<Matrix> a;
    Matrix sigma;
};

inline Instance random_instance(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d)
{
    Instance ins;
    const Matrix scale = Vector::LinSpaced(d, 2.0, 0.5).asDiagonal();
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector x = scale * random_matrix(rng, d, 1);
        ins.a.push_back(x * x.transpose());
    }
    ins.sigma = scale * scale;
    return ins;
}

/// Dataset from an existing sample matrix with rows X_i.
inline ojaci::Dataset dataset(const Matrix& rows) { return ojaci::Dataset(ojaci::SampleMatrix(rows)); }

/// Sigma = diag(4, 1, ..., 1) with X = Sigma^{1/2} Z, Z uniform with unit variance.
inline ojaci::Dataset spiked(Eigen::Index n, Eigen::Index d, std::uint64_t seed)
{
    ojaci::Engine rng = ojaci::SeedSpec{seed, 0}.engine();
    ojaci::SampleMatrix x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = ojaci::uniform_sqrt3(rng) * (j == 0 ? 2.0 : 1.0);
    return ojaci::Dataset(std::move(x));
}

inline double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const auto m = v.size();
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace testing_support
