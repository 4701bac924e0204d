#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "errors.hpp"

namespace ojaci {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Row-major so each sample is a contiguous row.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kGapTolerance = 1e-12;
inline constexpr double kUnitTolerance = 1e-8;

enum class Provenance { synthetic, file };

inline const char* to_string(Provenance p) { return p == Provenance::synthetic ? "synthetic" : "file"; }

/// n samples of dimension d, one per row. Immutable once built.
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(SampleMatrix samples, Provenance provenance = Provenance::synthetic)
        : samples_(std::move(samples)), provenance_(provenance)
    {
        detail::require(samples_.rows() >= 1 && samples_.cols() >= 1, "dataset: need n >= 1 and d >= 1");
        detail::require(samples_.allFinite(), "dataset: non-finite entry");
    }

    [[nodiscard]] Eigen::Index rows() const noexcept { return samples_.rows(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return samples_.cols(); }
    [[nodiscard]] bool empty() const noexcept { return samples_.rows() == 0; }
    [[nodiscard]] Provenance provenance() const noexcept { return provenance_; }
    [[nodiscard]] const SampleMatrix& samples() const noexcept { return samples_; }

    [[nodiscard]] auto row(Eigen::Index i) const { return samples_.row(i); }

    /// Contiguous rows [begin, begin + count) as a new dataset.
    [[nodiscard]] Dataset slice(Eigen::Index begin, Eigen::Index count) const
    {
        detail::require(begin >= 0 && count >= 1 && begin + count <= rows(), "dataset: slice out of range");
        return Dataset(samples_.middleRows(begin, count), provenance_);
    }

private:
    SampleMatrix samples_;
    Provenance provenance_ = Provenance::synthetic;
};

/// Eigenpairs of a symmetric matrix, eigenvalues descending, eigenvectors as columns.
struct EigenSystem {
    Vector eigenvalues;
    Matrix eigenvectors;

    [[nodiscard]] Eigen::Index dim() const noexcept { return eigenvalues.size(); }
    [[nodiscard]] double gap() const { return dim() >= 2 ? eigenvalues[0] - eigenvalues[1] : 0.0; }
    [[nodiscard]] bool degenerate() const { return gap() <= kGapTolerance; }
    [[nodiscard]] double lambda1() const { return eigenvalues[0]; }
    [[nodiscard]] Vector leading() const { return eigenvectors.col(0); }
    /// V_perp = [v_2, ..., v_d].
    [[nodiscard]] Matrix perp() const { return eigenvectors.rightCols(dim() - 1); }
    [[nodiscard]] Vector perp_eigenvalues() const { return eigenvalues.tail(dim() - 1); }

    void require_gap() const
    {
        if (degenerate())
            throw NumericalError("eigen system: gap lambda1 - lambda2 = " + std::to_string(gap()) +
                                 " is not positive");
    }

    [[nodiscard]] Matrix reconstruct() const
    {
        return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
    }
};

/// (1/n) sum_i x_i x_i^T.
inline Matrix sample_covariance(const Dataset& data)
{
    detail::require(!data.empty(), "sample_covariance: empty dataset");
    const auto& x = data.samples();
    Matrix s = Matrix::Zero(x.cols(), x.cols());
    s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / static_cast<double>(x.rows()));
    s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
    return s;
}

namespace detail {

inline void require_symmetric(const Matrix& s, const char* who)
{
    require(s.rows() == s.cols() && s.rows() >= 1, std::string(who) + ": matrix must be square");
    require(s.allFinite(), std::string(who) + ": non-finite entry");
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    require((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale, std::string(who) + ": matrix not symmetric");
}

}  // namespace detail

inline EigenSystem eigendecompose(const Matrix& s)
{
    detail::require_symmetric(s, "eigendecompose");
    const Matrix sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericalError("eigendecompose: solver did not converge");

    EigenSystem es;
    es.eigenvalues = solver.eigenvalues().reverse();
    es.eigenvectors = solver.eigenvectors().rowwise().reverse();

    const double fro = sym.norm();
    if ((sym - es.reconstruct()).norm() > 1e-8 * fro)
        throw NumericalError("eigendecompose: reconstruction tolerance exceeded");
    return es;
}

/// Symmetric square root of a PSD matrix. Eigenvalues in [-1e-6, 0) are clamped.
inline Matrix psd_sqrt(const Matrix& s)
{
    const EigenSystem es = eigendecompose(s);
    if (es.eigenvalues.minCoeff() < -1e-6)
        throw InvalidArgument("psd_sqrt: matrix has a materially negative eigenvalue");
    const Vector root = es.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    Matrix r = es.eigenvectors * root.asDiagonal() * es.eigenvectors.transpose();
    return 0.5 * (r + r.transpose());
}

namespace detail {

inline void require_unit(const Vector& v, const char* who)
{
    require(std::abs(v.norm() - 1.0) <= kUnitTolerance, std::string(who) + ": vector is not unit norm");
}

}  // namespace detail

/// 1 - (u^T v)^2.
inline double sin2(const Vector& u, const Vector& v)
{
    detail::require(u.size() == v.size(), "sin2: dimension mismatch");
    detail::require_unit(u, "sin2");
    detail::require_unit(v, "sin2");
    const double c = u.dot(v);
    return std::max(0.0, 1.0 - c * c);
}

/// v if reference^T v >= 0, else -v.
inline Vector sign_align(const Vector& reference, const Vector& v)
{
    detail::require(reference.size() == v.size(), "sign_align: dimension mismatch");
    return reference.dot(v) < 0.0 ? Vector(-v) : v;
}

}  // namespace ojaci
