#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace rblab {

template <class T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using RowVectorT = Eigen::Matrix<T, 1, Eigen::Dynamic>;

/// Row-major dense matrix; analysis code works in 64-bit.
using Matrix = MatrixT<double>;
using MatrixF = MatrixT<float>;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kRankTolerance = 1e-10;

/// argmin_W ||XW - Y||^2 + ridge ||W||^2. With ridge = 0 and rank-deficient X
/// the minimum-norm solution is returned.
Matrix solve_least_squares(const Matrix& X, const Matrix& Y, double ridge = 0.0);

struct PcaResult {
    Matrix components;        // k x units, orthonormal rows
    Vector singular_values;   // all min(n, units) values of the centered data, nonincreasing
    Vector mean;              // column means

    std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
    /// Scores of X on the retained components (n x k).
    Matrix project(const Matrix& X) const;
    /// Rank-k reconstruction (X - mean) C^T C + mean.
    Matrix reconstruct(const Matrix& X) const;
    /// Variance (divided by n) carried by each singular direction.
    Vector explained_variance(std::size_t n_rows) const;
};

/// Top-k principal components of X (rows are observations). The sign of each
/// component is fixed so its largest-magnitude entry is positive.
PcaResult principal_components(const Matrix& X, std::size_t k);

double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

/// Fractional ranks starting at 1; ties share their average rank.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Column means.
Vector column_mean(const Matrix& X);

inline std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace linalg
}  // namespace rblab
