#include "rblab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "rblab/errors.hpp"

namespace rblab::linalg {

namespace {

void require_finite(const Matrix& M, const char* what) {
    if (!M.allFinite()) throw NumericError(std::string(what) + " contains non-finite entries");
}

}  // namespace

Matrix solve_least_squares(const Matrix& X, const Matrix& Y, double ridge) {
    if (X.rows() < 1) throw ContractViolation("solve_least_squares: design has no rows");
    if (X.rows() != Y.rows())
        throw ContractViolation("solve_least_squares: X has " + std::to_string(X.rows()) + " rows, Y has " +
                                std::to_string(Y.rows()));
    if (!(ridge >= 0.0)) throw ContractViolation("solve_least_squares: ridge must be nonnegative");
    require_finite(X, "design matrix");
    require_finite(Y, "target matrix");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? kRankTolerance * s(0) : 0.0;
    Vector shrink(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        shrink(i) = (s(i) > cutoff && s(i) > 0.0) ? s(i) / (s(i) * s(i) + ridge) : 0.0;
    }
    Eigen::MatrixXd UtY = svd.matrixU().transpose() * Y;
    Matrix W = svd.matrixV() * shrink.asDiagonal() * UtY;
    return W;
}

Vector column_mean(const Matrix& X) {
    if (X.rows() == 0) return Vector::Zero(X.cols());
    return X.colwise().mean().transpose();
}

Matrix PcaResult::project(const Matrix& X) const {
    return (X.rowwise() - mean.transpose()) * components.transpose();
}

Matrix PcaResult::reconstruct(const Matrix& X) const {
    Matrix scores = project(X);
    Matrix out = scores * components;
    out.rowwise() += mean.transpose();
    return out;
}

Vector PcaResult::explained_variance(std::size_t n_rows) const {
    if (n_rows == 0) throw ContractViolation("explained_variance: zero rows");
    return singular_values.array().square() / static_cast<double>(n_rows);
}

PcaResult principal_components(const Matrix& X, std::size_t k) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto u = static_cast<std::size_t>(X.cols());
    if (k < 1 || k > std::min(n, u))
        throw ContractViolation("principal_components: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(std::min(n, u)) + "]");
    require_finite(X, "data matrix");

    PcaResult out;
    out.mean = column_mean(X);
    Eigen::MatrixXd centered = X.rowwise() - out.mean.transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    out.singular_values = svd.singularValues();
    out.components = svd.matrixV().leftCols(static_cast<Eigen::Index>(k)).transpose();
    for (Eigen::Index r = 0; r < out.components.rows(); ++r) {
        Eigen::Index arg = 0;
        out.components.row(r).cwiseAbs().maxCoeff(&arg);
        if (out.components(r, arg) < 0) out.components.row(r) *= -1.0;
    }
    return out;
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* name) {
    if (a.size() != b.size()) throw ContractViolation(std::string(name) + ": length mismatch");
    if (a.size() < 2) throw ContractViolation(std::string(name) + ": need at least two observations");
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
    check_pair(a, b, "pearson");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) throw UndefinedStatistic("pearson: zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values[i] < values[j]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    check_pair(a, b, "spearman");
    const auto ra = fractional_ranks(a);
    const auto rb = fractional_ranks(b);
    return pearson(ra, rb);
}

}  // namespace rblab::linalg
