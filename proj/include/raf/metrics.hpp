#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "raf/series.hpp"

namespace raf {

/// Mean absolute error.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar mae(const Eigen::MatrixBase<DerivedA>& truth, const Eigen::MatrixBase<DerivedB>& pred) {
    if (truth.size() == 0 || truth.size() != pred.size()) {
        throw ShapeError("mae: inputs must be non-empty and of equal length");
    }
    return (truth.derived().reshaped() - pred.derived().reshaped()).cwiseAbs().mean();
}

/// Root mean squared error.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar rmse(const Eigen::MatrixBase<DerivedA>& truth, const Eigen::MatrixBase<DerivedB>& pred) {
    if (truth.size() == 0 || truth.size() != pred.size()) {
        throw ShapeError("rmse: inputs must be non-empty and of equal length");
    }
    return std::sqrt((truth.derived().reshaped() - pred.derived().reshaped()).squaredNorm() /
                     static_cast<typename DerivedA::Scalar>(truth.size()));
}

/// Empirical quantile, linear interpolation at position (N-1)p of the sorted sample.
double quantile(std::vector<double> values, double p);

struct SediThresholds {
    double p_low = 0.1;
    double p_up = 0.9;
    double y_low = 0.0;
    double y_up = 0.0;
};

inline constexpr std::size_t kMinSediSamples = 10;

SediThresholds sedi_thresholds(const Vector& truth, double p_low = 0.1, double p_up = 0.9);

/// Joint extreme detections over true extremes (strict inequalities).
/// nullopt when the truth has no extremes.
std::optional<double> sedi(const Vector& truth, const Vector& pred, const SediThresholds& thresholds);

/// Pearson correlation between the listed columns. Pairs involving a
/// constant column are NaN; the diagonal of a non-constant column is exactly 1.
Matrix correlation_matrix(const MultivariateSeries& series, const std::vector<int>& columns);
Matrix correlation_matrix(const Matrix& values);

}  // namespace raf
