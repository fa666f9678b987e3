#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "raf/error.hpp"

namespace raf {

/// Row = timestep (oldest first), column = variable.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Date = std::chrono::sys_days;

std::string format_date(Date d);

struct Variable {
    std::string name;
    std::string unit;  // ft, cfs, inches, mm
};

/// Daily multivariate series. NaN cells mark missing observations; only
/// ingestion produces them and interpolate_gaps removes them.
class MultivariateSeries {
public:
    MultivariateSeries() = default;

    /// Validates the uniform 1-day grid, the row/column counts and the target indices.
    MultivariateSeries(std::vector<Date> dates, Matrix values, std::vector<Variable> variables,
                       std::vector<int> target_indices = {});

    const std::vector<Date>& dates() const noexcept { return dates_; }
    const Matrix& values() const noexcept { return values_; }
    const std::vector<Variable>& variables() const noexcept { return variables_; }
    const std::vector<int>& target_indices() const noexcept { return targets_; }

    Eigen::Index rows() const noexcept { return values_.rows(); }
    Eigen::Index cols() const noexcept { return values_.cols(); }

    /// Column index of a variable; throws ConfigError listing known names.
    int column(const std::string& name) const;
    bool has_missing() const;

    MultivariateSeries with_values(Matrix values) const;
    MultivariateSeries with_targets(std::vector<int> target_indices) const;

private:
    std::vector<Date> dates_;
    Matrix values_;
    std::vector<Variable> variables_;
    std::vector<int> targets_;
};

/// One (lookback, future) sample. `origin` is the series row of the last lookback step.
struct WindowPair {
    Matrix lookback;  // l x m
    Matrix future;    // h x m
    Eigen::Index origin = 0;

    Eigen::Index first_row() const noexcept { return origin - lookback.rows() + 1; }
    Eigen::Index last_row() const noexcept { return origin + future.rows(); }
};

/// Slices rows [origin-l+1, origin] and [origin+1, origin+h].
WindowPair window_at(const Matrix& values, Eigen::Index origin, Eigen::Index l, Eigen::Index h);
WindowPair window_at(const MultivariateSeries& series, Eigen::Index origin, Eigen::Index l,
                     Eigen::Index h);

/// Column-wise z-score with the population standard deviation (divisor l).
/// Columns whose spread is zero (relative to their magnitude) map to zeros.
template <typename Derived>
MatrixX<typename Derived::Scalar> zscore_window(const Eigen::MatrixBase<Derived>& window) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index l = window.rows();
    if (l < 1) throw ShapeError("zscore_window: window has no rows");
    MatrixX<Scalar> out(l, window.cols());
    for (Eigen::Index c = 0; c < window.cols(); ++c) {
        const auto col = window.col(c);
        const Scalar mean = col.mean();
        const Scalar var = (col.array() - mean).square().sum() / static_cast<Scalar>(l);
        const Scalar sd = std::sqrt(var);
        const Scalar scale = std::max(Scalar(1), std::abs(mean));
        if (!(sd > Scalar(1e-12) * scale)) {
            out.col(c).setZero();
        } else {
            out.col(c) = (col.array() - mean) / sd;
        }
    }
    return out;
}

}  // namespace raf
