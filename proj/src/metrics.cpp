#include "raf/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>

namespace raf {

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ConfigError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(fmt::format("quantile level {} outside [0, 1]", p));
    std::sort(values.begin(), values.end());
    const double pos = static_cast<double>(values.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

SediThresholds sedi_thresholds(const Vector& truth, double p_low, double p_up) {
    if (!(p_low > 0.0 && p_low < p_up && p_up < 1.0)) {
        throw ConfigError(fmt::format("need 0 < p_low < p_up < 1 (got {}, {})", p_low, p_up));
    }
    if (static_cast<std::size_t>(truth.size()) < kMinSediSamples) {
        throw ConfigError(fmt::format("SEDI thresholds need at least {} samples, got {}", kMinSediSamples,
                                      truth.size()));
    }
    std::vector<double> v(truth.data(), truth.data() + truth.size());
    return {p_low, p_up, quantile(v, p_low), quantile(v, p_up)};
}

std::optional<double> sedi(const Vector& truth, const Vector& pred, const SediThresholds& t) {
    if (truth.size() != pred.size()) throw ShapeError("sedi: truth and prediction lengths differ");
    long hits = 0;
    long extremes = 0;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        const bool low = truth(i) < t.y_low;
        const bool high = truth(i) > t.y_up;
        extremes += low + high;
        hits += (low && pred(i) < t.y_low) + (high && pred(i) > t.y_up);
    }
    if (extremes == 0) return std::nullopt;
    return static_cast<double>(hits) / static_cast<double>(extremes);
}

Matrix correlation_matrix(const Matrix& values) {
    if (values.rows() < 2) throw ConfigError("correlation needs at least 2 rows");
    const Eigen::Index m = values.cols();
    const Matrix centered = values.rowwise() - values.colwise().mean();
    const Vector norms = centered.colwise().norm();
    Matrix r(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
            double value;
            if (norms(i) == 0.0 || norms(j) == 0.0) {
                value = std::numeric_limits<double>::quiet_NaN();
            } else if (i == j) {
                value = 1.0;
            } else {
                value = std::clamp(centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j)), -1.0, 1.0);
            }
            r(i, j) = r(j, i) = value;
        }
    }
    return r;
}

Matrix correlation_matrix(const MultivariateSeries& series, const std::vector<int>& columns) {
    Matrix selected(series.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        if (columns[k] < 0 || columns[k] >= series.cols()) {
            throw ConfigError(fmt::format("column index {} out of range", columns[k]));
        }
        selected.col(static_cast<Eigen::Index>(k)) = series.values().col(columns[k]);
    }
    return correlation_matrix(selected);
}

}  // namespace raf
