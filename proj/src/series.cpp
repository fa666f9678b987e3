#include "raf/series.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace raf {

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

MultivariateSeries::MultivariateSeries(std::vector<Date> dates, Matrix values,
                                       std::vector<Variable> variables,
                                       std::vector<int> target_indices)
    : dates_(std::move(dates)),
      values_(std::move(values)),
      variables_(std::move(variables)),
      targets_(std::move(target_indices)) {
    if (static_cast<Eigen::Index>(dates_.size()) != values_.rows()) {
        throw ShapeError(fmt::format("series has {} dates but {} value rows", dates_.size(),
                                     values_.rows()));
    }
    if (static_cast<Eigen::Index>(variables_.size()) != values_.cols()) {
        throw ShapeError(fmt::format("series has {} variables but {} value columns",
                                     variables_.size(), values_.cols()));
    }
    for (std::size_t i = 1; i < dates_.size(); ++i) {
        if (dates_[i] - dates_[i - 1] != std::chrono::days{1}) {
            throw ConfigError(fmt::format("dates must be consecutive days: {} follows {}",
                                          format_date(dates_[i]), format_date(dates_[i - 1])));
        }
    }
    std::set<int> seen;
    for (int t : targets_) {
        if (t < 0 || t >= values_.cols()) {
            throw ConfigError(fmt::format("target index {} out of range [0, {})", t, values_.cols()));
        }
        if (!seen.insert(t).second) throw ConfigError(fmt::format("duplicate target index {}", t));
    }
}

int MultivariateSeries::column(const std::string& name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i].name == name) return static_cast<int>(i);
    }
    std::string known;
    for (const auto& v : variables_) known += (known.empty() ? "" : ", ") + v.name;
    throw ConfigError(fmt::format("unknown variable '{}' (known: {})", name, known));
}

bool MultivariateSeries::has_missing() const { return values_.hasNaN(); }

MultivariateSeries MultivariateSeries::with_values(Matrix values) const {
    return MultivariateSeries(dates_, std::move(values), variables_, targets_);
}

MultivariateSeries MultivariateSeries::with_targets(std::vector<int> target_indices) const {
    return MultivariateSeries(dates_, values_, variables_, std::move(target_indices));
}

WindowPair window_at(const Matrix& values, Eigen::Index origin, Eigen::Index l, Eigen::Index h) {
    const Eigen::Index T = values.rows();
    if (l < 1 || h < 0 || origin - l + 1 < 0 || origin + h > T - 1) {
        throw BoundsError(
            fmt::format("window out of range: origin={}, l={}, h={}, T={}", origin, l, h, T));
    }
    WindowPair pair;
    pair.lookback = values.middleRows(origin - l + 1, l);
    pair.future = values.middleRows(origin + 1, h);
    pair.origin = origin;
    return pair;
}

WindowPair window_at(const MultivariateSeries& series, Eigen::Index origin, Eigen::Index l,
                     Eigen::Index h) {
    return window_at(series.values(), origin, l, h);
}

}  // namespace raf
