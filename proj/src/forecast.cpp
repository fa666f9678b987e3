#include "raf/forecast.hpp"

#include <fmt/format.h>

#include "raf/protocol.hpp"

namespace raf {

void ForecastRequest::validate() const {
    if (context.rows() < 1) throw ShapeError("forecast request has an empty context");
    if (horizon < 1) throw ConfigError(fmt::format("horizon must be >= 1, got {}", horizon));
    if (target_indices.empty()) throw ConfigError("forecast request names no target columns");
    for (int t : target_indices) {
        if (t < 0 || t >= context.cols()) {
            throw ConfigError(fmt::format("target index {} out of range for {} columns", t, context.cols()));
        }
    }
}

ForecastResult forecast_persistence(const ForecastRequest& request) {
    request.validate();
    const auto n = static_cast<Eigen::Index>(request.target_indices.size());
    const Eigen::Index last = request.context.rows() - 1;
    Matrix values(request.horizon, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        values.col(j).setConstant(request.context(last, request.target_indices[static_cast<std::size_t>(j)]));
    }
    return {std::move(values), "persistence"};
}

ForecastResult forecast_seasonal_naive(const ForecastRequest& request, Eigen::Index period) {
    request.validate();
    if (period < 1) throw ConfigError(fmt::format("seasonal period must be >= 1, got {}", period));
    const Eigen::Index rows = request.context.rows();
    const auto n = static_cast<Eigen::Index>(request.target_indices.size());
    Matrix values(request.horizon, n);
    bool fallback = false;
    for (Eigen::Index i = 0; i < request.horizon; ++i) {
        Eigen::Index src = rows - period + (i % period);
        if (src < 0) {
            src = rows - 1;
            fallback = true;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            values(i, j) = request.context(src, request.target_indices[static_cast<std::size_t>(j)]);
        }
    }
    std::string id = fmt::format("seasonal-naive(s={})", period);
    if (fallback) id = fmt::format("seasonal-naive(s={},persistence-fallback)", period);
    return {std::move(values), std::move(id)};
}

ArModel fit_autoregressive(const Eigen::Ref<const Vector>& series, Eigen::Index order, double ridge) {
    if (order < 1) throw ConfigError(fmt::format("AR order must be >= 1, got {}", order));
    if (!(ridge >= 0.0)) throw ConfigError(fmt::format("ridge damping must be >= 0, got {}", ridge));
    const Eigen::Index rows = series.size();
    if (rows < 2 * order + 1) {
        throw ConfigError(fmt::format("AR({}) needs at least {} context rows, got {}", order,
                                      2 * order + 1, rows));
    }
    const Eigen::Index samples = rows - order;
    Matrix design(samples, order + 1);
    design.col(0).setOnes();
    for (Eigen::Index j = 1; j <= order; ++j) design.col(j) = series.segment(order - j, samples);
    const Vector target = series.tail(samples);

    Matrix normal = design.transpose() * design;
    normal.diagonal().tail(order).array() += ridge;
    const Vector rhs = design.transpose() * target;

    const Eigen::FullPivLU<Matrix> lu(normal);
    if (lu.rank() < order + 1) {
        throw NumericError(fmt::format(
            "AR({}) normal equations are singular; use a ridge damping > 0 (got {})", order, ridge));
    }
    const Vector beta = lu.solve(rhs);
    return {beta(0), beta.tail(order)};
}

ForecastResult forecast_autoregressive(const ForecastRequest& request, Eigen::Index order, double ridge) {
    request.validate();
    const auto n = static_cast<Eigen::Index>(request.target_indices.size());
    Matrix values(request.horizon, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Vector series = request.context.col(request.target_indices[static_cast<std::size_t>(j)]);
        const ArModel model = fit_autoregressive(series, order, ridge);
        // history holds lags 1..p, most recent first
        Vector history = series.tail(order).reverse();
        for (Eigen::Index step = 0; step < request.horizon; ++step) {
            const double next = model.intercept + model.coefficients.dot(history);
            values(step, j) = next;
            for (Eigen::Index q = order - 1; q > 0; --q) history(q) = history(q - 1);
            history(0) = next;
        }
    }
    return {std::move(values), fmt::format("ar(p={},lambda={})", order, ridge)};
}

SeasonalNaiveForecaster::SeasonalNaiveForecaster(Eigen::Index period) : period_(period) {
    if (period_ < 1) throw ConfigError(fmt::format("seasonal period must be >= 1, got {}", period_));
}

std::string SeasonalNaiveForecaster::id() const { return fmt::format("seasonal-naive(s={})", period_); }

AutoregressiveForecaster::AutoregressiveForecaster(Eigen::Index order, double ridge)
    : order_(order), ridge_(ridge) {
    if (order_ < 1) throw ConfigError(fmt::format("AR order must be >= 1, got {}", order_));
    if (!(ridge_ >= 0.0)) throw ConfigError(fmt::format("ridge damping must be >= 0, got {}", ridge_));
}

std::string AutoregressiveForecaster::id() const { return fmt::format("ar(p={},lambda={})", order_, ridge_); }

std::string to_string(ForecasterKind kind) {
    switch (kind) {
        case ForecasterKind::Persistence: return "persistence";
        case ForecasterKind::SeasonalNaive: return "seasonal";
        case ForecasterKind::Autoregressive: return "ar";
        case ForecasterKind::External: return "external";
    }
    return "?";
}

ForecasterKind parse_forecaster(const std::string& text) {
    if (text == "persistence") return ForecasterKind::Persistence;
    if (text == "seasonal" || text == "seasonal-naive") return ForecasterKind::SeasonalNaive;
    if (text == "ar" || text == "autoregressive") return ForecasterKind::Autoregressive;
    if (text == "external") return ForecasterKind::External;
    throw ConfigError(fmt::format("unknown forecaster '{}' (expected persistence, seasonal, ar or external)", text));
}

std::unique_ptr<Forecaster> make_forecaster(const ForecasterSpec& spec) {
    switch (spec.kind) {
        case ForecasterKind::Persistence: return std::make_unique<PersistenceForecaster>();
        case ForecasterKind::SeasonalNaive: return std::make_unique<SeasonalNaiveForecaster>(spec.season);
        case ForecasterKind::Autoregressive:
            return std::make_unique<AutoregressiveForecaster>(spec.ar_order, spec.ridge);
        case ForecasterKind::External:
            return std::make_unique<ExternalForecaster>(make_transport(spec.endpoint), spec.max_rows);
    }
    throw ConfigError("unhandled forecaster kind");
}

}  // namespace raf
