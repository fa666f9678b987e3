#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "raf/series.hpp"

namespace raf {

struct ForecastMetadata {
    std::string strategy;
    std::string retriever;
    Eigen::Index query_origin = -1;
};

/// Input to a forecaster: oldest row first, all m variables.
struct ForecastRequest {
    Matrix context;
    Eigen::Index horizon = 1;
    std::vector<int> target_indices;
    std::vector<std::string> variables;  // optional column names for external peers
    ForecastMetadata metadata;

    void validate() const;
};

/// h x n point forecast.
struct ForecastResult {
    Matrix values;
    std::string forecaster_id;
};

class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual ForecastResult forecast(const ForecastRequest& request) const = 0;
    virtual std::string id() const = 0;
    /// Longest context the forecaster accepts, if bounded.
    virtual std::optional<Eigen::Index> max_rows() const { return std::nullopt; }
};

/// Repeats the last context row's targets.
ForecastResult forecast_persistence(const ForecastRequest& request);

/// Step i copies context row rows - s + ((i-1) mod s); falls back to
/// persistence when the context is shorter than one period.
ForecastResult forecast_seasonal_naive(const ForecastRequest& request, Eigen::Index period);

struct ArModel {
    double intercept = 0.0;
    Vector coefficients;  // lag 1 first
};

/// Ridge-damped AR(p) fit with an unpenalised intercept.
ArModel fit_autoregressive(const Eigen::Ref<const Vector>& series, Eigen::Index order, double ridge);

/// Per target column: fit AR(p) over the whole context and roll forward h steps,
/// feeding predictions back as lags.
ForecastResult forecast_autoregressive(const ForecastRequest& request, Eigen::Index order, double ridge);

class PersistenceForecaster final : public Forecaster {
public:
    ForecastResult forecast(const ForecastRequest& request) const override {
        return forecast_persistence(request);
    }
    std::string id() const override { return "persistence"; }
};

class SeasonalNaiveForecaster final : public Forecaster {
public:
    explicit SeasonalNaiveForecaster(Eigen::Index period);
    ForecastResult forecast(const ForecastRequest& request) const override {
        return forecast_seasonal_naive(request, period_);
    }
    std::string id() const override;

private:
    Eigen::Index period_;
};

class AutoregressiveForecaster final : public Forecaster {
public:
    AutoregressiveForecaster(Eigen::Index order, double ridge);
    ForecastResult forecast(const ForecastRequest& request) const override {
        return forecast_autoregressive(request, order_, ridge_);
    }
    std::string id() const override;

private:
    Eigen::Index order_;
    double ridge_;
};

enum class ForecasterKind { Persistence, SeasonalNaive, Autoregressive, External };

struct ForecasterSpec {
    ForecasterKind kind = ForecasterKind::Autoregressive;
    Eigen::Index season = 7;
    Eigen::Index ar_order = 7;
    double ridge = 1e-3;
    std::string endpoint;                  // URL or exec:COMMAND
    std::optional<Eigen::Index> max_rows;  // external peers only
};

std::string to_string(ForecasterKind kind);
ForecasterKind parse_forecaster(const std::string& text);

std::unique_ptr<Forecaster> make_forecaster(const ForecasterSpec& spec);

}  // namespace raf
