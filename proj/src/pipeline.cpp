#include "raf/pipeline.hpp"

#include <fmt/format.h>

namespace raf {
namespace {

template <typename F>
auto stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what());
    }
}

}  // namespace

RafPipeline::RafPipeline(const KnowledgeBase& kb, PipelineConfig config, const Forecaster& forecaster,
                         std::vector<int> target_indices, std::vector<std::string> variables)
    : kb_(&kb),
      config_(std::move(config)),
      forecaster_(&forecaster),
      targets_(std::move(target_indices)),
      variables_(std::move(variables)) {
    if (config_.k < 1) throw ConfigError("context count k must be >= 1");
    if (!kb.empty()) {
        retriever_.emplace(kb, RetrievalOptions{config_.retriever, config_.mi_bins, config_.embedder});
    }
}

ForecastRequest RafPipeline::request_for(const Matrix& context, const WindowPair& query) const {
    ForecastRequest req;
    req.context = context;
    req.horizon = query.future.rows();
    req.target_indices = targets_;
    req.variables = variables_;
    req.metadata = {to_string(config_.strategy), to_string(config_.retriever), query.origin};
    return req;
}

std::optional<ContextSet> RafPipeline::retrieve(const WindowPair& query) const {
    if (!retriever_) return std::nullopt;
    return stage("retrieve", [&]() -> std::optional<ContextSet> {
        // Overlap exclusion applies to queries whose targets fall inside the pool.
        std::optional<RowSpan> exclude;
        if (query.origin + 1 <= kb_->samples().back().last_row()) {
            exclude = RowSpan{query.first_row(), query.last_row() + 1};
        }
        auto scored = retriever_->score_all(query.lookback, exclude);
        if (scored.empty()) return std::nullopt;
        return rank_candidates(*kb_, std::move(scored), config_.retriever, config_.k);
    });
}

ForecastResult RafPipeline::run_bare(const WindowPair& query) const {
    return stage("forecast", [&] { return forecaster_->forecast(request_for(query.lookback, query)); });
}

ForecastResult RafPipeline::run(const WindowPair& query) const {
    const auto contexts = retrieve(query);
    if (!contexts) return run_bare(query);

    switch (config_.strategy) {
        case Strategy::A: {
            const auto input = stage("augment", [&] { return augment_strategy_a(*contexts, query.lookback); });
            return stage("forecast", [&] { return forecaster_->forecast(request_for(input.matrix, query)); });
        }
        case Strategy::B: {
            const auto inputs = stage("augment", [&] { return augment_strategy_b(*contexts, query.lookback); });
            return stage("forecast", [&] {
                std::vector<Matrix> forecasts;
                forecasts.reserve(inputs.size());
                std::string id;
                for (const auto& input : inputs) {
                    auto result = forecaster_->forecast(request_for(input.matrix, query));
                    id = std::move(result.forecaster_id);
                    forecasts.push_back(std::move(result.values));
                }
                return ForecastResult{average_matrices(forecasts), std::move(id)};
            });
        }
        case Strategy::C: {
            const auto input = stage("augment", [&] {
                return augment_strategy_c(*contexts, query.lookback, forecaster_->max_rows());
            });
            return stage("forecast", [&] { return forecaster_->forecast(request_for(input.matrix, query)); });
        }
    }
    throw ConfigError("unhandled augmentation strategy");
}

ForecastResult run_raf_pipeline(const KnowledgeBase& kb, const WindowPair& query,
                                const PipelineConfig& config, const Forecaster& forecaster,
                                const std::vector<int>& target_indices) {
    return RafPipeline(kb, config, forecaster, target_indices).run(query);
}

}  // namespace raf
