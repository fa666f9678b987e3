#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "raf/augment.hpp"
#include "raf/forecast.hpp"
#include "raf/knowledge_base.hpp"
#include "raf/retrieval.hpp"

namespace raf {

struct PipelineConfig {
    RetrieverKind retriever = RetrieverKind::Similarity;
    Strategy strategy = Strategy::B;
    std::size_t k = 3;
    int mi_bins = 0;                          // 0 = Sturges
    std::shared_ptr<const Embedder> embedder; // null = builtin pooled
};

/// Retrieve, augment, forecast. An empty pool (coverage 0) forecasts from the
/// bare query lookback. The knowledge base and forecaster must outlive the pipeline.
class RafPipeline {
public:
    RafPipeline(const KnowledgeBase& kb, PipelineConfig config, const Forecaster& forecaster,
                std::vector<int> target_indices, std::vector<std::string> variables = {});

    ForecastResult run(const WindowPair& query) const;

    /// Context set for `query`, or nullopt when the pool is empty or every
    /// candidate overlaps the query.
    std::optional<ContextSet> retrieve(const WindowPair& query) const;

    /// Forecast from the query lookback alone.
    ForecastResult run_bare(const WindowPair& query) const;

    const PipelineConfig& config() const noexcept { return config_; }

private:
    ForecastRequest request_for(const Matrix& context, const WindowPair& query) const;

    const KnowledgeBase* kb_;
    PipelineConfig config_;
    const Forecaster* forecaster_;
    std::vector<int> targets_;
    std::vector<std::string> variables_;
    std::optional<Retriever> retriever_;
};

ForecastResult run_raf_pipeline(const KnowledgeBase& kb, const WindowPair& query,
                                const PipelineConfig& config, const Forecaster& forecaster,
                                const std::vector<int>& target_indices);

}  // namespace raf
