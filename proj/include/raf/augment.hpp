#pragma once

#include <optional>
#include <string>
#include <vector>

#include "raf/retrieval.hpp"
#include "raf/series.hpp"

namespace raf {

enum class Strategy { A, B, C };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& text);

enum class SegmentLabel { ContextLookback, ContextFuture, QueryLookback };

struct Segment {
    SegmentLabel label;
    RowSpan rows;
};

/// Forecaster input built from retrieved contexts plus the query lookback.
/// The last segment is always the query with exactly l rows.
struct AugmentedInput {
    Matrix matrix;
    std::vector<Segment> segments;
    Strategy strategy = Strategy::B;
};

/// [lookback; future] as one (l+h) x m block.
Matrix flatten_context(const WindowPair& pair);

/// [mean of flattened contexts; query].
AugmentedInput augment_strategy_a(const ContextSet& contexts, const Matrix& query);

/// One [flatten(c_z); query] input per context, in ranked order.
std::vector<AugmentedInput> augment_strategy_b(const ContextSet& contexts, const Matrix& query);

/// [flatten(c_1); ...; flatten(c_k); query]. With `max_rows`, the worst-ranked
/// contexts are dropped until the input fits.
AugmentedInput augment_strategy_c(const ContextSet& contexts, const Matrix& query,
                                  std::optional<Eigen::Index> max_rows = std::nullopt);

/// Pointwise mean of equally shaped matrices, summed in the given order.
Matrix average_matrices(const std::vector<Matrix>& matrices);

}  // namespace raf
