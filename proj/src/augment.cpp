#include "raf/augment.hpp"

#include <fmt/format.h>

namespace raf {
namespace {

void check_contexts(const ContextSet& contexts, const Matrix& query) {
    if (contexts.empty()) throw ConfigError("augmentation needs at least one context");
    const auto& first = contexts.entries.front().pair;
    for (const auto& e : contexts.entries) {
        if (e.pair.lookback.rows() != first.lookback.rows() || e.pair.future.rows() != first.future.rows() ||
            e.pair.lookback.cols() != first.lookback.cols() || e.pair.future.cols() != first.lookback.cols()) {
            throw ShapeError("retrieved contexts do not share one shape");
        }
    }
    if (query.cols() != first.lookback.cols()) {
        throw ShapeError(fmt::format("query has {} columns, contexts have {}", query.cols(),
                                     first.lookback.cols()));
    }
}

AugmentedInput assemble(const std::vector<Matrix>& blocks, Eigen::Index l, const Matrix& query,
                        Strategy strategy) {
    Eigen::Index rows = query.rows();
    for (const auto& b : blocks) rows += b.rows();
    AugmentedInput out;
    out.strategy = strategy;
    out.matrix.resize(rows, query.cols());
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
        out.matrix.middleRows(at, b.rows()) = b;
        out.segments.push_back({SegmentLabel::ContextLookback, {at, at + l}});
        out.segments.push_back({SegmentLabel::ContextFuture, {at + l, at + b.rows()}});
        at += b.rows();
    }
    out.matrix.middleRows(at, query.rows()) = query;
    out.segments.push_back({SegmentLabel::QueryLookback, {at, at + query.rows()}});
    return out;
}

}  // namespace

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::A: return "a";
        case Strategy::B: return "b";
        case Strategy::C: return "c";
    }
    return "?";
}

Strategy parse_strategy(const std::string& text) {
    if (text == "a" || text == "A") return Strategy::A;
    if (text == "b" || text == "B") return Strategy::B;
    if (text == "c" || text == "C") return Strategy::C;
    throw ConfigError(fmt::format("unknown strategy '{}' (expected a, b or c)", text));
}

Matrix flatten_context(const WindowPair& pair) {
    Matrix out(pair.lookback.rows() + pair.future.rows(), pair.lookback.cols());
    out << pair.lookback, pair.future;
    return out;
}

Matrix average_matrices(const std::vector<Matrix>& matrices) {
    if (matrices.empty()) throw ConfigError("cannot average zero matrices");
    Matrix sum = matrices.front();
    for (std::size_t i = 1; i < matrices.size(); ++i) {
        if (matrices[i].rows() != sum.rows() || matrices[i].cols() != sum.cols()) {
            throw ShapeError("cannot average matrices of different shapes");
        }
        sum += matrices[i];
    }
    return sum / static_cast<double>(matrices.size());
}

AugmentedInput augment_strategy_a(const ContextSet& contexts, const Matrix& query) {
    check_contexts(contexts, query);
    std::vector<Matrix> flat;
    flat.reserve(contexts.size());
    for (const auto& e : contexts.entries) flat.push_back(flatten_context(e.pair));
    const Eigen::Index l = contexts.entries.front().pair.lookback.rows();
    return assemble({average_matrices(flat)}, l, query, Strategy::A);
}

std::vector<AugmentedInput> augment_strategy_b(const ContextSet& contexts, const Matrix& query) {
    check_contexts(contexts, query);
    const Eigen::Index l = contexts.entries.front().pair.lookback.rows();
    std::vector<AugmentedInput> out;
    out.reserve(contexts.size());
    for (const auto& e : contexts.entries) {
        out.push_back(assemble({flatten_context(e.pair)}, l, query, Strategy::B));
    }
    return out;
}

AugmentedInput augment_strategy_c(const ContextSet& contexts, const Matrix& query,
                                  std::optional<Eigen::Index> max_rows) {
    check_contexts(contexts, query);
    if (max_rows && *max_rows < query.rows()) {
        throw ConfigError(fmt::format("max_rows {} cannot hold the {}-row query", *max_rows, query.rows()));
    }
    const auto& first = contexts.entries.front().pair;
    const Eigen::Index l = first.lookback.rows();
    const Eigen::Index block = l + first.future.rows();
    auto keep = static_cast<Eigen::Index>(contexts.size());
    if (max_rows) keep = std::min(keep, (*max_rows - query.rows()) / block);
    std::vector<Matrix> blocks;
    for (Eigen::Index i = 0; i < keep; ++i) {
        blocks.push_back(flatten_context(contexts.entries[static_cast<std::size_t>(i)].pair));
    }
    return assemble(blocks, l, query, Strategy::C);
}

}  // namespace raf
