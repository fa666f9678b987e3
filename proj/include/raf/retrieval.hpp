#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raf/knowledge_base.hpp"
#include "raf/series.hpp"

namespace raf {

/// Fixed-length window embedding (k_emb entries).
using Embedding = Vector;

inline constexpr Eigen::Index kDefaultEmbeddingSize = 512;

/// Maps an l x m lookback window to a fixed-length vector.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual Embedding embed(const Matrix& window) const = 0;
    virtual Eigen::Index dimension() const = 0;
    virtual std::string id() const = 0;
};

/// Deterministic pooled embedding: z-score each column, average-pool it into
/// P = floor(k_emb / m) segments (the last absorbs leftover rows), lay the
/// pools out column by column and zero-pad to k_emb. Windows shorter than P
/// rows use one segment per row.
Embedding embed_builtin(const Matrix& window, Eigen::Index k_emb = kDefaultEmbeddingSize);

class BuiltinEmbedder final : public Embedder {
public:
    explicit BuiltinEmbedder(Eigen::Index k_emb = kDefaultEmbeddingSize);
    Embedding embed(const Matrix& window) const override { return embed_builtin(window, k_emb_); }
    Eigen::Index dimension() const override { return k_emb_; }
    std::string id() const override { return "builtin-pooled"; }

private:
    Eigen::Index k_emb_;
};

/// Euclidean distance between two embeddings (lower is better).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar score_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b) {
    if (a.size() != b.size()) {
        throw ShapeError("score_similarity: embedding lengths differ (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
    }
    return (a.derived().reshaped() - b.derived().reshaped()).norm();
}

/// Sturges' rule: ceil(log2 n) + 1.
int sturges_bins(Eigen::Index n);

/// Equal-width bin of x over [lo, hi]; x == hi lands in the last bin.
int histogram_bin(double x, double lo, double hi, int bins);

/// Plug-in entropy (nats) of a set of occupancy counts. Summation runs over
/// the sorted counts, so any permutation of the same counts gives the same bits.
double entropy_from_counts(std::vector<long> counts);

/// Plug-in histogram entropy (nats) over equal-width bins on [lo, hi].
double entropy_histogram(std::span<const double> samples, int bins, double lo, double hi);

/// Mean over variables of H(candidate_v) + H(query_v) - H(candidate_v, query_v),
/// each variable binned on its own min-max range and clamped at zero.
/// `bins == 0` selects Sturges' rule for the window length.
double score_mutual_information(const Matrix& query, const Matrix& candidate, int bins = 0);

namespace detail {

/// Per-variable histogram bin indices on the variable's own min-max range.
struct BinnedWindow {
    std::vector<std::vector<int>> bins;  // [variable][timestep]
    std::vector<double> entropy;         // marginal entropy per variable
};

BinnedWindow bin_window(const Matrix& window, int bins);
double binned_mutual_information(const BinnedWindow& candidate, const BinnedWindow& query, int bins);

}  // namespace detail

enum class RetrieverKind { Similarity, MutualInformation };
enum class Polarity { LowerIsBetter, HigherIsBetter };

std::string to_string(RetrieverKind kind);
RetrieverKind parse_retriever(const std::string& text);
Polarity polarity_of(RetrieverKind kind);

struct ScoredCandidate {
    std::size_t base_index = 0;
    double score = 0.0;
};

struct ContextEntry {
    WindowPair pair;
    double score = 0.0;
    std::size_t base_index = 0;
};

/// Ranked contexts, best first; ties broken by ascending origin.
struct ContextSet {
    std::vector<ContextEntry> entries;
    RetrieverKind retriever = RetrieverKind::Similarity;
    std::size_t k = 0;
    bool truncated = false;  // fewer than k admissible candidates

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
};

struct RetrievalOptions {
    RetrieverKind kind = RetrieverKind::Similarity;
    int bins = 0;                             // MI histogram bins, 0 = Sturges
    std::shared_ptr<const Embedder> embedder; // null = builtin pooled, 512
};

/// Scores a query lookback against every pool sample. Similarity retrieval
/// embeds the pool once at construction; MI retrieval caches per-sample bins.
/// The knowledge base must outlive the retriever.
class Retriever {
public:
    Retriever(const KnowledgeBase& kb, RetrievalOptions options);

    const KnowledgeBase& knowledge_base() const noexcept { return *kb_; }
    RetrieverKind kind() const noexcept { return options_.kind; }

    /// Scores every sample whose row extent does not intersect `exclude`.
    std::vector<ScoredCandidate> score_all(const Matrix& query,
                                           std::optional<RowSpan> exclude = std::nullopt) const;

    ContextSet top_k(const Matrix& query, std::size_t k,
                     std::optional<RowSpan> exclude = std::nullopt) const;

private:
    const KnowledgeBase* kb_;
    RetrievalOptions options_;
    int bins_ = 0;
    std::vector<Embedding> embeddings_;
    std::vector<detail::BinnedWindow> binned_;
};

/// One-shot retrieval without a cached retriever.
ContextSet retrieve_top_k(const KnowledgeBase& kb, const Matrix& query, RetrieverKind kind,
                          std::size_t k, std::optional<RowSpan> exclude = std::nullopt);

/// Sorts candidates by polarity, ties by ascending origin, and keeps the best k.
ContextSet rank_candidates(const KnowledgeBase& kb, std::vector<ScoredCandidate> scored,
                           RetrieverKind kind, std::size_t k);

}  // namespace raf
