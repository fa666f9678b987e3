#include "raf/retrieval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

namespace raf {

Embedding embed_builtin(const Matrix& window, Eigen::Index k_emb) {
    const Eigen::Index l = window.rows();
    const Eigen::Index m = window.cols();
    if (l < 1) throw ShapeError("embed_builtin: empty window");
    if (m < 1 || k_emb < m) {
        throw ConfigError(fmt::format("embedding size {} must be at least the variable count {}", k_emb, m));
    }
    const Matrix z = zscore_window(window);
    const Eigen::Index segments = std::min(k_emb / m, l);
    const Eigen::Index seg_len = l / segments;
    Embedding out = Embedding::Zero(k_emb);
    Eigen::Index pos = 0;
    for (Eigen::Index c = 0; c < m; ++c) {
        for (Eigen::Index s = 0; s < segments; ++s) {
            const Eigen::Index begin = s * seg_len;
            const Eigen::Index len = (s == segments - 1) ? l - begin : seg_len;
            out(pos++) = z.col(c).segment(begin, len).mean();
        }
    }
    return out;
}

BuiltinEmbedder::BuiltinEmbedder(Eigen::Index k_emb) : k_emb_(k_emb) {
    if (k_emb_ < 1) throw ConfigError("embedding size must be positive");
}

int sturges_bins(Eigen::Index n) {
    if (n < 1) throw ConfigError("sturges_bins: need at least one sample");
    return static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))) + 1;
}

int histogram_bin(double x, double lo, double hi, int bins) {
    if (!(hi > lo)) return 0;
    const auto b = static_cast<int>((x - lo) / (hi - lo) * bins);
    return std::clamp(b, 0, bins - 1);
}

double entropy_from_counts(std::vector<long> counts) {
    counts.erase(std::remove(counts.begin(), counts.end(), 0L), counts.end());
    std::sort(counts.begin(), counts.end());
    const auto total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), 0L));
    double h = 0.0;
    for (long c : counts) {
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

double entropy_histogram(std::span<const double> samples, int bins, double lo, double hi) {
    if (samples.empty()) throw ConfigError("entropy_histogram: no samples");
    if (bins < 1) throw ConfigError(fmt::format("entropy_histogram: bins must be >= 1, got {}", bins));
    if (!(lo <= hi)) throw ConfigError(fmt::format("entropy_histogram: invalid range [{}, {}]", lo, hi));
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    for (double x : samples) {
        if (x < lo || x > hi) {
            throw ConfigError(fmt::format("entropy_histogram: sample {} outside [{}, {}]", x, lo, hi));
        }
        ++counts[static_cast<std::size_t>(histogram_bin(x, lo, hi, bins))];
    }
    return entropy_from_counts(std::move(counts));
}

namespace detail {

BinnedWindow bin_window(const Matrix& window, int bins) {
    BinnedWindow out;
    out.bins.resize(static_cast<std::size_t>(window.cols()));
    out.entropy.resize(static_cast<std::size_t>(window.cols()));
    for (Eigen::Index c = 0; c < window.cols(); ++c) {
        const auto col = window.col(c);
        const double lo = col.minCoeff();
        const double hi = col.maxCoeff();
        auto& idx = out.bins[static_cast<std::size_t>(c)];
        idx.resize(static_cast<std::size_t>(window.rows()));
        std::vector<long> counts(static_cast<std::size_t>(bins), 0);
        for (Eigen::Index t = 0; t < window.rows(); ++t) {
            idx[static_cast<std::size_t>(t)] = histogram_bin(col(t), lo, hi, bins);
            ++counts[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])];
        }
        out.entropy[static_cast<std::size_t>(c)] = entropy_from_counts(std::move(counts));
    }
    return out;
}

double binned_mutual_information(const BinnedWindow& candidate, const BinnedWindow& query, int bins) {
    const std::size_t m = candidate.bins.size();
    std::vector<long> joint(static_cast<std::size_t>(bins * bins));
    double total = 0.0;
    for (std::size_t v = 0; v < m; ++v) {
        std::fill(joint.begin(), joint.end(), 0L);
        const auto& a = candidate.bins[v];
        const auto& b = query.bins[v];
        for (std::size_t t = 0; t < a.size(); ++t) {
            ++joint[static_cast<std::size_t>(a[t] * bins + b[t])];
        }
        const double mi = candidate.entropy[v] + query.entropy[v] - entropy_from_counts(joint);
        total += std::max(0.0, mi);
    }
    return total / static_cast<double>(m);
}

}  // namespace detail

double score_mutual_information(const Matrix& query, const Matrix& candidate, int bins) {
    if (query.rows() != candidate.rows() || query.cols() != candidate.cols()) {
        throw ShapeError(fmt::format("score_mutual_information: shapes {}x{} and {}x{} differ",
                                     query.rows(), query.cols(), candidate.rows(), candidate.cols()));
    }
    if (query.rows() < 2) throw ShapeError("score_mutual_information: need at least 2 timesteps");
    if (query.cols() < 1) throw ShapeError("score_mutual_information: no variables");
    if (bins == 0) bins = sturges_bins(query.rows());
    if (bins < 1) throw ConfigError(fmt::format("bins must be >= 1, got {}", bins));
    return detail::binned_mutual_information(detail::bin_window(candidate, bins),
                                             detail::bin_window(query, bins), bins);
}

std::string to_string(RetrieverKind kind) {
    return kind == RetrieverKind::Similarity ? "sim" : "mi";
}

RetrieverKind parse_retriever(const std::string& text) {
    if (text == "sim" || text == "similarity") return RetrieverKind::Similarity;
    if (text == "mi" || text == "mutual-information") return RetrieverKind::MutualInformation;
    throw ConfigError(fmt::format("unknown retriever '{}' (expected sim or mi)", text));
}

Polarity polarity_of(RetrieverKind kind) {
    return kind == RetrieverKind::Similarity ? Polarity::LowerIsBetter : Polarity::HigherIsBetter;
}

Retriever::Retriever(const KnowledgeBase& kb, RetrievalOptions options)
    : kb_(&kb), options_(std::move(options)) {
    if (options_.kind == RetrieverKind::Similarity) {
        if (!options_.embedder) options_.embedder = std::make_shared<BuiltinEmbedder>();
        embeddings_.reserve(kb.size());
        for (const auto& s : kb.samples()) embeddings_.push_back(options_.embedder->embed(s.lookback));
    } else {
        if (kb.lookback() < 2 && !kb.empty()) throw ShapeError("MI retrieval needs lookbacks of >= 2 rows");
        bins_ = options_.bins == 0 ? sturges_bins(std::max<Eigen::Index>(kb.lookback(), 1)) : options_.bins;
        if (bins_ < 1) throw ConfigError(fmt::format("bins must be >= 1, got {}", bins_));
        binned_.reserve(kb.size());
        for (const auto& s : kb.samples()) binned_.push_back(detail::bin_window(s.lookback, bins_));
    }
}

std::vector<ScoredCandidate> Retriever::score_all(const Matrix& query,
                                                  std::optional<RowSpan> exclude) const {
    if (query.rows() != kb_->lookback() || query.cols() != kb_->width()) {
        throw ShapeError(fmt::format("query is {}x{} but the pool holds {}x{} lookbacks", query.rows(),
                                     query.cols(), kb_->lookback(), kb_->width()));
    }
    const auto admissible = [&](const WindowPair& s) {
        if (!exclude) return true;
        return s.last_row() < exclude->begin || s.first_row() >= exclude->end;
    };
    std::vector<ScoredCandidate> scored;
    scored.reserve(kb_->size());
    if (options_.kind == RetrieverKind::Similarity) {
        const Embedding q = options_.embedder->embed(query);
        for (std::size_t i = 0; i < kb_->size(); ++i) {
            if (admissible((*kb_)[i])) scored.push_back({i, score_similarity(embeddings_[i], q)});
        }
    } else {
        const detail::BinnedWindow q = detail::bin_window(query, bins_);
        for (std::size_t i = 0; i < kb_->size(); ++i) {
            if (admissible((*kb_)[i])) scored.push_back({i, detail::binned_mutual_information(binned_[i], q, bins_)});
        }
    }
    return scored;
}

ContextSet Retriever::top_k(const Matrix& query, std::size_t k, std::optional<RowSpan> exclude) const {
    return rank_candidates(*kb_, score_all(query, exclude), options_.kind, k);
}

ContextSet rank_candidates(const KnowledgeBase& kb, std::vector<ScoredCandidate> scored,
                           RetrieverKind kind, std::size_t k) {
    if (k < 1) throw ConfigError("context count k must be >= 1");
    if (scored.empty()) {
        throw EmptyPoolError("retrieval pool is empty after exclusion; use the no-retrieval path");
    }
    const bool lower = polarity_of(kind) == Polarity::LowerIsBetter;
    const auto better = [&](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score != b.score) return lower ? a.score < b.score : a.score > b.score;
        return kb[a.base_index].origin < kb[b.base_index].origin;
    };
    const std::size_t keep = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);

    ContextSet out;
    out.retriever = kind;
    out.k = k;
    out.truncated = keep < k;
    out.entries.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        out.entries.push_back({kb[scored[i].base_index], scored[i].score, scored[i].base_index});
    }
    return out;
}

ContextSet retrieve_top_k(const KnowledgeBase& kb, const Matrix& query, RetrieverKind kind,
                          std::size_t k, std::optional<RowSpan> exclude) {
    return Retriever(kb, RetrievalOptions{kind, 0, nullptr}).top_k(query, k, exclude);
}

}  // namespace raf
