#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "raf/series.hpp"

namespace raf {

/// Half-open row range [begin, end) of a series.
struct RowSpan {
    Eigen::Index begin = 0;
    Eigen::Index end = 0;
    Eigen::Index size() const noexcept { return end - begin; }
};

struct SplitSpans {
    RowSpan train;
    RowSpan test;
};

/// boundary = floor(train_fraction * T); train = [0, boundary), test = [boundary, T).
SplitSpans chronological_split(Eigen::Index T, double train_fraction);
SplitSpans chronological_split(const MultivariateSeries& series, double train_fraction);

/// Sliding windows whose full extent lies inside `span`. Origins are series rows.
std::vector<WindowPair> build_pairs(const Matrix& values, RowSpan span, Eigen::Index l,
                                    Eigen::Index h, Eigen::Index stride = 1);

/// Windows whose future rows lie inside `span`; lookbacks may reach back before it.
std::vector<WindowPair> build_forecast_pairs(const Matrix& values, RowSpan span, Eigen::Index l,
                                             Eigen::Index h, Eigen::Index stride = 1);

enum class PoolOrder { MostRecent, Oldest };

/// Retrieval pool: window pairs in ascending origin order, all of one shape.
class KnowledgeBase {
public:
    KnowledgeBase() = default;
    KnowledgeBase(std::vector<WindowPair> samples, Eigen::Index l, Eigen::Index h, Eigen::Index m,
                  RowSpan source_span);

    /// Pool over the chronologically first `train_fraction` of `series`.
    static KnowledgeBase from_series(const MultivariateSeries& series, double train_fraction,
                                     Eigen::Index l, Eigen::Index h, Eigen::Index stride = 1);

    const std::vector<WindowPair>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const WindowPair& operator[](std::size_t i) const { return samples_[i]; }

    Eigen::Index lookback() const noexcept { return l_; }
    Eigen::Index horizon() const noexcept { return h_; }
    Eigen::Index width() const noexcept { return m_; }
    RowSpan source_span() const noexcept { return span_; }

    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static KnowledgeBase load(std::istream& in);
    static KnowledgeBase load(const std::filesystem::path& path);

private:
    std::vector<WindowPair> samples_;
    Eigen::Index l_ = 0;
    Eigen::Index h_ = 0;
    Eigen::Index m_ = 0;
    RowSpan span_;
};

/// Evaluation windows: every sample's future rows lie strictly after the training span.
struct TestSet {
    std::vector<WindowPair> samples;
    Eigen::Index l = 0;
    Eigen::Index h = 0;
    RowSpan target_span;

    static TestSet from_series(const MultivariateSeries& series, double train_fraction,
                               Eigen::Index l, Eigen::Index h);
};

/// Keeps ceil(d * coverage / train_fraction) samples; coverage is a fraction of the whole dataset.
KnowledgeBase restrict_pool(const KnowledgeBase& kb, double coverage, double train_fraction,
                            PoolOrder order = PoolOrder::MostRecent);

}  // namespace raf
