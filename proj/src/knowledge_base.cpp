#include "raf/knowledge_base.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

namespace raf {
namespace {

static_assert(std::endian::native == std::endian::little, "RAFKB1 blobs are little-endian");

constexpr char kMagic[6] = {'R', 'A', 'F', 'K', 'B', '1'};

// Slack for fractional products that should be integers.
constexpr double kRatioSlack = 1e-9;

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw ParseError("truncated RAFKB1 blob");
    }
    return value;
}

void write_rows(std::ostream& out, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(out, m(r, c));
    }
}

Matrix read_rows(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get<double>(in);
    }
    return m;
}

}  // namespace

SplitSpans chronological_split(Eigen::Index T, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError(fmt::format("train fraction must lie in (0, 1), got {}", train_fraction));
    }
    if (T < 2) throw ConfigError(fmt::format("cannot split a series of {} rows", T));
    auto boundary = static_cast<Eigen::Index>(
        std::floor(train_fraction * static_cast<double>(T) + kRatioSlack));
    boundary = std::clamp<Eigen::Index>(boundary, 1, T - 1);
    return {{0, boundary}, {boundary, T}};
}

SplitSpans chronological_split(const MultivariateSeries& series, double train_fraction) {
    return chronological_split(series.rows(), train_fraction);
}

std::vector<WindowPair> build_pairs(const Matrix& values, RowSpan span, Eigen::Index l,
                                    Eigen::Index h, Eigen::Index stride) {
    if (l < 1 || h < 1) throw ConfigError(fmt::format("need l >= 1 and h >= 1 (l={}, h={})", l, h));
    if (stride < 1) throw ConfigError(fmt::format("stride must be >= 1, got {}", stride));
    if (span.begin < 0 || span.end > values.rows()) throw BoundsError("span outside series");
    if (span.size() < l + h) {
        throw ConfigError(fmt::format("span of {} rows is too short: need at least l+h = {}",
                                      span.size(), l + h));
    }
    std::vector<WindowPair> pairs;
    pairs.reserve(static_cast<std::size_t>((span.size() - l - h) / stride + 1));
    for (Eigen::Index origin = span.begin + l - 1; origin + h <= span.end - 1; origin += stride) {
        pairs.push_back(window_at(values, origin, l, h));
    }
    return pairs;
}

std::vector<WindowPair> build_forecast_pairs(const Matrix& values, RowSpan span, Eigen::Index l,
                                             Eigen::Index h, Eigen::Index stride) {
    if (l < 1 || h < 1) throw ConfigError(fmt::format("need l >= 1 and h >= 1 (l={}, h={})", l, h));
    if (stride < 1) throw ConfigError(fmt::format("stride must be >= 1, got {}", stride));
    const Eigen::Index first = std::max(span.begin - 1, l - 1);
    if (first + h > span.end - 1) {
        throw ConfigError(fmt::format("test span of {} rows cannot hold a horizon of {}", span.size(), h));
    }
    std::vector<WindowPair> pairs;
    for (Eigen::Index origin = first; origin + h <= span.end - 1; origin += stride) {
        pairs.push_back(window_at(values, origin, l, h));
    }
    return pairs;
}

KnowledgeBase::KnowledgeBase(std::vector<WindowPair> samples, Eigen::Index l, Eigen::Index h,
                             Eigen::Index m, RowSpan source_span)
    : samples_(std::move(samples)), l_(l), h_(h), m_(m), span_(source_span) {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        if (s.lookback.rows() != l_ || s.future.rows() != h_ || s.lookback.cols() != m_ ||
            s.future.cols() != m_) {
            throw ShapeError(fmt::format("sample {} does not have shape l={}, h={}, m={}", i, l_, h_, m_));
        }
        if (i > 0 && s.origin <= samples_[i - 1].origin) {
            throw ConfigError("knowledge base origins must be strictly increasing");
        }
        if (s.first_row() < span_.begin || s.last_row() >= span_.end) {
            throw BoundsError(fmt::format("sample with origin {} extends outside the source span [{}, {})",
                                          s.origin, span_.begin, span_.end));
        }
    }
}

KnowledgeBase KnowledgeBase::from_series(const MultivariateSeries& series, double train_fraction,
                                         Eigen::Index l, Eigen::Index h, Eigen::Index stride) {
    const auto split = chronological_split(series, train_fraction);
    return KnowledgeBase(build_pairs(series.values(), split.train, l, h, stride), l, h,
                         series.cols(), split.train);
}

void KnowledgeBase::save(std::ostream& out) const {
    out.write(kMagic, sizeof kMagic);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(l_));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(h_));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m_));
    put<std::uint64_t>(out, samples_.size());
    put<std::int64_t>(out, span_.begin);
    put<std::int64_t>(out, span_.end);
    for (const auto& s : samples_) put<std::int64_t>(out, s.origin);
    for (const auto& s : samples_) {
        write_rows(out, s.lookback);
        write_rows(out, s.future);
    }
    if (!out) throw Error("failed writing knowledge base");
}

void KnowledgeBase::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("cannot open '{}' for writing", path.string()));
    save(out);
}

KnowledgeBase KnowledgeBase::load(std::istream& in) {
    char magic[sizeof kMagic];
    if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic)) {
        throw ParseError("not a RAFKB1 knowledge-base blob");
    }
    const auto l = static_cast<Eigen::Index>(get<std::uint64_t>(in));
    const auto h = static_cast<Eigen::Index>(get<std::uint64_t>(in));
    const auto m = static_cast<Eigen::Index>(get<std::uint64_t>(in));
    const auto d = get<std::uint64_t>(in);
    RowSpan span{get<std::int64_t>(in), get<std::int64_t>(in)};
    std::vector<WindowPair> samples(d);
    for (auto& s : samples) s.origin = get<std::int64_t>(in);
    for (auto& s : samples) {
        s.lookback = read_rows(in, l, m);
        s.future = read_rows(in, h, m);
    }
    return KnowledgeBase(std::move(samples), l, h, m, span);
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
    return load(in);
}

TestSet TestSet::from_series(const MultivariateSeries& series, double train_fraction,
                             Eigen::Index l, Eigen::Index h) {
    const auto split = chronological_split(series, train_fraction);
    return TestSet{build_forecast_pairs(series.values(), split.test, l, h), l, h, split.test};
}

KnowledgeBase restrict_pool(const KnowledgeBase& kb, double coverage, double train_fraction,
                            PoolOrder order) {
    if (!(coverage >= 0.0)) throw ConfigError(fmt::format("coverage must be >= 0, got {}", coverage));
    if (coverage > train_fraction + kRatioSlack) {
        throw ConfigError(fmt::format("coverage {} exceeds the training fraction {}", coverage,
                                      train_fraction));
    }
    const double share = std::min(1.0, coverage / train_fraction);
    const auto d = kb.size();
    auto keep = static_cast<std::size_t>(std::ceil(static_cast<double>(d) * share - kRatioSlack));
    keep = std::min(keep, d);
    const auto& all = kb.samples();
    std::vector<WindowPair> kept;
    if (order == PoolOrder::MostRecent) {
        kept.assign(all.end() - static_cast<std::ptrdiff_t>(keep), all.end());
    } else {
        kept.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    return KnowledgeBase(std::move(kept), kb.lookback(), kb.horizon(), kb.width(), kb.source_span());
}

}  // namespace raf
