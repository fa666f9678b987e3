#pragma once

#include <cstdint>
#include <vector>

#include "raf/series.hpp"

namespace raf {

/// Seasonal sinusoids plus recurring 30-day anomaly episodes drawn from a
/// small set of templates. Used as a self-contained retrieval benchmark.
struct SyntheticSpec {
    Eigen::Index days = 1538;
    Eigen::Index variables = 8;
    Eigen::Index stations = 5;           // leading columns are water levels (ft)
    int templates = 3;
    Eigen::Index episode_length = 30;
    Eigen::Index min_gap = 40;           // days between episode starts
    Eigen::Index max_gap = 70;
    double noise = 0.03;
    std::uint64_t seed = 20241231;
};

struct SyntheticEpisode {
    Eigen::Index start = 0;
    int template_id = 0;
};

struct SyntheticDataset {
    MultivariateSeries series;
    std::vector<SyntheticEpisode> episodes;
};

SyntheticDataset make_synthetic_dataset(const SyntheticSpec& spec = {});

}  // namespace raf
