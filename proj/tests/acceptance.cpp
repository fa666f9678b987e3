// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "raf/harness.hpp"
#include "raf/metrics.hpp"
#include "raf/pipeline.hpp"
#include "raf/synthetic.hpp"

using namespace raf;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
    const auto start = Clock::now();
    Outcome out;
    try {
        out = check();
    } catch (const std::exception& e) {
        out = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (!out.pass) ++failures;
    fmt::print("{}  {:<32} {} [{:.2f}s]\n", out.pass ? "PASS" : "FAIL", name, out.detail, secs);
    std::fflush(stdout);
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

KnowledgeBase random_base(std::mt19937_64& rng, Eigen::Index T, Eigen::Index l, Eigen::Index h, Eigen::Index m) {
    const Matrix values = oracle::random_matrix(rng, T, m);
    return KnowledgeBase(build_pairs(values, {0, T}, l, h), l, h, m, {0, T});
}

Outcome mi_oracle() {
    std::mt19937_64 rng(101);
    const int bins = sturges_bins(100);
    double worst = 0.0;
    const auto start = Clock::now();
    for (int i = 0; i < 200; ++i) {
        const Matrix q = oracle::random_matrix(rng, 100, 3);
        const Matrix c = oracle::random_matrix(rng, 100, 3);
        worst = std::max(worst, std::abs(score_mutual_information(q, c) - oracle::brute_force_mi(q, c, bins)));
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-10 && secs < 5.0, fmt::format("max |diff|={:.2e} over 200 pairs, {:.2f}s", worst, secs)};
}

Outcome mi_axioms() {
    std::mt19937_64 rng(102);
    std::uniform_int_distribution<int> len(8, 120);
    std::uniform_int_distribution<int> width(1, 5);
    int broken = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Eigen::Index l = len(rng);
        const Eigen::Index m = width(rng);
        const Matrix a = oracle::random_matrix(rng, l, m);
        const Matrix b = oracle::random_matrix(rng, l, m);
        const double ab = score_mutual_information(a, b);
        const bool symmetric = ab == score_mutual_information(b, a);
        const bool nonnegative = ab >= 0.0;
        const bool constant_zero = score_mutual_information(a, Matrix::Constant(l, m, 0.7)) == 0.0;

        // Distinct bins per variable: a permutation of 0..l-1 with l bins.
        Matrix x(l, m);
        for (Eigen::Index v = 0; v < m; ++v) {
            std::vector<double> perm(static_cast<std::size_t>(l));
            std::iota(perm.begin(), perm.end(), 0.0);
            std::shuffle(perm.begin(), perm.end(), rng);
            for (Eigen::Index t = 0; t < l; ++t) x(t, v) = 3.0 * perm[static_cast<std::size_t>(t)] - 2.0;
        }
        const int bins = static_cast<int>(l);
        double mean_entropy = 0.0;
        for (Eigen::Index v = 0; v < m; ++v) mean_entropy += oracle::brute_force_entropy(x.col(v), bins);
        mean_entropy /= static_cast<double>(m);
        const double self = score_mutual_information(x, x, bins);
        const bool self_entropy = std::abs(self - mean_entropy) <= 1e-12 &&
                                  std::abs(self - std::log(static_cast<double>(l))) <= 1e-12;
        if (!(symmetric && nonnegative && constant_zero && self_entropy)) ++broken;
    }
    return {broken == 0, fmt::format("{} of 1000 trials violate an axiom", broken)};
}

Outcome distance_axioms() {
    std::mt19937_64 rng(103);
    int broken = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Vector a = oracle::random_matrix(rng, kDefaultEmbeddingSize, 1, -5, 5).col(0);
        const Vector b = oracle::random_matrix(rng, kDefaultEmbeddingSize, 1, -5, 5).col(0);
        const Vector c = oracle::random_matrix(rng, kDefaultEmbeddingSize, 1, -5, 5).col(0);
        const double ab = score_similarity(a, b);
        const bool ok = std::abs(score_similarity(a, a)) <= 1e-9 && std::abs(ab - score_similarity(b, a)) <= 1e-9 &&
                        ab <= score_similarity(a, c) + score_similarity(c, b) + 1e-9 &&
                        std::abs(ab - oracle::brute_force_distance(a, b)) <= 1e-9;
        if (!ok) ++broken;
    }
    return {broken == 0, fmt::format("{} of 1000 triples violate an axiom", broken)};
}

Outcome self_retrieval() {
    std::mt19937_64 rng(104);
    std::uniform_int_distribution<int> len(5, 40);
    std::uniform_int_distribution<int> width(1, 6);
    int broken = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index l = len(rng);
        const Eigen::Index m = width(rng);
        const auto kb = random_base(rng, 3 * l + 40, l, 3, m);
        std::uniform_int_distribution<std::size_t> pick(0, kb.size() - 1);
        const std::size_t target = pick(rng);
        const auto ctx = retrieve_top_k(kb, kb[target].lookback, RetrieverKind::Similarity, 3);
        if (ctx.entries.front().base_index != target || ctx.entries.front().score != 0.0) ++broken;
    }
    return {broken == 0, fmt::format("{} of 100 bases miss the planted copy", broken)};
}

Outcome strategy_coincidence() {
    std::mt19937_64 rng(105);
    std::uniform_int_distribution<int> len(8, 30);
    std::uniform_int_distribution<int> width(1, 4);
    std::uniform_int_distribution<int> horizon(1, 6);
    std::uniform_int_distribution<int> which(0, 2);
    int broken = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index l = len(rng);
        const Eigen::Index m = width(rng);
        const Eigen::Index h = horizon(rng);
        const auto kb = random_base(rng, 4 * l + 30, l, h, m);
        ForecasterSpec spec;
        spec.kind = std::array{ForecasterKind::Persistence, ForecasterKind::SeasonalNaive,
                               ForecasterKind::Autoregressive}[static_cast<std::size_t>(which(rng))];
        spec.ar_order = 2;
        const auto forecaster = make_forecaster(spec);
        const WindowPair query{oracle::random_matrix(rng, l, m), Matrix::Zero(h, m), 10 * l + 100};
        PipelineConfig config;
        config.k = 1;
        config.retriever = trial % 2 ? RetrieverKind::MutualInformation : RetrieverKind::Similarity;
        std::vector<Matrix> out;
        for (auto s : {Strategy::A, Strategy::B, Strategy::C}) {
            config.strategy = s;
            out.push_back(RafPipeline(kb, config, *forecaster, {0}).run(query).values);
        }
        const auto same = [](const Matrix& x, const Matrix& y) {
            return x.size() == y.size() &&
                   std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) == 0;
        };
        if (!same(out[0], out[1]) || !same(out[0], out[2])) ++broken;
    }
    return {broken == 0, fmt::format("{} of 50 pipelines differ across strategies", broken)};
}

Outcome metric_hand_checks() {
    Vector y(3), yhat(3);
    y << 1, 2, 3;
    yhat << 2, 2, 2;
    bool ok = std::abs(mae(y, yhat) - 2.0 / 3.0) <= 1e-12 && std::abs(rmse(y, yhat) - std::sqrt(2.0 / 3.0)) <= 1e-12;

    Vector t(5), p(5);
    t << 0, 1, 5, 9, 10;
    p << 0, 5, 5, 5, 10;
    ok = ok && *sedi(t, p, {0.1, 0.9, 1.5, 8.5}) == 0.5;

    std::mt19937_64 rng(106);
    int out_of_range = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Vector truth = oracle::random_matrix(rng, 40, 1, -3, 3).col(0);
        const Vector pred = oracle::random_matrix(rng, 40, 1, -3, 3).col(0);
        const auto th = sedi_thresholds(truth);
        const auto s = sedi(truth, pred, th);
        if (!s || *s < 0.0 || *s > 1.0) ++out_of_range;
        if (trial == 0) {
            ok = ok && mae(truth, truth) == 0.0 && rmse(truth, truth) == 0.0 && *sedi(truth, truth, th) == 1.0;
        }
    }
    return {ok && out_of_range == 0,
            fmt::format("hand examples {}, SEDI out of [0,1] in {} of 1000 pairs", ok ? "match" : "differ",
                        out_of_range)};
}

Outcome split_fidelity() {
    const auto s = chronological_split(1538, 0.85);
    return {s.train.size() == 1307 && s.test.size() == 231 && s.train.end == s.test.begin,
            fmt::format("train={} test={}", s.train.size(), s.test.size())};
}

Outcome no_retrieval_equivalence(const MultivariateSeries& series) {
    ExperimentConfig config;
    config.coverages = {0.0};
    const auto result = run_experiment(config, series);
    if (!result.failures.empty()) return {false, result.failures.front().message};
    const auto forecaster = make_forecaster(config.forecaster);

    std::size_t compared = 0;
    std::size_t mismatched = 0;
    for (const auto& cell : result.cells) {
        const auto test = TestSet::from_series(series, config.train_fraction, config.lookback, cell.lead_time);
        const auto base = KnowledgeBase::from_series(series, config.train_fraction, config.lookback, cell.lead_time);
        const auto empty = restrict_pool(base, 0.0, config.train_fraction);
        for (std::size_t i = 0; i < test.samples.size(); ++i) {
            const auto& q = test.samples[i];
            const Matrix bare = forecaster->forecast({q.lookback, cell.lead_time, series.target_indices(), {}, {}}).values;
            bool same = cell.samples[i].prediction == bare;
            for (auto r : {RetrieverKind::Similarity, RetrieverKind::MutualInformation}) {
                for (auto s : {Strategy::A, Strategy::B, Strategy::C}) {
                    PipelineConfig pc;
                    pc.retriever = r;
                    pc.strategy = s;
                    same = same && RafPipeline(empty, pc, *forecaster, series.target_indices()).run(q).values == bare;
                }
            }
            ++compared;
            mismatched += !same;
        }
    }
    return {mismatched == 0 && compared > 0,
            fmt::format("{} of {} test forecasts differ from the bare forecaster", mismatched, compared)};
}

ExperimentConfig benchmark_config() {
    ExperimentConfig config;
    config.top_k = 3;
    config.strategies = {Strategy::B};
    config.retrievers = {RetrieverKind::Similarity, RetrieverKind::MutualInformation};
    config.forecaster.kind = ForecasterKind::Autoregressive;
    config.workers = 1;
    return config;
}

const std::vector<double> kSweep{0.0, 0.25, 0.45, 0.65, 0.85};

std::string first_run_csv;

Outcome benchmark(const MultivariateSeries& series) {
    const auto start = Clock::now();
    ExperimentResult full;
    const auto rows = sweep_pool_size(benchmark_config(), series, kSweep, &full);
    const double secs = seconds_since(start);
    if (!full.failures.empty()) return {false, full.failures.front().message};
    std::ostringstream csv;
    full.report.write_csv(csv);
    first_run_csv = csv.str();

    std::map<std::tuple<Eigen::Index, std::string, double>, double> overall;
    std::map<Eigen::Index, double> baseline;
    for (const auto& r : rows) {
        if (r.coverage == 0.0) baseline[r.lead_time] = r.mae;
        else overall[{r.lead_time, r.retriever, r.coverage}] = r.mae;
    }
    bool ok = true;
    std::string detail;
    for (Eigen::Index h : {21, 28}) {
        const double sim = overall.at({h, "sim", 0.85});
        const double mi = overall.at({h, "mi", 0.85});
        ok = ok && sim <= baseline.at(h) && mi <= baseline.at(h);
        detail += fmt::format("h={}: none={:.4f} sim={:.4f} mi={:.4f}; ", h, baseline.at(h), sim, mi);
    }
    bool sweep_max_at_zero = true;
    for (const auto& [key, value] : overall) {
        if (value >= baseline.at(std::get<0>(key))) sweep_max_at_zero = false;
    }
    ok = ok && sweep_max_at_zero && secs < 120.0;
    detail += fmt::format("sweep max at coverage 0: {}; {:.1f}s single-threaded", sweep_max_at_zero ? "yes" : "no",
                          secs);
    return {ok, detail};
}

Outcome determinism(const MultivariateSeries& series) {
    if (first_run_csv.empty()) return {false, "benchmark run did not produce a report"};
    ExperimentResult second;
    sweep_pool_size(benchmark_config(), series, kSweep, &second);
    std::ostringstream csv;
    second.report.write_csv(csv);
    const bool same = csv.str() == first_run_csv;
    return {same, fmt::format("report CSVs of two runs ({} bytes) are {}", first_run_csv.size(),
                              same ? "byte-identical" : "different")};
}

}  // namespace

int main() {
    const auto series = make_synthetic_dataset().series;
    report("mi-oracle-equivalence", mi_oracle);
    report("mi-axioms", mi_axioms);
    report("distance-axioms", distance_axioms);
    report("self-retrieval", self_retrieval);
    report("strategy-coincidence", strategy_coincidence);
    report("metric-hand-checks", metric_hand_checks);
    report("split-fidelity", split_fidelity);
    report("no-retrieval-equivalence", [&] { return no_retrieval_equivalence(series); });
    report("constructed-benchmark", [&] { return benchmark(series); });
    report("determinism", [&] { return determinism(series); });
    fmt::print("{} criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
