#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "raf/knowledge_base.hpp"
#include "raf/pipeline.hpp"

using namespace raf;

namespace {

// Forecasts every step as the column mean of the whole context and records
// what it was given.
class MeanForecaster final : public Forecaster {
public:
    ForecastResult forecast(const ForecastRequest& r) const override {
        contexts.push_back(r.context);
        strategies.push_back(r.metadata.strategy);
        Matrix out(r.horizon, static_cast<Eigen::Index>(r.target_indices.size()));
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            out.col(j).setConstant(r.context.col(r.target_indices[static_cast<std::size_t>(j)]).mean());
        }
        return {out, id()};
    }
    std::string id() const override { return "mean"; }
    std::optional<Eigen::Index> max_rows() const override { return limit; }

    mutable std::vector<Matrix> contexts;
    mutable std::vector<std::string> strategies;
    std::optional<Eigen::Index> limit;
};

class ThrowingForecaster final : public Forecaster {
public:
    ForecastResult forecast(const ForecastRequest&) const override { throw NumericError("diverged"); }
    std::string id() const override { return "throws"; }
};

WindowPair pair(std::initializer_list<double> lookback, double future, Eigen::Index origin) {
    Matrix lb(static_cast<Eigen::Index>(lookback.size()), 1);
    Eigen::Index i = 0;
    for (double v : lookback) lb(i++, 0) = v;
    return {lb, Matrix::Constant(1, 1, future), origin};
}

KnowledgeBase three_sample_base() {
    return KnowledgeBase({pair({0, 1}, 7, 1), pair({1, 0}, 100, 10), pair({0, 3}, 11, 20)}, 2, 1, 1, {0, 25});
}

KnowledgeBase random_base(std::mt19937_64& rng, Eigen::Index T, Eigen::Index l, Eigen::Index h, Eigen::Index m) {
    const Matrix values = oracle::random_matrix(rng, T, m);
    return KnowledgeBase(build_pairs(values, {0, T}, l, h), l, h, m, {0, T});
}

}  // namespace

TEST_CASE("hand-traced retrieval and augmentation on a three-sample base") {
    const auto kb = three_sample_base();
    const WindowPair query = pair({4, 6}, 0, 100);
    MeanForecaster f;
    PipelineConfig config;
    config.k = 2;

    RafPipeline pipeline(kb, config, f, {0});
    const auto ctx = pipeline.retrieve(query);
    REQUIRE(ctx);
    REQUIRE(ctx->size() == 2);
    CHECK(ctx->entries[0].pair.origin == 1);   // tied with origin 20, earlier origin wins
    CHECK(ctx->entries[1].pair.origin == 20);

    config.strategy = Strategy::A;
    CHECK(RafPipeline(kb, config, f, {0}).run(query).values(0, 0) == doctest::Approx(4.2).epsilon(1e-14));
    Matrix expected_a(5, 1);
    expected_a << 0, 2, 9, 4, 6;
    CHECK(f.contexts.back() == expected_a);
    CHECK(f.strategies.back() == "a");

    config.strategy = Strategy::B;
    f.contexts.clear();
    CHECK(RafPipeline(kb, config, f, {0}).run(query).values(0, 0) == doctest::Approx(4.2).epsilon(1e-14));
    REQUIRE(f.contexts.size() == 2);
    CHECK(f.contexts[0].col(0).mean() == doctest::Approx(3.6));
    CHECK(f.contexts[1].col(0).mean() == doctest::Approx(4.8));

    config.strategy = Strategy::C;
    CHECK(RafPipeline(kb, config, f, {0}).run(query).values(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
    Matrix expected_c(8, 1);
    expected_c << 0, 1, 7, 0, 3, 11, 4, 6;
    CHECK(f.contexts.back() == expected_c);
}

TEST_CASE("an empty pool forecasts from the bare lookback") {
    std::mt19937_64 rng(1);
    const auto full = random_base(rng, 80, 10, 3, 2);
    const auto empty = restrict_pool(full, 0.0, 0.85);
    REQUIRE(empty.empty());
    AutoregressiveForecaster ar(2, 1e-3);
    const WindowPair query = full[40];
    for (auto s : {Strategy::A, Strategy::B, Strategy::C}) {
        PipelineConfig config;
        config.strategy = s;
        RafPipeline p(empty, config, ar, {0, 1});
        CHECK_FALSE(p.retrieve(query));
        CHECK(p.run(query).values == ar.forecast({query.lookback, 3, {0, 1}, {}, {}}).values);
    }
}

TEST_CASE("strategies coincide when k = 1") {
    std::mt19937_64 rng(2);
    const auto kb = random_base(rng, 120, 12, 4, 3);
    AutoregressiveForecaster ar(3, 1e-3);
    const Matrix future_values = oracle::random_matrix(rng, 40, 3);
    for (int q = 0; q < 10; ++q) {
        const WindowPair query{future_values.middleRows(q, 12), future_values.middleRows(q + 12, 4), 200 + q};
        for (auto kind : {RetrieverKind::Similarity, RetrieverKind::MutualInformation}) {
            PipelineConfig config;
            config.retriever = kind;
            config.k = 1;
            std::vector<Matrix> out;
            for (auto s : {Strategy::A, Strategy::B, Strategy::C}) {
                config.strategy = s;
                out.push_back(RafPipeline(kb, config, ar, {0, 2}).run(query).values);
            }
            CHECK(out[0] == out[1]);
            CHECK(out[0] == out[2]);
        }
    }
}

TEST_CASE("strategy B averages per-context forecasts") {
    std::mt19937_64 rng(3);
    const auto kb = random_base(rng, 150, 10, 5, 2);
    AutoregressiveForecaster ar(2, 1e-2);
    const Matrix tail = oracle::random_matrix(rng, 15, 2);
    const WindowPair query{tail.topRows(10), tail.bottomRows(5), 500};
    PipelineConfig config;
    config.k = 4;
    const RafPipeline p(kb, config, ar, {1});
    const auto ctx = p.retrieve(query);
    REQUIRE(ctx);
    Matrix sum = Matrix::Zero(5, 1);
    for (const auto& e : ctx->entries) {
        Matrix input(15 + 10, 2);
        input << e.pair.lookback, e.pair.future, query.lookback;
        sum += ar.forecast({input, 5, {1}, {}, {}}).values;
    }
    CHECK((p.run(query).values - sum / 4.0).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("queries overlapping every candidate fall back to bare forecasting") {
    const KnowledgeBase kb({pair({1, 2}, 3, 1), pair({2, 3}, 4, 2), pair({3, 4}, 5, 3)}, 2, 1, 1, {0, 5});
    MeanForecaster f;
    RafPipeline p(kb, {}, f, {0});
    const WindowPair query = pair({2, 3}, 4, 2);
    CHECK_FALSE(p.retrieve(query));
    CHECK(p.run(query).values(0, 0) == 2.5);
}

TEST_CASE("stage failures name the stage") {
    const auto kb = three_sample_base();
    const WindowPair query = pair({4, 6}, 0, 100);

    ThrowingForecaster bad;
    try {
        RafPipeline(kb, {}, bad, {0}).run(query);
        FAIL("expected a pipeline error");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "forecast");
        CHECK(std::string(e.what()).find("diverged") != std::string::npos);
    }

    MeanForecaster tiny;
    tiny.limit = 1;
    PipelineConfig c;
    c.strategy = Strategy::C;
    try {
        RafPipeline(kb, c, tiny, {0}).run(query);
        FAIL("expected a pipeline error");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "augment");
    }

    MeanForecaster f;
    const WindowPair wide{Matrix::Ones(2, 2), Matrix::Ones(1, 2), 100};
    try {
        RafPipeline(kb, {}, f, {0}).run(wide);
        FAIL("expected a pipeline error");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "retrieve");
    }

    PipelineConfig zero;
    zero.k = 0;
    CHECK_THROWS_AS(RafPipeline(kb, zero, f, {0}), ConfigError);
}

TEST_CASE("run_raf_pipeline matches the class") {
    std::mt19937_64 rng(4);
    const auto kb = random_base(rng, 90, 8, 2, 2);
    PersistenceForecaster p;
    const WindowPair query{oracle::random_matrix(rng, 8, 2), Matrix::Zero(2, 2), 300};
    PipelineConfig config;
    CHECK(run_raf_pipeline(kb, query, config, p, {0}).values == RafPipeline(kb, config, p, {0}).run(query).values);
}
