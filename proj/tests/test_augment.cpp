#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "raf/augment.hpp"

using namespace raf;

namespace {

ContextSet make_contexts(std::mt19937_64& rng, int k, Eigen::Index l, Eigen::Index h, Eigen::Index m) {
    ContextSet set;
    set.k = static_cast<std::size_t>(k);
    for (int z = 0; z < k; ++z) {
        WindowPair p{oracle::random_matrix(rng, l, m), oracle::random_matrix(rng, h, m), l - 1 + z * (l + h)};
        set.entries.push_back({p, 1.0 / (z + 1), static_cast<std::size_t>(z)});
    }
    return set;
}

ContextSet constant_contexts(std::vector<double> fills, Eigen::Index l, Eigen::Index h, Eigen::Index m) {
    ContextSet set;
    for (std::size_t z = 0; z < fills.size(); ++z) {
        set.entries.push_back({{Matrix::Constant(l, m, fills[z]), Matrix::Constant(h, m, fills[z]),
                                static_cast<Eigen::Index>(z)}, 0.0, z});
    }
    set.k = fills.size();
    return set;
}

void check_segments(const AugmentedInput& in, Eigen::Index l) {
    REQUIRE_FALSE(in.segments.empty());
    CHECK(in.segments.back().label == SegmentLabel::QueryLookback);
    CHECK(in.segments.back().rows.size() == l);
    Eigen::Index at = 0;
    for (const auto& s : in.segments) {
        CHECK(s.rows.begin == at);
        at = s.rows.end;
    }
    CHECK(at == in.matrix.rows());
}

}  // namespace

TEST_CASE("flatten_context stacks lookback over future") {
    Matrix lb(2, 2), fu(1, 2);
    lb << 1, 2, 3, 4;
    fu << 5, 6;
    const Matrix flat = flatten_context({lb, fu, 1});
    REQUIRE(flat.rows() == 3);
    CHECK(flat.topRows(2) == lb);
    CHECK(flat.bottomRows(1) == fu);
}

TEST_CASE("strategy A averages contexts before prepending") {
    std::mt19937_64 rng(1);
    const Matrix query = oracle::random_matrix(rng, 4, 2);

    const auto two = augment_strategy_a(constant_contexts({2.0, 4.0}, 4, 3, 2), query);
    CHECK(two.matrix.topRows(7).isConstant(3.0));
    CHECK(two.matrix.bottomRows(4) == query);
    CHECK(two.matrix.rows() == 11);
    check_segments(two, 4);

    const auto ctx = make_contexts(rng, 1, 4, 3, 2);
    const auto single = augment_strategy_a(ctx, query);
    CHECK(single.matrix.topRows(7) == flatten_context(ctx.entries[0].pair));

    for (int trial = 0; trial < 20; ++trial) {
        const auto three = make_contexts(rng, 3, 4, 3, 2);
        std::vector<Matrix> flats;
        for (const auto& e : three.entries) flats.push_back(flatten_context(e.pair));
        const auto out = augment_strategy_a(three, query);
        CHECK((out.matrix.topRows(7) - oracle::brute_force_mean(flats)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("strategy A rejects mixed context shapes") {
    std::mt19937_64 rng(2);
    auto ctx = make_contexts(rng, 2, 4, 3, 2);
    ctx.entries[1].pair.future = Matrix::Zero(2, 2);
    CHECK_THROWS_AS(augment_strategy_a(ctx, Matrix::Zero(4, 2)), ShapeError);
    CHECK_THROWS_AS(augment_strategy_a(ContextSet{}, Matrix::Zero(4, 2)), ConfigError);
}

TEST_CASE("strategy B builds one input per context") {
    std::mt19937_64 rng(3);
    const Matrix query = oracle::random_matrix(rng, 5, 3);
    const auto ctx = make_contexts(rng, 3, 5, 2, 3);
    const auto inputs = augment_strategy_b(ctx, query);
    REQUIRE(inputs.size() == 3);
    for (std::size_t z = 0; z < 3; ++z) {
        CHECK(inputs[z].matrix.rows() == 12);
        CHECK(inputs[z].matrix.topRows(7) == flatten_context(ctx.entries[z].pair));
        CHECK(inputs[z].matrix.bottomRows(5) == query);
        check_segments(inputs[z], 5);
    }
}

TEST_CASE("strategy C concatenates contexts in ranked order") {
    std::mt19937_64 rng(4);
    const Matrix query = oracle::random_matrix(rng, 100, 2);
    const auto ctx = make_contexts(rng, 3, 100, 28, 2);
    const auto full = augment_strategy_c(ctx, query);
    CHECK(full.matrix.rows() == 484);
    for (int z = 0; z < 3; ++z) CHECK(full.matrix.middleRows(z * 128, 128) == flatten_context(ctx.entries[z].pair));
    CHECK(full.matrix.bottomRows(100) == query);
    check_segments(full, 100);

    const auto cut = augment_strategy_c(ctx, query, 300);
    CHECK(cut.matrix.rows() == 228);
    CHECK(cut.matrix.topRows(128) == flatten_context(ctx.entries[0].pair));

    CHECK(augment_strategy_c(ctx, query, 100).matrix == query);
    CHECK_THROWS_AS(augment_strategy_c(ctx, query, 99), ConfigError);
}

TEST_CASE("strategies coincide for a single context") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix query = oracle::random_matrix(rng, 6, 3);
        const auto ctx = make_contexts(rng, 1, 6, 2, 3);
        const auto a = augment_strategy_a(ctx, query);
        const auto b = augment_strategy_b(ctx, query);
        const auto c = augment_strategy_c(ctx, query);
        CHECK(a.matrix == b.front().matrix);
        CHECK(a.matrix == c.matrix);
    }
}

TEST_CASE("strategy A ignores repetition and order of contexts") {
    std::mt19937_64 rng(6);
    const Matrix query = oracle::random_matrix(rng, 4, 2);
    auto one = make_contexts(rng, 1, 4, 2, 2);
    ContextSet repeated = one;
    repeated.entries.push_back(one.entries[0]);
    repeated.entries.push_back(one.entries[0]);
    CHECK((augment_strategy_a(repeated, query).matrix - augment_strategy_a(one, query).matrix).cwiseAbs().maxCoeff() <=
          1e-15);

    auto three = make_contexts(rng, 3, 4, 2, 2);
    auto shuffled = three;
    std::reverse(shuffled.entries.begin(), shuffled.entries.end());
    CHECK((augment_strategy_a(three, query).matrix - augment_strategy_a(shuffled, query).matrix).cwiseAbs().maxCoeff() <=
          1e-15);
}

TEST_CASE("average_matrices is the per-cell mean") {
    std::mt19937_64 rng(7);
    std::vector<Matrix> ms;
    for (int i = 0; i < 4; ++i) ms.push_back(oracle::random_matrix(rng, 7, 5));
    CHECK((average_matrices(ms) - oracle::brute_force_mean(ms)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(average_matrices({ms[0]}) == ms[0]);
    CHECK_THROWS_AS(average_matrices({}), ConfigError);
    CHECK_THROWS_AS(average_matrices({ms[0], Matrix::Zero(2, 2)}), ShapeError);
}
