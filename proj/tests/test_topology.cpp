#include "setlstm/errors.hpp"
#include "setlstm/topology.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace setlstm;

namespace {

// Independent selection oracle: which entries should a rewiring remove.
// Sorts copies with explicit (value, position) keys; shares nothing with
// the implementation's in-place index shuffling.
struct RemovalOracle {
    std::set<Position> expected;

    explicit RemovalOracle(const SparseMatrix& w, double zeta) {
        std::vector<std::pair<double, Position>> pos, neg;
        for (std::size_t k = 0; k < static_cast<std::size_t>(w.nnz()); ++k) {
            const double v = w.value(k);
            if (v > 0.0) pos.push_back({v, w.position(k)});
            else if (v < 0.0) neg.push_back({v, w.position(k)});
            else expected.insert(w.position(k));
        }
        std::sort(pos.begin(), pos.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first < b.first : a.second < b.second;
        });
        std::sort(neg.begin(), neg.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        const auto k_p = static_cast<std::size_t>(std::floor(zeta * static_cast<double>(pos.size())));
        const auto k_n = static_cast<std::size_t>(std::floor(zeta * static_cast<double>(neg.size())));
        for (std::size_t k = 0; k < k_p; ++k) expected.insert(pos[k].second);
        for (std::size_t k = 0; k < k_n; ++k) expected.insert(neg[k].second);
    }
};

std::set<Position> reported_removed(const RewireReport& report) {
    std::set<Position> out(report.removed_positive.begin(), report.removed_positive.end());
    out.insert(report.removed_negative.begin(), report.removed_negative.end());
    return out;
}

}  // namespace

TEST_CASE("er_init draws the exact connection budget") {
    Rng rng(1);
    const ConnectionSet big = er_init(20000, 256, 10.0, rng);
    CHECK(big.size() == 202560);

    const ConnectionSet clamped = er_init(4, 4, 100.0, rng);
    CHECK(clamped.size() == 16);

    const ConnectionSet cell = er_init(256, 256, 10.0, rng);
    CHECK(cell.size() == 5120);
    CHECK(static_cast<double>(cell.size()) / cell.grid_size() ==
          doctest::Approx(0.078125));
}

TEST_CASE("er_init is deterministic given the seed") {
    Rng a(99), b(99);
    const ConnectionSet s1 = er_init(50, 40, 5.0, a);
    const ConnectionSet s2 = er_init(50, 40, 5.0, b);
    CHECK(s1 == s2);
}

TEST_CASE("init_values: bounds, no zeros, statistical mean") {
    Rng rng(3);
    const ConnectionSet empty(4, 4, {});
    CHECK(init_values(empty, rng).nnz() == 0);

    const ConnectionSet mask = er_init(256, 256, 20.0, rng);  // 10240 positions
    const SparseMatrix w = init_values(mask, rng);
    const double bound = init_bound(256, 256);
    double sum = 0.0;
    for (double v : w.values()) {
        CHECK(std::abs(v) <= bound);
        CHECK(v != 0.0);
        sum += v;
    }
    // mean of n uniform draws: sd = bound / sqrt(3 n); assert within 3 sd
    const double n = static_cast<double>(w.nnz());
    const double sigma = bound / std::sqrt(3.0 * n);
    CHECK(std::abs(sum / n) <= 3.0 * sigma);
}

TEST_CASE("init surface is position-keyed and reproducible") {
    Rng rng(4);
    const ConnectionSet mask = er_init(32, 32, 4.0, rng);
    const SparseMatrix a = init_values_keyed(mask, 123456);
    const SparseMatrix b = init_values_keyed(mask, 123456);
    for (std::size_t k = 0; k < static_cast<std::size_t>(a.nnz()); ++k)
        CHECK(a.value(k) == b.value(k));
    // the surface value is independent of which other positions exist
    const double bound = init_bound(32, 32);
    CHECK(a.value(3) == init_surface_value(123456, a.position(3), 32, bound));
}

TEST_CASE("rewire: hand-worked selection example") {
    // values {0.5, 0.01, 0.03, -0.02, -0.9}: k_p = floor(0.5*3) = 1 removes
    // 0.01; k_n = floor(0.5*2) = 1 removes -0.02 (negative closest to zero)
    const SparseMatrix w = SparseMatrix::from_triplets(
        5, 5,
        std::vector<Triplet>{
            {0, 0, 0.5}, {1, 1, 0.01}, {2, 2, 0.03}, {3, 3, -0.02}, {4, 4, -0.9}});
    Rng rng(11);
    const auto [rewired, report] = rewire(w, 0.5, true, rng);

    REQUIRE(report.removed_positive.size() == 1);
    CHECK(report.removed_positive[0] == Position{1, 1});
    REQUIRE(report.removed_negative.size() == 1);
    CHECK(report.removed_negative[0] == Position{3, 3});
    CHECK(report.added.size() == 2);
    CHECK(rewired.nnz() == 5);
    CHECK(report.nnz_before == 5);
    CHECK(report.nnz_after == 5);

    // survivors keep their values
    CHECK(rewired.mask().contains(Position{0, 0}));
    CHECK(rewired.mask().contains(Position{2, 2}));
    CHECK(rewired.mask().contains(Position{4, 4}));
}

TEST_CASE("rewire: zeta=0 with no zeros is a no-op") {
    const SparseMatrix w = SparseMatrix::from_triplets(
        3, 3, std::vector<Triplet>{{0, 0, 1.0}, {1, 2, -2.0}});
    Rng rng(5);
    const auto [rewired, report] = rewire(w, 0.0, true, rng);
    CHECK(report.empty());
    CHECK(rewired.nnz() == 2);
    CHECK(rewired.value(0) == 1.0);
    CHECK(rewired.value(1) == -2.0);
}

TEST_CASE("rewire: zeta=1 without regrowth empties the matrix") {
    const SparseMatrix w = SparseMatrix::from_triplets(
        3, 3, std::vector<Triplet>{{0, 0, 1.0}, {1, 1, -1.0}, {2, 2, 2.0}});
    Rng rng(6);
    const auto [rewired, report] = rewire(w, 1.0, false, rng);
    CHECK(rewired.nnz() == 0);
    CHECK(report.nnz_after == 0);
    CHECK(report.added.empty());
}

TEST_CASE("rewire removes exact zeros unconditionally, reported as positives") {
    const SparseMatrix w = SparseMatrix::from_triplets(
        3, 3, std::vector<Triplet>{{0, 0, 0.0}, {1, 1, 3.0}});
    Rng rng(8);
    const auto [rewired, report] = rewire(w, 0.0, true, rng);
    REQUIRE(report.removed_positive.size() == 1);
    CHECK(report.removed_positive[0] == Position{0, 0});
    CHECK(report.added.size() == 1);
    CHECK(rewired.nnz() == 2);
    CHECK(rewired.mask().contains(Position{1, 1}));
}

TEST_CASE("rewire properties against the independent sort oracle") {
    Rng rng(77);
    for (int rep = 0; rep < 25; ++rep) {
        const Index rows = static_cast<Index>(2 + rng.uniform_index(12));
        const Index cols = static_cast<Index>(2 + rng.uniform_index(12));
        const double epsilon = 1.0 + rng.uniform(0.0, 3.0);
        const ConnectionSet mask = er_init(rows, cols, epsilon, rng);
        const SparseMatrix w = init_values(mask, rng);
        const double zeta = rng.uniform(0.0, 1.0);
        const bool regrow = rep % 2 == 0;

        const RemovalOracle expected(w, zeta);
        const auto [rewired, report] = rewire(w, zeta, regrow, rng);

        CHECK(reported_removed(report) == expected.expected);
        if (regrow) {
            CHECK(rewired.nnz() == w.nnz());
            CHECK(report.added.size() == expected.expected.size());
        } else {
            CHECK(rewired.nnz() ==
                  w.nnz() - static_cast<std::int64_t>(expected.expected.size()));
        }

        // regrown positions never collide with survivors (canonical form
        // already guarantees uniqueness and bounds)
        for (const Position& p : report.added) {
            const bool was_surviving = w.mask().contains(p) && !expected.expected.count(p);
            CHECK(!was_surviving);
        }
    }
}

TEST_CASE("similarity: trivial and derived cases") {
    const ConnectionSet a(3, 3, {{0, 0}, {1, 1}});
    const ConnectionSet b(3, 3, {{1, 1}, {2, 2}});
    const ConnectionSet disjoint(3, 3, {{0, 1}, {0, 2}});
    const ConnectionSet empty(3, 3, {});

    CHECK(similarity(a, a) == 1.0);
    CHECK(similarity(a, disjoint) == 0.0);
    CHECK(similarity(a, b) == 0.5);
    CHECK(similarity(empty, a) == 0.0);
    CHECK_THROWS_AS(similarity(a, ConnectionSet(4, 3, {})), ShapeMismatch);
}

TEST_CASE("similarity invariants over random sets") {
    Rng rng(303);
    for (int rep = 0; rep < 20; ++rep) {
        Rng ra(rng.next_u64()), rb(rng.next_u64());
        const ConnectionSet a = er_init(16, 16, 1.0 + rng.uniform(0.0, 4.0), ra);
        const ConnectionSet b = er_init(16, 16, 1.0 + rng.uniform(0.0, 4.0), rb);
        const double s_ab = similarity(a, b);
        const double s_ba = similarity(b, a);
        CHECK(s_ab >= 0.0);
        CHECK(s_ab <= 1.0);
        // |a| S_ab = n_ab = |b| S_ba
        CHECK(static_cast<double>(a.size()) * s_ab ==
              doctest::Approx(static_cast<double>(b.size()) * s_ba).epsilon(1e-12));
    }
}

TEST_CASE("similarity_matrix: diagonal, disjoint, symmetry at equal cardinality") {
    const ConnectionSet single(2, 2, {{0, 0}});
    const Mat one = similarity_matrix({single});
    CHECK(one.rows() == 1);
    CHECK(one(0, 0) == 1.0);

    const Mat two = similarity_matrix(
        {ConnectionSet(2, 2, {{0, 0}}), ConnectionSet(2, 2, {{1, 1}})});
    CHECK(two(0, 1) == 0.0);
    CHECK(two(1, 0) == 0.0);
    CHECK(two(0, 0) == 1.0);
    CHECK(two(1, 1) == 1.0);

    Rng rng(404);
    std::vector<ConnectionSet> sets;
    for (int k = 0; k < 4; ++k) {
        Rng r(rng.next_u64());
        sets.push_back(er_init(12, 12, 3.0, r));  // equal n_W each
    }
    const Mat m = similarity_matrix(sets);
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("random er_init pairs sit at the chance-overlap baseline") {
    // 50 independent pairs of equal-budget topologies: the observed mean
    // similarity must be within +-30% of n_W / S.
    Rng rng(520);
    const Index n = 64;
    const double epsilon = 10.0;
    const double n_w = static_cast<double>(er_target_nnz(n, n, epsilon));
    const double baseline = n_w / static_cast<double>(n * n);
    double total = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        Rng ra(rng.next_u64()), rb(rng.next_u64());
        total += similarity(er_init(n, n, epsilon, ra), er_init(n, n, epsilon, rb));
    }
    const double mean = total / 50.0;
    CHECK(mean >= 0.7 * baseline);
    CHECK(mean <= 1.3 * baseline);
}

TEST_CASE("degree_stats: trivial cases and the ER sampling law") {
    const DegreeStats empty = degree_stats(ConnectionSet(3, 4, {}));
    for (std::int64_t d : empty.row_degree) CHECK(d == 0);
    for (std::int64_t d : empty.col_degree) CHECK(d == 0);

    const DegreeStats id = degree_stats(ConnectionSet(4, 4, {{0, 0}, {1, 1}, {2, 2}, {3, 3}}));
    for (std::int64_t d : id.row_degree) CHECK(d == 1);
    for (std::int64_t d : id.col_degree) CHECK(d == 1);

    Rng rng(21);
    const ConnectionSet er = er_init(256, 256, 10.0, rng);
    const DegreeStats stats = degree_stats(er);
    std::int64_t sum = 0;
    double sq = 0.0;
    for (std::int64_t d : stats.row_degree) {
        sum += d;
        const double dev = static_cast<double>(d) - 20.0;
        sq += dev * dev;
    }
    CHECK(sum == er.size());  // sum of row degrees = nnz
    const double mean = static_cast<double>(sum) / 256.0;
    CHECK(mean == 20.0);  // 5120 / 256 exactly
    const double sd = std::sqrt(sq / 256.0);
    // binomial-like concentration around the mean
    CHECK(sd > 2.0);
    CHECK(sd < 8.0);
}
