#include "setlstm/errors.hpp"
#include "setlstm/rng.hpp"
#include "setlstm/sparse.hpp"
#include "setlstm/topology.hpp"

#include <doctest.h>

#include <vector>

using namespace setlstm;

namespace {

SparseMatrix sm(Index rows, Index cols, std::vector<Triplet> triplets) {
    return SparseMatrix::from_triplets(rows, cols, triplets);
}

Mat random_dense(Index rows, Index cols, Rng& rng) {
    Mat m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    return m;
}

SparseMatrix random_sparse(Index rows, Index cols, double density, Rng& rng) {
    std::vector<Triplet> triplets;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            if (rng.uniform(0.0, 1.0) < density)
                triplets.push_back(Triplet{i, j, rng.uniform(-2.0, 2.0)});
    return sm(rows, cols, std::move(triplets));
}

}  // namespace

TEST_CASE("from_triplets: empty, identity, duplicates, bounds") {
    const SparseMatrix empty = sm(2, 2, {});
    CHECK(empty.nnz() == 0);

    const SparseMatrix id = sm(2, 2, {{0, 0, 1.0}, {1, 1, 1.0}});
    const Mat d = densify(id);
    CHECK(d(0, 0) == 1.0);
    CHECK(d(0, 1) == 0.0);
    CHECK(d(1, 0) == 0.0);
    CHECK(d(1, 1) == 1.0);

    CHECK_THROWS_AS(sm(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}), DuplicatePosition);
    CHECK_THROWS_AS(sm(2, 2, {{2, 0, 1.0}}), OutOfBounds);
    CHECK_THROWS_AS(sm(2, 2, {{0, -1, 1.0}}), OutOfBounds);
}

TEST_CASE("from_triplets canonicalizes unsorted input") {
    const SparseMatrix w = sm(3, 3, {{2, 1, 3.0}, {0, 2, 1.0}, {2, 0, 2.0}});
    CHECK(w.position(0) == Position{0, 2});
    CHECK(w.position(1) == Position{2, 0});
    CHECK(w.position(2) == Position{2, 1});
    CHECK(w.value(1) == 2.0);
}

TEST_CASE("densify: zero case and single entry") {
    CHECK(densify(sm(2, 2, {})).isZero(0.0));
    const Mat d = densify(sm(2, 2, {{0, 1, 3.5}}));
    CHECK(d(0, 1) == 3.5);
    CHECK(d.cwiseAbs().sum() == 3.5);
}

TEST_CASE("densify round-trip reproduces the entry set exactly") {
    Rng rng(101);
    const SparseMatrix w = random_sparse(5, 4, 0.35, rng);
    const Mat d = densify(w);
    std::vector<Triplet> back;
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 4; ++j)
            if (d(i, j) != 0.0) back.push_back(Triplet{i, j, d(i, j)});
    const SparseMatrix w2 = sm(5, 4, std::move(back));
    REQUIRE(w2.nnz() == w.nnz());
    for (std::size_t k = 0; k < static_cast<std::size_t>(w.nnz()); ++k) {
        CHECK(w2.position(k) == w.position(k));
        CHECK(w2.value(k) == w.value(k));
    }
}

TEST_CASE("dense_times_sparse: trivial cases") {
    Rng rng(7);
    const Mat x = random_dense(3, 2, rng);
    CHECK(dense_times_sparse(x, sm(2, 4, {})).isZero(0.0));

    Mat row(1, 2);
    row << 1.0, 2.0;
    const Mat y = dense_times_sparse(row, sm(2, 2, {{0, 0, 1.0}, {1, 1, 1.0}}));
    CHECK(y(0, 0) == 1.0);
    CHECK(y(0, 1) == 2.0);

    Mat x2(2, 2);
    x2 << 1, 2, 3, 4;
    const Mat y2 = dense_times_sparse(x2, sm(2, 2, {{1, 0, 5.0}}));
    CHECK(y2(0, 0) == 10.0);
    CHECK(y2(0, 1) == 0.0);
    CHECK(y2(1, 0) == 20.0);
    CHECK(y2(1, 1) == 0.0);

    CHECK_THROWS_AS(dense_times_sparse(x2, sm(3, 2, {})), ShapeMismatch);
}

TEST_CASE("dense_times_sparse_transposed: trivial cases") {
    Mat dy(1, 2);
    dy << 1.0, 1.0;
    CHECK(dense_times_sparse_transposed(dy, sm(3, 2, {})).isZero(0.0));

    const Mat dx = dense_times_sparse_transposed(dy, sm(2, 2, {{1, 0, 5.0}}));
    CHECK(dx(0, 0) == 0.0);
    CHECK(dx(0, 1) == 5.0);

    const Mat same = dense_times_sparse_transposed(dy, sm(2, 2, {{0, 0, 1.0}, {1, 1, 1.0}}));
    CHECK(same == dy);
}

TEST_CASE("kernels agree with the dense oracle on random inputs") {
    Rng rng(2024);
    for (double density : {0.1, 0.5, 1.0}) {
        for (int rep = 0; rep < 10; ++rep) {
            const Index b = static_cast<Index>(1 + rng.uniform_index(6));
            const Index n_in = static_cast<Index>(1 + rng.uniform_index(16));
            const Index n_out = static_cast<Index>(1 + rng.uniform_index(16));
            const Mat x = random_dense(b, n_in, rng);
            const SparseMatrix w = random_sparse(n_in, n_out, density, rng);

            const Mat y = dense_times_sparse(x, w);
            CHECK((y - x * densify(w)).cwiseAbs().maxCoeff() <= 1e-12);

            const Mat dy = random_dense(b, n_out, rng);
            const Mat dx = dense_times_sparse_transposed(dy, w);
            CHECK((dx - dy * densify(w).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("masked_grad: trivial and derived cases") {
    Mat x1(1, 1), dy1(1, 1);
    x1 << 2.0;
    dy1 << 3.0;

    const SparseMatrix empty_grad = masked_grad(x1, dy1, ConnectionSet(1, 1, {}));
    CHECK(empty_grad.nnz() == 0);

    const SparseMatrix scalar = masked_grad(x1, dy1, ConnectionSet(1, 1, {{0, 0}}));
    CHECK(scalar.value(0) == 6.0);

    Rng rng(55);
    const Mat x = random_dense(4, 2, rng);
    const Mat dy = random_dense(4, 2, rng);
    const Mat dense_grad = x.transpose() * dy;

    const ConnectionSet full(2, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const SparseMatrix g_full = masked_grad(x, dy, full);
    CHECK((densify(g_full) - dense_grad).cwiseAbs().maxCoeff() <= 1e-12);

    const ConnectionSet half(2, 2, {{0, 1}, {1, 0}});
    const SparseMatrix g_half = masked_grad(x, dy, half);
    CHECK(g_half.value(0) == doctest::Approx(dense_grad(0, 1)).epsilon(1e-12));
    CHECK(g_half.value(1) == doctest::Approx(dense_grad(1, 0)).epsilon(1e-12));
}

TEST_CASE("kernels are read-only on W") {
    Rng rng(9);
    const SparseMatrix w = random_sparse(6, 6, 0.4, rng);
    const std::vector<double> before(w.values().begin(), w.values().end());
    const Mat x = random_dense(3, 6, rng);
    (void)dense_times_sparse(x, w);
    (void)dense_times_sparse_transposed(random_dense(3, 6, rng), w);
    (void)densify(w);
    CHECK(w.nnz() == static_cast<std::int64_t>(before.size()));
    for (std::size_t k = 0; k < before.size(); ++k) CHECK(w.value(k) == before[k]);
}

TEST_CASE("row_offsets addresses each row's entry run") {
    const SparseMatrix w = sm(4, 3, {{0, 1, 1.0}, {2, 0, 2.0}, {2, 2, 3.0}, {3, 1, 4.0}});
    const auto offsets = row_offsets(w.mask());
    REQUIRE(offsets.size() == 5);
    CHECK(offsets[0] == 0);
    CHECK(offsets[1] == 1);  // row 0 has one entry
    CHECK(offsets[2] == 1);  // row 1 empty
    CHECK(offsets[3] == 3);  // row 2 has two
    CHECK(offsets[4] == 4);
}
