#include "setlstm/sparse.hpp"

#include "setlstm/errors.hpp"

#include <algorithm>
#include <string>

namespace setlstm {

namespace {

std::string pos_str(Position p) {
    return "(" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
}

}  // namespace

ConnectionSet::ConnectionSet(Index n_rows, Index n_cols, std::vector<Position> positions)
    : n_rows_(n_rows), n_cols_(n_cols), positions_(std::move(positions)) {
    if (n_rows_ <= 0 || n_cols_ <= 0)
        throw ShapeMismatch("ConnectionSet: non-positive shape");
    for (const Position& p : positions_) {
        if (p.row < 0 || p.row >= n_rows_ || p.col < 0 || p.col >= n_cols_)
            throw OutOfBounds("ConnectionSet: position " + pos_str(p) + " out of bounds");
    }
    std::sort(positions_.begin(), positions_.end());
    auto dup = std::adjacent_find(positions_.begin(), positions_.end());
    if (dup != positions_.end())
        throw DuplicatePosition("ConnectionSet: duplicate position " + pos_str(*dup));
}

bool ConnectionSet::contains(Position p) const {
    return std::binary_search(positions_.begin(), positions_.end(), p);
}

SparseMatrix::SparseMatrix(std::shared_ptr<const ConnectionSet> mask,
                           std::vector<double> values)
    : mask_(std::move(mask)), values_(std::move(values)) {
    if (static_cast<std::int64_t>(values_.size()) != mask_->size())
        throw ShapeMismatch("SparseMatrix: values/mask length mismatch");
}

SparseMatrix::SparseMatrix(ConnectionSet mask, std::vector<double> values)
    : SparseMatrix(std::make_shared<const ConnectionSet>(std::move(mask)),
                   std::move(values)) {}

SparseMatrix SparseMatrix::from_triplets(Index n_rows, Index n_cols,
                                         std::span<const Triplet> triplets) {
    std::vector<std::size_t> order(triplets.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return Position{triplets[a].row, triplets[a].col} <
               Position{triplets[b].row, triplets[b].col};
    });

    std::vector<Position> positions(triplets.size());
    std::vector<double> values(triplets.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Triplet& t = triplets[order[k]];
        positions[k] = Position{t.row, t.col};
        values[k] = t.value;
    }
    // ConnectionSet rejects out-of-bounds and duplicate positions.
    return SparseMatrix(ConnectionSet(n_rows, n_cols, std::move(positions)),
                        std::move(values));
}

Mat densify(const SparseMatrix& w) {
    Mat d = Mat::Zero(w.rows(), w.cols());
    for (std::size_t k = 0; k < static_cast<std::size_t>(w.nnz()); ++k) {
        const Position p = w.position(k);
        d(p.row, p.col) = w.value(k);
    }
    return d;
}

Mat dense_times_sparse(const Mat& x, const SparseMatrix& w) {
    if (x.cols() != w.rows())
        throw ShapeMismatch("dense_times_sparse: inner dimensions " +
                            std::to_string(x.cols()) + " vs " + std::to_string(w.rows()));
    Mat y = Mat::Zero(x.rows(), w.cols());
    for (std::size_t k = 0; k < static_cast<std::size_t>(w.nnz()); ++k) {
        const Position p = w.position(k);
        y.col(p.col) += w.value(k) * x.col(p.row);
    }
    return y;
}

Mat dense_times_sparse_transposed(const Mat& dy, const SparseMatrix& w) {
    if (dy.cols() != w.cols())
        throw ShapeMismatch("dense_times_sparse_transposed: dimensions " +
                            std::to_string(dy.cols()) + " vs " + std::to_string(w.cols()));
    Mat dx = Mat::Zero(dy.rows(), w.rows());
    for (std::size_t k = 0; k < static_cast<std::size_t>(w.nnz()); ++k) {
        const Position p = w.position(k);
        dx.col(p.row) += w.value(k) * dy.col(p.col);
    }
    return dx;
}

void masked_grad_accumulate(const Mat& x, const Mat& dy, const ConnectionSet& mask,
                            std::span<double> out) {
    if (x.cols() != mask.rows() || dy.cols() != mask.cols() || x.rows() != dy.rows())
        throw ShapeMismatch("masked_grad: activation shapes do not match mask");
    if (out.size() != static_cast<std::size_t>(mask.size()))
        throw ShapeMismatch("masked_grad: output length does not match mask");
    const auto positions = mask.positions();
    for (std::size_t k = 0; k < positions.size(); ++k) {
        const Position p = positions[k];
        out[k] += x.col(p.row).dot(dy.col(p.col));
    }
}

SparseMatrix masked_grad(const Mat& x, const Mat& dy, const ConnectionSet& mask) {
    std::vector<double> values(static_cast<std::size_t>(mask.size()), 0.0);
    masked_grad_accumulate(x, dy, mask, values);
    return SparseMatrix(std::make_shared<const ConnectionSet>(mask), std::move(values));
}

std::vector<std::int64_t> row_offsets(const ConnectionSet& mask) {
    std::vector<std::int64_t> offsets(static_cast<std::size_t>(mask.rows()) + 1, 0);
    for (const Position& p : mask.positions()) offsets[static_cast<std::size_t>(p.row) + 1]++;
    for (std::size_t r = 1; r < offsets.size(); ++r) offsets[r] += offsets[r - 1];
    return offsets;
}

}  // namespace setlstm
