#pragma once

#include "setlstm/types.hpp"

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace setlstm {

struct Position {
    Index row;
    Index col;
    friend auto operator<=>(const Position&, const Position&) = default;
};

struct Triplet {
    Index row;
    Index col;
    double value;
};

// A set of (row, col) connections over an n_rows x n_cols grid, kept in
// canonical form: sorted by (row, col), unique, in-bounds. The unit of
// topology comparison and the mask of every sparse weight matrix.
class ConnectionSet {
public:
    ConnectionSet() = default;

    // Canonicalizes (sorts) the given positions; throws OutOfBounds or
    // DuplicatePosition if the invariants cannot be met.
    ConnectionSet(Index n_rows, Index n_cols, std::vector<Position> positions);

    Index rows() const { return n_rows_; }
    Index cols() const { return n_cols_; }
    std::int64_t size() const { return static_cast<std::int64_t>(positions_.size()); }
    std::span<const Position> positions() const { return positions_; }
    const Position& operator[](std::size_t k) const { return positions_[k]; }

    bool contains(Position p) const;

    std::int64_t grid_size() const {
        return static_cast<std::int64_t>(n_rows_) * n_cols_;
    }

    bool same_shape(const ConnectionSet& other) const {
        return n_rows_ == other.n_rows_ && n_cols_ == other.n_cols_;
    }

    bool operator==(const ConnectionSet& other) const {
        return n_rows_ == other.n_rows_ && n_cols_ == other.n_cols_ &&
               positions_ == other.positions_;
    }

private:
    Index n_rows_ = 0;
    Index n_cols_ = 0;
    std::vector<Position> positions_;
};

// A 2-D weight tensor stored as an explicit set of connections: an
// immutable shared mask plus one value per stored position. Canonical
// (row, col) order is the stored order; kernels sum in stored order so
// runs are bitwise reproducible.
class SparseMatrix {
public:
    SparseMatrix() : mask_(std::make_shared<ConnectionSet>()) {}

    static SparseMatrix from_triplets(Index n_rows, Index n_cols,
                                      std::span<const Triplet> triplets);

    SparseMatrix(std::shared_ptr<const ConnectionSet> mask, std::vector<double> values);
    SparseMatrix(ConnectionSet mask, std::vector<double> values);

    Index rows() const { return mask_->rows(); }
    Index cols() const { return mask_->cols(); }
    std::int64_t nnz() const { return mask_->size(); }

    const ConnectionSet& mask() const { return *mask_; }
    std::shared_ptr<const ConnectionSet> mask_ptr() const { return mask_; }

    std::span<const double> values() const { return values_; }
    // Value mutation only; positions are immutable by construction.
    std::span<double> values_mut() { return values_; }

    Position position(std::size_t k) const { return (*mask_)[k]; }
    double value(std::size_t k) const { return values_[k]; }

    bool same_mask(const SparseMatrix& other) const {
        return mask_ == other.mask_ || *mask_ == *other.mask_;
    }

private:
    std::shared_ptr<const ConnectionSet> mask_;
    std::vector<double> values_;
};

// ---- kernels ----
// All kernels are read-only on W and reentrant.

Mat densify(const SparseMatrix& w);

// Y = X . W with X dense (B x n_in), W sparse (n_in x n_out).
Mat dense_times_sparse(const Mat& x, const SparseMatrix& w);

// dX = dY . W^T with dY dense (B x n_out); the backward-pass companion.
Mat dense_times_sparse_transposed(const Mat& dy, const SparseMatrix& w);

// Gradient of a scalar loss w.r.t. a sparse weight, evaluated only at the
// mask positions: value(i,j) = sum_b X[b,i] * dY[b,j].
SparseMatrix masked_grad(const Mat& x, const Mat& dy, const ConnectionSet& mask);

// Accumulating variant used by BPTT: adds the masked gradient into `out`,
// which must be aligned with `mask`.
void masked_grad_accumulate(const Mat& x, const Mat& dy, const ConnectionSet& mask,
                            std::span<double> out);

// Row offsets into the canonical entry order: entries of row r live in
// [offsets[r], offsets[r+1]). Used by the embedding gather.
std::vector<std::int64_t> row_offsets(const ConnectionSet& mask);

}  // namespace setlstm
