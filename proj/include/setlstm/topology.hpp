#pragma once

#include "setlstm/rng.hpp"
#include "setlstm/sparse.hpp"
#include "setlstm/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace setlstm {

// Sparsity hyperparameters: epsilon scales the connection budget,
// zeta is the per-epoch rewire fraction.
struct SparsityHyper {
    double epsilon = 10.0;
    double zeta = 0.3;
};

// Per-layer record of one rewiring event. Exact-zero entries are removed
// unconditionally and reported with the removed positives.
struct RewireReport {
    std::vector<Position> removed_positive;
    std::vector<Position> removed_negative;
    std::vector<Position> added;
    std::int64_t nnz_before = 0;
    std::int64_t nnz_after = 0;

    std::int64_t removed_count() const {
        return static_cast<std::int64_t>(removed_positive.size() + removed_negative.size());
    }
    bool empty() const { return removed_count() == 0 && added.empty(); }
};

// Connection budget of an Erdos-Renyi sparse layer: epsilon * (n_in + n_out),
// clamped to dense.
std::int64_t er_target_nnz(Index n_in, Index n_out, double epsilon);

// Draws exactly er_target_nnz distinct positions uniformly without
// replacement. Deterministic given the rng state.
ConnectionSet er_init(Index n_in, Index n_out, double epsilon, Rng& rng);

// Weight-init scale: uniform on [-L, L] with L = sqrt(6 / (n_in + n_out)).
double init_bound(Index n_in, Index n_out);

// Value of the position-keyed init surface at (row, col). The surface is a
// deterministic function of the key, so the initialization of any topology
// over the grid can be reproduced later from the key alone (exact zeros are
// re-drawn). Used for fixed-topology same-initialization runs.
double init_surface_value(std::uint64_t key, Position p, Index n_cols, double bound);

// Fills each mask position from a fresh init surface keyed off `rng`.
SparseMatrix init_values(const ConnectionSet& mask, Rng& rng);
SparseMatrix init_values_keyed(const ConnectionSet& mask, std::uint64_t key);

// One SET evolution step: drop the floor(zeta*|P|) smallest positive
// weights, the floor(zeta*|N|) negative weights closest to zero, and every
// exact zero; if regrow, add the same number of fresh connections at
// unoccupied positions with init-distribution values. Ties break toward the
// lower (row, col) position.
std::pair<SparseMatrix, RewireReport> rewire(const SparseMatrix& w, double zeta,
                                             bool regrow, Rng& rng);

// S_ab = |a intersect b| / |a|; 0 when a is empty.
double similarity(const ConnectionSet& a, const ConnectionSet& b);

// M[a][b] = similarity(a, b) for every ordered pair.
Mat similarity_matrix(const std::vector<ConnectionSet>& topologies);

// Exact per-row and per-column connection counts.
struct DegreeStats {
    std::vector<std::int64_t> row_degree;
    std::vector<std::int64_t> col_degree;
};

DegreeStats degree_stats(const ConnectionSet& c);

}  // namespace setlstm
