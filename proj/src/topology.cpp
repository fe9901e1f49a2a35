#include "setlstm/topology.hpp"

#include "setlstm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace setlstm {

namespace {

Position from_linear(std::int64_t lin, Index n_cols) {
    return Position{static_cast<Index>(lin / n_cols), static_cast<Index>(lin % n_cols)};
}

std::int64_t to_linear(Position p, Index n_cols) {
    return static_cast<std::int64_t>(p.row) * n_cols + p.col;
}

// Floyd's algorithm: exactly `count` distinct draws from [0, grid).
std::vector<std::int64_t> sample_distinct(std::int64_t grid, std::int64_t count, Rng& rng) {
    std::unordered_set<std::int64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(count) * 2);
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t j = grid - count; j < grid; ++j) {
        const std::int64_t t =
            static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(j) + 1));
        if (chosen.insert(t).second) {
            out.push_back(t);
        } else {
            chosen.insert(j);
            out.push_back(j);
        }
    }
    return out;
}

}  // namespace

std::int64_t er_target_nnz(Index n_in, Index n_out, double epsilon) {
    if (n_in < 1 || n_out < 1) throw ShapeMismatch("er_target_nnz: non-positive shape");
    if (epsilon <= 0.0) throw ShapeMismatch("er_target_nnz: epsilon must be positive");
    const std::int64_t grid = static_cast<std::int64_t>(n_in) * n_out;
    const std::int64_t target =
        static_cast<std::int64_t>(std::llround(epsilon * (static_cast<double>(n_in) + n_out)));
    return std::min(target, grid);
}

ConnectionSet er_init(Index n_in, Index n_out, double epsilon, Rng& rng) {
    const std::int64_t count = er_target_nnz(n_in, n_out, epsilon);
    const std::int64_t grid = static_cast<std::int64_t>(n_in) * n_out;
    std::vector<Position> positions;
    positions.reserve(static_cast<std::size_t>(count));
    if (count == grid) {
        for (Index r = 0; r < n_in; ++r)
            for (Index c = 0; c < n_out; ++c) positions.push_back(Position{r, c});
    } else {
        for (std::int64_t lin : sample_distinct(grid, count, rng))
            positions.push_back(from_linear(lin, n_out));
    }
    return ConnectionSet(n_in, n_out, std::move(positions));
}

double init_bound(Index n_in, Index n_out) {
    return std::sqrt(6.0 / (static_cast<double>(n_in) + n_out));
}

double init_surface_value(std::uint64_t key, Position p, Index n_cols, double bound) {
    const std::uint64_t cell = static_cast<std::uint64_t>(to_linear(p, n_cols));
    for (std::uint64_t salt = 0;; ++salt) {
        const std::uint64_t h = mix64(mix64(key, cell), salt);
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
        const double v = bound * (2.0 * u - 1.0);
        if (v != 0.0) return v;
    }
}

SparseMatrix init_values_keyed(const ConnectionSet& mask, std::uint64_t key) {
    const double bound = init_bound(mask.rows(), mask.cols());
    std::vector<double> values(static_cast<std::size_t>(mask.size()));
    const auto positions = mask.positions();
    for (std::size_t k = 0; k < positions.size(); ++k)
        values[k] = init_surface_value(key, positions[k], mask.cols(), bound);
    return SparseMatrix(std::make_shared<const ConnectionSet>(mask), std::move(values));
}

SparseMatrix init_values(const ConnectionSet& mask, Rng& rng) {
    return init_values_keyed(mask, rng.next_u64());
}

std::pair<SparseMatrix, RewireReport> rewire(const SparseMatrix& w, double zeta,
                                             bool regrow, Rng& rng) {
    const auto positions = w.mask().positions();
    const auto values = w.values();
    const std::size_t n = positions.size();

    std::vector<std::size_t> pos_idx, neg_idx, zero_idx;
    for (std::size_t k = 0; k < n; ++k) {
        if (values[k] > 0.0) pos_idx.push_back(k);
        else if (values[k] < 0.0) neg_idx.push_back(k);
        else zero_idx.push_back(k);
    }

    const auto k_p = static_cast<std::size_t>(std::floor(zeta * static_cast<double>(pos_idx.size())));
    const auto k_n = static_cast<std::size_t>(std::floor(zeta * static_cast<double>(neg_idx.size())));

    // Smallest positives first; entry order breaks value ties by position.
    std::stable_sort(pos_idx.begin(), pos_idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    // "Largest negative" = closest to zero, i.e. greatest value.
    std::stable_sort(neg_idx.begin(), neg_idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

    std::vector<bool> removed(n, false);
    RewireReport report;
    report.nnz_before = static_cast<std::int64_t>(n);
    for (std::size_t k = 0; k < k_p; ++k) removed[pos_idx[k]] = true;
    for (std::size_t k = 0; k < k_n; ++k) removed[neg_idx[k]] = true;
    for (std::size_t k : zero_idx) removed[k] = true;

    for (std::size_t k = 0; k < n; ++k) {
        if (!removed[k]) continue;
        if (values[k] < 0.0) report.removed_negative.push_back(positions[k]);
        else report.removed_positive.push_back(positions[k]);  // zeros counted here
    }

    std::vector<Position> new_positions;
    std::vector<double> new_values;
    new_positions.reserve(n);
    new_values.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!removed[k]) {
            new_positions.push_back(positions[k]);
            new_values.push_back(values[k]);
        }
    }

    if (regrow) {
        const std::int64_t needed = report.removed_count();
        const std::int64_t grid = w.mask().grid_size();
        const Index n_cols = w.cols();
        const double bound = init_bound(w.rows(), w.cols());

        std::unordered_set<std::int64_t> occupied;
        occupied.reserve(new_positions.size() * 2);
        for (const Position& p : new_positions) occupied.insert(to_linear(p, n_cols));

        const std::int64_t free_slots = grid - static_cast<std::int64_t>(new_positions.size());
        std::vector<std::int64_t> added_lin;
        added_lin.reserve(static_cast<std::size_t>(needed));
        if (needed * 2 >= free_slots) {
            // Dense regime: enumerate the complement and draw without
            // replacement (rejection would stall).
            std::vector<std::int64_t> free_list;
            free_list.reserve(static_cast<std::size_t>(free_slots));
            for (std::int64_t lin = 0; lin < grid; ++lin)
                if (!occupied.count(lin)) free_list.push_back(lin);
            for (std::int64_t k = 0; k < needed; ++k) {
                const auto j = static_cast<std::size_t>(
                    rng.uniform_index(static_cast<std::uint64_t>(free_list.size() - k)));
                std::swap(free_list[j], free_list[free_list.size() - 1 - static_cast<std::size_t>(k)]);
                added_lin.push_back(free_list[free_list.size() - 1 - static_cast<std::size_t>(k)]);
            }
        } else {
            while (static_cast<std::int64_t>(added_lin.size()) < needed) {
                const auto lin = static_cast<std::int64_t>(
                    rng.uniform_index(static_cast<std::uint64_t>(grid)));
                if (occupied.insert(lin).second) added_lin.push_back(lin);
            }
        }
        for (std::int64_t lin : added_lin) {
            const Position p = from_linear(lin, n_cols);
            report.added.push_back(p);
            new_positions.push_back(p);
            double v;
            do {
                v = rng.uniform(-bound, bound);
            } while (v == 0.0);
            new_values.push_back(v);
        }
        std::sort(report.added.begin(), report.added.end());
    }

    // Survivors are already sorted; re-sort only when regrowth appended.
    std::vector<std::size_t> order(new_positions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return new_positions[a] < new_positions[b];
    });
    std::vector<Position> sorted_positions(new_positions.size());
    std::vector<double> sorted_values(new_values.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        sorted_positions[k] = new_positions[order[k]];
        sorted_values[k] = new_values[order[k]];
    }

    report.nnz_after = static_cast<std::int64_t>(sorted_positions.size());
    SparseMatrix result(ConnectionSet(w.rows(), w.cols(), std::move(sorted_positions)),
                        std::move(sorted_values));
    return {std::move(result), std::move(report)};
}

double similarity(const ConnectionSet& a, const ConnectionSet& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("similarity: shape mismatch");
    if (a.size() == 0) return 0.0;
    const auto pa = a.positions();
    const auto pb = b.positions();
    std::size_t i = 0, j = 0, common = 0;
    while (i < pa.size() && j < pb.size()) {
        if (pa[i] < pb[j]) ++i;
        else if (pb[j] < pa[i]) ++j;
        else { ++common; ++i; ++j; }
    }
    return static_cast<double>(common) / static_cast<double>(a.size());
}

Mat similarity_matrix(const std::vector<ConnectionSet>& topologies) {
    const auto n = static_cast<Eigen::Index>(topologies.size());
    Mat m(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            m(a, b) = (a == b) ? 1.0
                               : similarity(topologies[static_cast<std::size_t>(a)],
                                            topologies[static_cast<std::size_t>(b)]);
        }
    }
    return m;
}

DegreeStats degree_stats(const ConnectionSet& c) {
    DegreeStats stats;
    stats.row_degree.assign(static_cast<std::size_t>(c.rows()), 0);
    stats.col_degree.assign(static_cast<std::size_t>(c.cols()), 0);
    for (const Position& p : c.positions()) {
        stats.row_degree[static_cast<std::size_t>(p.row)]++;
        stats.col_degree[static_cast<std::size_t>(p.col)]++;
    }
    return stats;
}

}  // namespace setlstm
