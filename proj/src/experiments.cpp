#include "setlstm/experiments.hpp"

#include "setlstm/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace setlstm {

namespace {

double mean_offdiag(const Mat& m) {
    const auto n = m.rows();
    if (n < 2) return 0.0;
    double sum = 0.0;
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            if (a != b) sum += m(a, b);
    return sum / static_cast<double>(n * (n - 1));
}

// Runs jobs-wide over an index range; results land by index so the merge
// order is fixed. The first exception wins and is rethrown on the caller.
void parallel_for_index(int count, int jobs, const std::function<void(int)>& body) {
    const int workers = std::max(1, std::min(jobs, count));
    if (workers == 1) {
        for (int k = 0; k < count; ++k) body(k);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int k = next.fetch_add(1);
                if (k >= count) return;
                try {
                    body(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

Checkpoint run_trial(const TrainConfig& base, std::uint64_t trial_seed, const Corpus& corpus) {
    TrainConfig config = base;
    config.seed = trial_seed;
    PreparedData data = prepare_data(corpus, config);
    return train(config, data.train, data.test);
}

}  // namespace

double SimilarityResult::mean_offdiag_cells() const { return mean_offdiag(cells); }
double SimilarityResult::mean_offdiag_embedding() const { return mean_offdiag(embedding); }

SimilarityResult run_similarity_experiment(const TrainConfig& config, const Corpus& corpus,
                                           int n_trials, int jobs) {
    if (n_trials < 2) throw ConfigError("similarity experiment needs at least 2 trials");

    std::vector<BestTopology> best(static_cast<std::size_t>(n_trials));
    std::vector<double> accuracies(static_cast<std::size_t>(n_trials));
    parallel_for_index(n_trials, jobs, [&](int trial) {
        Checkpoint ckpt = run_trial(config, mix64(config.seed, static_cast<std::uint64_t>(trial)),
                                    corpus);
        best[static_cast<std::size_t>(trial)] = ckpt.best;
        accuracies[static_cast<std::size_t>(trial)] = ckpt.best.test_accuracy;
    });

    SimilarityResult result;
    result.trial_accuracies = std::move(accuracies);

    // Cells: mean of the 8 per-gate similarity matrices (embedding is layer 0
    // in the canonical order, gates are layers 1..8).
    result.cells = Mat::Zero(n_trials, n_trials);
    for (std::size_t l = 1; l < kSparseLayerCount; ++l) {
        std::vector<ConnectionSet> gate_masks;
        gate_masks.reserve(static_cast<std::size_t>(n_trials));
        for (int t = 0; t < n_trials; ++t)
            gate_masks.push_back(best[static_cast<std::size_t>(t)].masks[l]);
        result.cells += similarity_matrix(gate_masks);
    }
    result.cells /= 8.0;

    std::vector<ConnectionSet> embedding_masks;
    embedding_masks.reserve(static_cast<std::size_t>(n_trials));
    for (int t = 0; t < n_trials; ++t)
        embedding_masks.push_back(best[static_cast<std::size_t>(t)].masks[0]);
    result.embedding = similarity_matrix(embedding_masks);

    // Chance-overlap baseline n_W / S per layer group, with n_W averaged
    // over trials (a trial whose best epoch is the final one carries the
    // pruned, regrowth-free mask).
    double cells_baseline = 0.0;
    double embedding_baseline = 0.0;
    for (int t = 0; t < n_trials; ++t) {
        for (std::size_t l = 1; l < kSparseLayerCount; ++l) {
            const ConnectionSet& mask = best[static_cast<std::size_t>(t)].masks[l];
            cells_baseline +=
                static_cast<double>(mask.size()) / static_cast<double>(mask.grid_size());
        }
        const ConnectionSet& emb = best[static_cast<std::size_t>(t)].masks[0];
        embedding_baseline +=
            static_cast<double>(emb.size()) / static_cast<double>(emb.grid_size());
    }
    result.cells_baseline = cells_baseline / (8.0 * n_trials);
    result.embedding_baseline = embedding_baseline / n_trials;
    return result;
}

double run_fixed_topology_experiment(const Checkpoint& donor, const std::string& mode,
                                     const Corpus& corpus, std::uint64_t seed,
                                     Index epochs) {
    // Zero further epochs degenerates to the donor's stored accuracy.
    if (epochs == 0) return donor.best.test_accuracy;

    TrainConfig config = donor.config;
    config.rewire_enabled = false;
    config.fixed_topology = "<donor>";
    config.init_mode = mode;
    config.seed = seed;
    if (epochs > 0) config.epochs = epochs;

    PreparedData data = prepare_data(corpus, config);
    Checkpoint ckpt = train_fixed_topology(donor, config, data.train, data.test);
    return ckpt.best.test_accuracy;
}

std::vector<SweepRow> run_sweep(const TrainConfig& config, const Corpus& corpus,
                                SweepAxis axis, const std::vector<double>& values,
                                int trials, int jobs) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    if (trials < 1) throw ConfigError("sweep needs at least one trial per value");

    const int total = static_cast<int>(values.size()) * trials;
    std::vector<double> accuracy(static_cast<std::size_t>(total), 0.0);
    parallel_for_index(total, jobs, [&](int k) {
        const int vi = k / trials;
        const int trial = k % trials;
        TrainConfig trial_config = config;
        if (axis == SweepAxis::zeta) trial_config.zeta = values[static_cast<std::size_t>(vi)];
        else trial_config.epsilon = values[static_cast<std::size_t>(vi)];
        trial_config.validate();
        Checkpoint ckpt = run_trial(
            trial_config,
            mix64(config.seed, mix64(static_cast<std::uint64_t>(vi),
                                     static_cast<std::uint64_t>(trial))),
            corpus);
        accuracy[static_cast<std::size_t>(k)] = ckpt.best.test_accuracy;
    });

    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        SweepRow row;
        row.value = values[vi];
        for (int t = 0; t < trials; ++t)
            row.trial_accuracies.push_back(
                accuracy[vi * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)]);
        double sum = 0.0;
        for (double a : row.trial_accuracies) sum += a;
        row.mean_accuracy = sum / static_cast<double>(trials);
        double var = 0.0;
        for (double a : row.trial_accuracies) {
            const double d = a - row.mean_accuracy;
            var += d * d;
        }
        row.std_accuracy = std::sqrt(var / static_cast<double>(trials));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, SweepAxis axis) {
    std::string out = axis == SweepAxis::zeta ? "zeta" : "epsilon";
    out += ",mean_accuracy,std_accuracy\n";
    char line[128];
    for (const SweepRow& row : rows) {
        std::snprintf(line, sizeof line, "%.6f,%.6f,%.6f\n", row.value, row.mean_accuracy,
                      row.std_accuracy);
        out += line;
    }
    return out;
}

std::string similarity_csv(const Mat& matrix) {
    std::string out;
    char cell[32];
    for (Eigen::Index a = 0; a < matrix.rows(); ++a) {
        for (Eigen::Index b = 0; b < matrix.cols(); ++b) {
            std::snprintf(cell, sizeof cell, "%.6f", matrix(a, b));
            if (b > 0) out += ',';
            out += cell;
        }
        out += '\n';
    }
    return out;
}

}  // namespace setlstm
