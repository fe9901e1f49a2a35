#pragma once

#include "setlstm/trainer.hpp"

#include <string>
#include <vector>

namespace setlstm {

// Trials inside an experiment derive their seeds as mix64(config.seed, trial
// index); independent trials may run on a worker pool and are merged by
// index, so results do not depend on scheduling.

struct SimilarityResult {
    Mat cells;               // n_trials x n_trials, mean over the 8 gate masks
    Mat embedding;           // n_trials x n_trials
    double cells_baseline;   // chance overlap n_W / S, mean over gates
    double embedding_baseline;
    std::vector<double> trial_accuracies;

    double mean_offdiag_cells() const;
    double mean_offdiag_embedding() const;
};

// Trains n_trials models with distinct seeds and compares the best
// topologies of each pair of trials.
SimilarityResult run_similarity_experiment(const TrainConfig& config, const Corpus& corpus,
                                           int n_trials, int jobs = 1);

// Retrains on the donor's best topology with rewiring disabled and returns
// the run's best test accuracy. `mode` is "fresh" or "same-as-checkpoint";
// `seed` drives batch order (and fresh values). epochs < 0 reuses the
// donor's budget; epochs == 0 retrains nothing and reports the donor's
// stored accuracy.
double run_fixed_topology_experiment(const Checkpoint& donor, const std::string& mode,
                                     const Corpus& corpus, std::uint64_t seed,
                                     Index epochs = -1);

enum class SweepAxis { zeta, epsilon };

struct SweepRow {
    double value;
    double mean_accuracy;
    double std_accuracy;   // population stddev over trials
    std::vector<double> trial_accuracies;
};

std::vector<SweepRow> run_sweep(const TrainConfig& config, const Corpus& corpus,
                                SweepAxis axis, const std::vector<double>& values,
                                int trials, int jobs = 1);

std::string sweep_csv(const std::vector<SweepRow>& rows, SweepAxis axis);
std::string similarity_csv(const Mat& matrix);

}  // namespace setlstm
