#pragma once

#include "setlstm/adam.hpp"
#include "setlstm/config.hpp"
#include "setlstm/data.hpp"
#include "setlstm/model.hpp"
#include "setlstm/topology.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace setlstm {

struct MetricsRecord {
    Index epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::array<std::int64_t, kSparseLayerCount> nnz{};  // live per-layer counts
    std::int64_t nnz_total = 0;
    double sparsity = 0.0;  // recomputed from live nnz every epoch
    std::int64_t removed_connections = 0;
    std::int64_t added_connections = 0;
};

// Everything at epoch 0: init keys plus the full initial parameter values.
// Fixed-topology same-initialization runs are impossible without it.
struct InitSnapshot {
    InitKeys keys{};
    std::array<SparseMatrix, kSparseLayerCount> layers;
    std::array<Vec, 4> bias;
    Mat output_w;
    Vec output_b;
};

// The connection sets at the epoch of maximum test accuracy.
struct BestTopology {
    Index epoch = 0;  // 0 = not yet recorded
    double test_accuracy = 0.0;
    std::array<ConnectionSet, kSparseLayerCount> masks;
};

struct Checkpoint {
    TrainConfig config;
    Index epochs_completed = 0;
    SetLstmModel model;
    AdamState optimizer;
    std::string rng_state;
    std::vector<MetricsRecord> history;
    InitSnapshot init;
    BestTopology best;

    double best_test_accuracy() const { return best.test_accuracy; }
    double final_test_accuracy() const {
        return history.empty() ? 0.0 : history.back().test_accuracy;
    }
};

// Fired after each epoch (training pass, rewiring if any, evaluation).
// pre_rewire is the state right after the epoch's weight updates; it equals
// post_rewire when rewiring is disabled.
struct EpochEvent {
    Index epoch;
    const SetLstmModel& pre_rewire;
    const SetLstmModel& post_rewire;
    const std::vector<RewireReport>& reports;  // canonical layer order; empty if none
    const AdamState& optimizer;
    const MetricsRecord& metrics;
};

using EpochObserver = std::function<void(const EpochEvent&)>;

struct TrainOptions {
    EpochObserver observer;           // optional per-epoch hook
    Index stop_after = 0;             // 0 = run to config.epochs
    std::string checkpoint_each_epoch_path;  // optional: overwrite after every epoch
};

// Split + vocabulary + encoding, all derived deterministically from
// (corpus, config.seed). The vocabulary is built on the training split.
struct PreparedData {
    Vocabulary vocab;
    EncodedDataset train;
    EncodedDataset test;
};

PreparedData prepare_data(const Corpus& corpus, const TrainConfig& config);

// Argmax-match fraction; ties resolve to the lowest class index.
double evaluate(const SetLstmModel& m, const EncodedDataset& data, Index batch_size);

// The SET training loop: per epoch a full pass of Adam steps, then (unless
// disabled or the topology is fixed) one rewiring of all nine sparse layers
// with optimizer-state migration — regrowth on every epoch but the last —
// then evaluation on the test set.
Checkpoint train(const TrainConfig& config, const EncodedDataset& train_data,
                 const EncodedDataset& test_data, const TrainOptions& options = {});

// Continues a mid-training checkpoint to config.epochs. The continuation is
// bit-identical to the run that never stopped.
Checkpoint resume_train(Checkpoint ckpt, const TrainConfig& config,
                        const EncodedDataset& train_data, const EncodedDataset& test_data,
                        const TrainOptions& options = {});

// Same loop, but the start model comes from an in-memory donor checkpoint
// per config.init_mode; rewiring stays off. config.fixed_topology only
// labels the run (train() uses it as a donor path instead).
Checkpoint train_fixed_topology(const Checkpoint& donor, const TrainConfig& config,
                                const EncodedDataset& train_data,
                                const EncodedDataset& test_data,
                                const TrainOptions& options = {});

// Model over the donor's best topology, valued per `init_mode`:
//   fresh               — new init surface drawn from rng
//   same-as-checkpoint  — the donor's original init surface, regenerated
//                         from its stored keys (biases/output restored from
//                         the epoch-0 snapshot)
InitializedModel build_fixed_topology_model(const Checkpoint& donor,
                                            const std::string& init_mode, Rng& rng);

// ---- checkpoint file I/O (binary, digest-protected, bit-stable) ----

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// metrics.csv with the canonical header:
// epoch,train_loss,train_acc,test_acc,nnz_total,sparsity
std::string metrics_csv(const std::vector<MetricsRecord>& history);

}  // namespace setlstm
