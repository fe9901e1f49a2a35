#include "setlstm/trainer.hpp"

#include "setlstm/errors.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

namespace setlstm {

namespace {

// Independent seed streams: model/topology init vs. training-time draws
// (batch order, rewiring). Only the training stream lives in checkpoints.
constexpr std::uint64_t kInitStream = 0x494e4954ULL;   // "INIT"
constexpr std::uint64_t kTrainStream = 0x5452414eULL;  // "TRAN"

std::int32_t argmax_row(const Mat& logits, Eigen::Index b) {
    std::int32_t best = 0;
    double best_v = logits(b, 0);
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
        if (logits(b, c) > best_v) {
            best_v = logits(b, c);
            best = static_cast<std::int32_t>(c);
        }
    }
    return best;
}

InitSnapshot snapshot_init(const SetLstmModel& m, const InitKeys& keys) {
    InitSnapshot snap;
    snap.keys = keys;
    for (std::size_t l = 0; l < kSparseLayerCount; ++l) snap.layers[l] = m.sparse_layer(l);
    for (std::size_t g = 0; g < 4; ++g) snap.bias[g] = m.cell.b[g];
    snap.output_w = m.output.w;
    snap.output_b = m.output.b;
    return snap;
}

bool has_init_snapshot(const InitSnapshot& snap) { return snap.output_w.size() > 0; }

MetricsRecord make_record(Index epoch, double train_loss, double train_acc,
                          double test_acc, const SetLstmModel& model,
                          const std::vector<RewireReport>& reports) {
    MetricsRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss;
    rec.train_accuracy = train_acc;
    rec.test_accuracy = test_acc;
    for (std::size_t l = 0; l < kSparseLayerCount; ++l) {
        rec.nnz[l] = model.sparse_layer(l).nnz();
        rec.nnz_total += rec.nnz[l];
    }
    rec.sparsity = param_count(model).sparsity;
    for (const RewireReport& rep : reports) {
        rec.removed_connections += rep.removed_count();
        rec.added_connections += static_cast<std::int64_t>(rep.added.size());
    }
    return rec;
}

void run_epochs(Checkpoint& ckpt, const EncodedDataset& train_data,
                const EncodedDataset& test_data, const TrainOptions& options) {
    const TrainConfig& config = ckpt.config;
    Rng rng = Rng::deserialize(ckpt.rng_state);
    const Index last_epoch = options.stop_after > 0
                                 ? std::min(options.stop_after, config.epochs)
                                 : config.epochs;
    const bool rewiring = config.rewire_enabled && config.fixed_topology.empty();

    for (Index epoch = ckpt.epochs_completed + 1; epoch <= last_epoch; ++epoch) {
        double loss_sum = 0.0;
        std::int64_t correct = 0;
        std::int64_t seen = 0;
        for (const Batch& batch : make_batches(train_data, config.batch_size, rng)) {
            const auto b = static_cast<std::int64_t>(batch.labels.size());
            ForwardResult fwd = model_forward(ckpt.model, batch.tokens);
            for (Eigen::Index k = 0; k < fwd.logits.rows(); ++k)
                if (argmax_row(fwd.logits, k) == batch.labels[static_cast<std::size_t>(k)])
                    ++correct;
            LossResult loss = softmax_cross_entropy(fwd.logits, batch.labels);
            loss_sum += loss.loss * static_cast<double>(b);
            seen += b;
            ModelGrads grads = model_backward(ckpt.model, batch.tokens, fwd, loss.dlogits);
            adam_step(ckpt.model, grads, ckpt.optimizer);
        }

        std::vector<RewireReport> reports;
        std::optional<SetLstmModel> pre_rewire;
        if (rewiring) {
            if (options.observer) pre_rewire = ckpt.model;
            const bool regrow = (epoch != config.epochs);
            reports.reserve(kSparseLayerCount);
            for (std::size_t l = 0; l < kSparseLayerCount; ++l) {
                auto [rewired, report] =
                    rewire(ckpt.model.sparse_layer(l), config.zeta, regrow, rng);
                ckpt.optimizer.sparse[l] =
                    migrate_state(ckpt.optimizer.sparse[l], report, rewired.mask_ptr());
                ckpt.model.sparse_layer(l) = std::move(rewired);
                reports.push_back(std::move(report));
            }
        }

        const double test_acc = evaluate(ckpt.model, test_data, config.batch_size);
        MetricsRecord rec =
            make_record(epoch, loss_sum / static_cast<double>(seen),
                        static_cast<double>(correct) / static_cast<double>(seen),
                        test_acc, ckpt.model, reports);
        ckpt.history.push_back(rec);

        if (ckpt.best.epoch == 0 || test_acc > ckpt.best.test_accuracy) {
            ckpt.best.epoch = epoch;
            ckpt.best.test_accuracy = test_acc;
            for (std::size_t l = 0; l < kSparseLayerCount; ++l)
                ckpt.best.masks[l] = ckpt.model.sparse_layer(l).mask();
        }

        ckpt.epochs_completed = epoch;
        ckpt.rng_state = rng.serialize();

        if (options.observer) {
            EpochEvent event{epoch, pre_rewire ? *pre_rewire : ckpt.model, ckpt.model,
                             reports, ckpt.optimizer, rec};
            options.observer(event);
        }
        if (!options.checkpoint_each_epoch_path.empty())
            save_checkpoint(ckpt, options.checkpoint_each_epoch_path);
    }
}

}  // namespace

PreparedData prepare_data(const Corpus& corpus, const TrainConfig& config) {
    auto [train_corpus, test_corpus] = split(corpus, 0.8, config.seed);
    PreparedData data;
    data.vocab = build_vocab(train_corpus, config.vocab_size);
    data.train = encode_dataset(train_corpus, data.vocab, config.seq_len);
    data.test = encode_dataset(test_corpus, data.vocab, config.seq_len);
    return data;
}

double evaluate(const SetLstmModel& m, const EncodedDataset& data, Index batch_size) {
    if (data.size() == 0) throw ShapeMismatch("evaluate: empty dataset");
    if (batch_size < 1) throw ConfigError("evaluate: batch_size must be >= 1");
    std::int64_t correct = 0;
    for (Eigen::Index start = 0; start < data.size(); start += batch_size) {
        const Eigen::Index count = std::min<Eigen::Index>(batch_size, data.size() - start);
        const TokenMat tokens = data.tokens.middleRows(start, count);
        ForwardResult fwd = model_forward(m, tokens);
        for (Eigen::Index k = 0; k < count; ++k)
            if (argmax_row(fwd.logits, k) == data.labels[static_cast<std::size_t>(start + k)])
                ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

Checkpoint train_from_start(const TrainConfig& config, InitializedModel start,
                            const EncodedDataset& train_data,
                            const EncodedDataset& test_data, const TrainOptions& options) {
    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.model = std::move(start.model);
    ckpt.optimizer = init_adam_state(ckpt.model, AdamHyper{.lr = config.lr});
    ckpt.rng_state = Rng(mix64(config.seed, kTrainStream)).serialize();
    ckpt.init = snapshot_init(ckpt.model, start.keys);

    run_epochs(ckpt, train_data, test_data, options);
    return ckpt;
}

}  // namespace

Checkpoint train(const TrainConfig& config, const EncodedDataset& train_data,
                 const EncodedDataset& test_data, const TrainOptions& options) {
    config.validate();

    Rng init_rng(mix64(config.seed, kInitStream));
    InitializedModel start;
    if (!config.fixed_topology.empty()) {
        const Checkpoint donor = load_checkpoint(config.fixed_topology);
        start = build_fixed_topology_model(donor, config.init_mode, init_rng);
    } else {
        start = init_model(config.dims(), config.epsilon, init_rng);
    }
    return train_from_start(config, std::move(start), train_data, test_data, options);
}

Checkpoint train_fixed_topology(const Checkpoint& donor, const TrainConfig& config,
                                const EncodedDataset& train_data,
                                const EncodedDataset& test_data,
                                const TrainOptions& options) {
    config.validate();
    Rng init_rng(mix64(config.seed, kInitStream));
    InitializedModel start = build_fixed_topology_model(donor, config.init_mode, init_rng);
    return train_from_start(config, std::move(start), train_data, test_data, options);
}

Checkpoint resume_train(Checkpoint ckpt, const TrainConfig& config,
                        const EncodedDataset& train_data, const EncodedDataset& test_data,
                        const TrainOptions& options) {
    config.validate();
    if (!ckpt.config.compatible_for_resume(config))
        throw VersionMismatch("resume: config does not match the checkpoint's run");
    run_epochs(ckpt, train_data, test_data, options);
    return ckpt;
}

InitializedModel build_fixed_topology_model(const Checkpoint& donor,
                                            const std::string& init_mode, Rng& rng) {
    const ModelDims dims = donor.config.dims();
    std::array<ConnectionSet, kSparseLayerCount> masks;
    if (donor.best.epoch > 0) {
        masks = donor.best.masks;
    } else {
        for (std::size_t l = 0; l < kSparseLayerCount; ++l)
            masks[l] = donor.model.sparse_layer(l).mask();
    }

    InitializedModel out;
    out.model.dims = dims;

    if (init_mode == "fresh") {
        for (std::size_t l = 0; l < kSparseLayerCount; ++l) {
            out.keys[l] = rng.next_u64();
            out.model.sparse_layer(l) = init_values_keyed(masks[l], out.keys[l]);
        }
        for (std::size_t g = 0; g < 4; ++g) out.model.cell.b[g] = Vec::Zero(dims.hidden);
        const double bound = init_bound(dims.hidden, dims.classes);
        out.model.output.w = Mat(dims.hidden, dims.classes);
        for (Index r = 0; r < dims.hidden; ++r)
            for (Index c = 0; c < dims.classes; ++c)
                out.model.output.w(r, c) = rng.uniform(-bound, bound);
        out.model.output.b = Vec::Zero(dims.classes);
    } else if (init_mode == "same-as-checkpoint") {
        if (!has_init_snapshot(donor.init))
            throw MissingInitialSnapshot(
                "fixed-topology same-initialization needs the donor's epoch-0 snapshot");
        // The stored keys regenerate the donor's init surface at any
        // position, including connections the donor grew later.
        out.keys = donor.init.keys;
        for (std::size_t l = 0; l < kSparseLayerCount; ++l)
            out.model.sparse_layer(l) = init_values_keyed(masks[l], out.keys[l]);
        for (std::size_t g = 0; g < 4; ++g) out.model.cell.b[g] = donor.init.bias[g];
        out.model.output.w = donor.init.output_w;
        out.model.output.b = donor.init.output_b;
    } else {
        throw ConfigError("unknown init_mode: '" + init_mode + "'");
    }
    return out;
}

std::string metrics_csv(const std::vector<MetricsRecord>& history) {
    std::string out = "epoch,train_loss,train_acc,test_acc,nnz_total,sparsity\n";
    char line[256];
    for (const MetricsRecord& rec : history) {
        std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f,%" PRId64 ",%.6f\n",
                      rec.epoch, rec.train_loss, rec.train_accuracy, rec.test_accuracy,
                      rec.nnz_total, rec.sparsity);
        out += line;
    }
    return out;
}

}  // namespace setlstm
