#pragma once

#include "setlstm/embedding.hpp"
#include "setlstm/lstm.hpp"
#include "setlstm/rng.hpp"
#include "setlstm/sparse.hpp"
#include "setlstm/topology.hpp"
#include "setlstm/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace setlstm {

struct ModelDims {
    Index vocab = 20000;   // V
    Index embed = 256;     // D
    Index hidden = 256;    // H
    Index seq_len = 100;   // T
    Index classes = 2;     // C
};

// Dense classification head; deliberately not sparsified.
struct OutputParams {
    Mat w;  // H x C
    Vec b;  // C
};

// The nine sparse layers in canonical order: embedding, then w_x (i,f,o,g),
// then w_h (i,f,o,g). Checkpoints, optimizer state and rewiring all walk
// this order.
inline constexpr std::size_t kSparseLayerCount = 9;
inline constexpr std::array<const char*, kSparseLayerCount> kSparseLayerNames = {
    "embedding", "w_xi", "w_xf", "w_xo", "w_xg", "w_hi", "w_hf", "w_ho", "w_hg"};

struct SetLstmModel {
    ModelDims dims;
    EmbeddingParams embedding;
    LstmCellParams cell;
    OutputParams output;

    SparseMatrix& sparse_layer(std::size_t idx);
    const SparseMatrix& sparse_layer(std::size_t idx) const;
};

// Init-surface keys for the nine sparse layers; a checkpoint carries them so
// the original initialization of any topology can be reproduced exactly.
using InitKeys = std::array<std::uint64_t, kSparseLayerCount>;

struct InitializedModel {
    SetLstmModel model;
    InitKeys keys;
};

// Fresh model: ER topologies at `epsilon` (epsilon <= 0 means fully dense),
// init-surface weight values, zero biases, uniform dense output weights.
InitializedModel init_model(const ModelDims& dims, double epsilon, Rng& rng);

// ---- classification head ----

Mat output_forward(const Mat& h, const OutputParams& p);

struct OutputBackwardResult {
    Mat dw;   // H x C
    Vec db;   // C
    Mat dh;   // B x H
};

OutputBackwardResult output_backward(const Mat& h, const Mat& dlogits, const OutputParams& p);

struct LossResult {
    double loss;
    Mat dlogits;  // (softmax - onehot) / B
};

// Mean negative log-softmax of the true class, stabilized by max-subtraction.
LossResult softmax_cross_entropy(const Mat& logits, const std::vector<std::int32_t>& labels);

// ---- whole-model forward/backward ----

struct ForwardResult {
    MatSeq x_seq;
    LstmSequenceResult lstm;
    Mat logits;
};

ForwardResult model_forward(const SetLstmModel& m, const TokenMat& tokens);

struct ModelGrads {
    SparseMatrix embedding;
    LstmCellGrads cell;
    Mat output_w;
    Vec output_b;
};

ModelGrads model_backward(const SetLstmModel& m, const TokenMat& tokens,
                          const ForwardResult& fwd, const Mat& dlogits);

// ---- accounting (Table-style parameter report) ----

struct ParamCountReport {
    std::int64_t embedding_nnz = 0;
    std::array<std::int64_t, 4> w_x_nnz{};
    std::array<std::int64_t, 4> w_h_nnz{};
    std::int64_t cell_nnz = 0;       // sum over the 8 gate matrices
    std::int64_t bias_count = 0;     // 4 * H
    std::int64_t output_count = 0;   // H * C + C
    std::int64_t sparse_ex_output = 0;
    std::int64_t total = 0;          // includes the dense output layer
    std::int64_t dense_baseline = 0; // V*D + 4*(D*H + H*H + H), output excluded
    double sparsity = 0.0;           // 1 - sparse_ex_output / dense_baseline
};

ParamCountReport param_count(const SetLstmModel& m);

// Accounting from dims alone (exact-count init makes nnz deterministic);
// epsilon <= 0 means fully dense masks.
ParamCountReport param_count_for(const ModelDims& dims, double epsilon);

}  // namespace setlstm
