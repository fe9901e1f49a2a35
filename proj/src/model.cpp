#include "setlstm/model.hpp"

#include "setlstm/errors.hpp"

#include <cmath>
#include <string>

namespace setlstm {

SparseMatrix& SetLstmModel::sparse_layer(std::size_t idx) {
    if (idx == 0) return embedding.w_e;
    if (idx < 5) return cell.w_x[idx - 1];
    return cell.w_h[idx - 5];
}

const SparseMatrix& SetLstmModel::sparse_layer(std::size_t idx) const {
    return const_cast<SetLstmModel*>(this)->sparse_layer(idx);
}

namespace {

ConnectionSet layer_mask(Index n_in, Index n_out, double epsilon, Rng& rng) {
    if (epsilon <= 0.0) {
        std::vector<Position> all;
        all.reserve(static_cast<std::size_t>(n_in) * static_cast<std::size_t>(n_out));
        for (Index r = 0; r < n_in; ++r)
            for (Index c = 0; c < n_out; ++c) all.push_back(Position{r, c});
        return ConnectionSet(n_in, n_out, std::move(all));
    }
    return er_init(n_in, n_out, epsilon, rng);
}

}  // namespace

InitializedModel init_model(const ModelDims& dims, double epsilon, Rng& rng) {
    if (dims.vocab < 1 || dims.embed < 1 || dims.hidden < 1 || dims.seq_len < 1 ||
        dims.classes < 2)
        throw ShapeMismatch("init_model: invalid dimensions");

    InitializedModel out;
    out.model.dims = dims;

    std::array<ConnectionSet, kSparseLayerCount> masks;
    masks[0] = layer_mask(dims.vocab, dims.embed, epsilon, rng);
    for (std::size_t g = 0; g < 4; ++g)
        masks[1 + g] = layer_mask(dims.embed, dims.hidden, epsilon, rng);
    for (std::size_t g = 0; g < 4; ++g)
        masks[5 + g] = layer_mask(dims.hidden, dims.hidden, epsilon, rng);

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
    return out;
}

Mat output_forward(const Mat& h, const OutputParams& p) {
    if (h.cols() != p.w.rows())
        throw ShapeMismatch("output_forward: hidden dim " + std::to_string(h.cols()) +
                            " vs weights " + std::to_string(p.w.rows()));
    Mat logits = h * p.w;
    logits.rowwise() += p.b.transpose();
    return logits;
}

OutputBackwardResult output_backward(const Mat& h, const Mat& dlogits, const OutputParams& p) {
    if (h.rows() != dlogits.rows() || h.cols() != p.w.rows() || dlogits.cols() != p.w.cols())
        throw ShapeMismatch("output_backward: shape mismatch");
    OutputBackwardResult r;
    r.dw = h.transpose() * dlogits;
    r.db = dlogits.colwise().sum().transpose();
    r.dh = dlogits * p.w.transpose();
    return r;
}

LossResult softmax_cross_entropy(const Mat& logits, const std::vector<std::int32_t>& labels) {
    const auto batch = logits.rows();
    const auto classes = logits.cols();
    if (static_cast<Eigen::Index>(labels.size()) != batch)
        throw ShapeMismatch("softmax_cross_entropy: labels length != batch");

    LossResult r;
    r.loss = 0.0;
    r.dlogits.resize(batch, classes);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const std::int32_t y = labels[static_cast<std::size_t>(b)];
        if (y < 0 || y >= classes)
            throw LabelOutOfRange("softmax_cross_entropy: label " + std::to_string(y));
        const double m = logits.row(b).maxCoeff();
        const Eigen::ArrayXd shifted = logits.row(b).transpose().array() - m;
        const Eigen::ArrayXd ex = shifted.exp();
        const double z = ex.sum();
        r.loss += -(shifted(y) - std::log(z));
        r.dlogits.row(b) = (ex / z).matrix().transpose();
        r.dlogits(b, y) -= 1.0;
    }
    r.loss /= static_cast<double>(batch);
    r.dlogits /= static_cast<double>(batch);
    return r;
}

ForwardResult model_forward(const SetLstmModel& m, const TokenMat& tokens) {
    if (tokens.cols() != m.dims.seq_len)
        throw ShapeMismatch("model_forward: sequence length mismatch");
    ForwardResult fwd;
    fwd.x_seq = embedding_forward(tokens, m.embedding);
    fwd.lstm = lstm_sequence_forward(fwd.x_seq, m.cell);
    fwd.logits = output_forward(fwd.lstm.h_last, m.output);
    return fwd;
}

ModelGrads model_backward(const SetLstmModel& m, const TokenMat& tokens,
                          const ForwardResult& fwd, const Mat& dlogits) {
    ModelGrads grads;
    OutputBackwardResult out = output_backward(fwd.lstm.h_last, dlogits, m.output);
    grads.output_w = std::move(out.dw);
    grads.output_b = std::move(out.db);
    LstmBackwardResult bptt = lstm_backward(fwd.lstm.caches, out.dh, m.cell);
    grads.cell = std::move(bptt.grads);
    grads.embedding = embedding_backward(tokens, bptt.dx_seq, m.embedding);
    return grads;
}

ParamCountReport param_count(const SetLstmModel& m) {
    ParamCountReport r;
    r.embedding_nnz = m.embedding.w_e.nnz();
    for (std::size_t g = 0; g < 4; ++g) {
        r.w_x_nnz[g] = m.cell.w_x[g].nnz();
        r.w_h_nnz[g] = m.cell.w_h[g].nnz();
        r.cell_nnz += r.w_x_nnz[g] + r.w_h_nnz[g];
    }
    const ModelDims& d = m.dims;
    r.bias_count = 4LL * d.hidden;
    r.output_count = static_cast<std::int64_t>(d.hidden) * d.classes + d.classes;
    r.sparse_ex_output = r.embedding_nnz + r.cell_nnz + r.bias_count;
    r.total = r.sparse_ex_output + r.output_count;
    r.dense_baseline =
        static_cast<std::int64_t>(d.vocab) * d.embed +
        4LL * (static_cast<std::int64_t>(d.embed) * d.hidden +
               static_cast<std::int64_t>(d.hidden) * d.hidden + d.hidden);
    r.sparsity = 1.0 - static_cast<double>(r.sparse_ex_output) /
                           static_cast<double>(r.dense_baseline);
    return r;
}

ParamCountReport param_count_for(const ModelDims& dims, double epsilon) {
    auto nnz_of = [&](Index n_in, Index n_out) {
        return epsilon <= 0.0 ? static_cast<std::int64_t>(n_in) * n_out
                              : er_target_nnz(n_in, n_out, epsilon);
    };
    ParamCountReport r;
    r.embedding_nnz = nnz_of(dims.vocab, dims.embed);
    for (std::size_t g = 0; g < 4; ++g) {
        r.w_x_nnz[g] = nnz_of(dims.embed, dims.hidden);
        r.w_h_nnz[g] = nnz_of(dims.hidden, dims.hidden);
        r.cell_nnz += r.w_x_nnz[g] + r.w_h_nnz[g];
    }
    r.bias_count = 4LL * dims.hidden;
    r.output_count = static_cast<std::int64_t>(dims.hidden) * dims.classes + dims.classes;
    r.sparse_ex_output = r.embedding_nnz + r.cell_nnz + r.bias_count;
    r.total = r.sparse_ex_output + r.output_count;
    r.dense_baseline =
        static_cast<std::int64_t>(dims.vocab) * dims.embed +
        4LL * (static_cast<std::int64_t>(dims.embed) * dims.hidden +
               static_cast<std::int64_t>(dims.hidden) * dims.hidden + dims.hidden);
    r.sparsity = 1.0 - static_cast<double>(r.sparse_ex_output) /
                           static_cast<double>(r.dense_baseline);
    return r;
}

}  // namespace setlstm
