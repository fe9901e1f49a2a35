#include "setlstm/lstm.hpp"

#include "setlstm/errors.hpp"

#include <cmath>

namespace setlstm {

namespace {

Mat sigmoid(const Mat& z) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

}  // namespace

LstmStepResult lstm_step(const Mat& x, const Mat& h_prev, const Mat& c_prev,
                         const LstmCellParams& p) {
    const Index d = p.input_dim();
    const Index h = p.hidden_dim();
    if (x.cols() != d || h_prev.cols() != h || c_prev.cols() != h ||
        x.rows() != h_prev.rows() || x.rows() != c_prev.rows())
        throw ShapeMismatch("lstm_step: activation shapes inconsistent with parameters");

    std::array<Mat, 4> pre;
    for (std::size_t g = 0; g < 4; ++g) {
        pre[g] = dense_times_sparse(x, p.w_x[g]) + dense_times_sparse(h_prev, p.w_h[g]);
        pre[g].rowwise() += p.b[g].transpose();
    }

    LstmStepResult r;
    r.cache.x = x;
    r.cache.h_prev = h_prev;
    r.cache.c_prev = c_prev;
    r.cache.gate[0] = sigmoid(pre[0]);
    r.cache.gate[1] = sigmoid(pre[1]);
    r.cache.gate[2] = sigmoid(pre[2]);
    r.cache.gate[3] = pre[3].array().tanh().matrix();

    r.cache.c = (r.cache.gate[1].array() * c_prev.array() +
                 r.cache.gate[0].array() * r.cache.gate[3].array())
                    .matrix();
    r.cache.tanh_c = r.cache.c.array().tanh().matrix();
    r.h = (r.cache.gate[2].array() * r.cache.tanh_c.array()).matrix();
    r.c = r.cache.c;
    return r;
}

LstmSequenceResult lstm_sequence_forward(const MatSeq& x_seq, const LstmCellParams& p) {
    if (x_seq.empty()) throw ShapeMismatch("lstm_sequence_forward: empty sequence");
    const auto batch = x_seq.front().rows();
    const Index h_dim = p.hidden_dim();

    LstmSequenceResult r;
    r.caches.reserve(x_seq.size());
    Mat h = Mat::Zero(batch, h_dim);
    Mat c = Mat::Zero(batch, h_dim);
    for (const Mat& x : x_seq) {
        LstmStepResult step = lstm_step(x, h, c, p);
        h = std::move(step.h);
        c = std::move(step.c);
        r.caches.push_back(std::move(step.cache));
    }
    r.h_last = std::move(h);
    return r;
}

LstmBackwardResult lstm_backward(const std::vector<StepCache>& caches, const Mat& dh_last,
                                 const LstmCellParams& p) {
    if (caches.empty()) throw CacheMismatch("lstm_backward: no cached steps");
    const auto batch = caches.front().x.rows();
    if (dh_last.rows() != batch || dh_last.cols() != p.hidden_dim())
        throw CacheMismatch("lstm_backward: dh shape does not match caches");

    LstmBackwardResult r;
    std::array<std::vector<double>, 4> gx_values, gh_values;
    for (std::size_t g = 0; g < 4; ++g) {
        gx_values[g].assign(static_cast<std::size_t>(p.w_x[g].nnz()), 0.0);
        gh_values[g].assign(static_cast<std::size_t>(p.w_h[g].nnz()), 0.0);
        r.grads.b[g] = Vec::Zero(p.hidden_dim());
    }
    r.dx_seq.resize(caches.size());

    Mat dh = dh_last;
    Mat dc = Mat::Zero(batch, p.hidden_dim());
    for (std::size_t t = caches.size(); t-- > 0;) {
        const StepCache& cache = caches[t];
        if (cache.x.rows() != batch) throw CacheMismatch("lstm_backward: ragged caches");

        const auto& gi = cache.gate[0];
        const auto& gf = cache.gate[1];
        const auto& go = cache.gate[2];
        const auto& gg = cache.gate[3];

        // h = o * tanh(c)
        const Mat d_o = (dh.array() * cache.tanh_c.array()).matrix();
        dc.array() += dh.array() * go.array() * (1.0 - cache.tanh_c.array().square());

        // c = f * c_prev + i * g
        const Mat d_f = (dc.array() * cache.c_prev.array()).matrix();
        const Mat d_i = (dc.array() * gg.array()).matrix();
        const Mat d_g = (dc.array() * gi.array()).matrix();
        const Mat dc_prev = (dc.array() * gf.array()).matrix();

        // through the activations to the pre-activations
        std::array<Mat, 4> da;
        da[0] = (d_i.array() * gi.array() * (1.0 - gi.array())).matrix();
        da[1] = (d_f.array() * gf.array() * (1.0 - gf.array())).matrix();
        da[2] = (d_o.array() * go.array() * (1.0 - go.array())).matrix();
        da[3] = (d_g.array() * (1.0 - gg.array().square())).matrix();

        Mat dx = Mat::Zero(batch, p.input_dim());
        Mat dh_prev = Mat::Zero(batch, p.hidden_dim());
        for (std::size_t g = 0; g < 4; ++g) {
            masked_grad_accumulate(cache.x, da[g], p.w_x[g].mask(), gx_values[g]);
            masked_grad_accumulate(cache.h_prev, da[g], p.w_h[g].mask(), gh_values[g]);
            r.grads.b[g] += da[g].colwise().sum().transpose();
            dx += dense_times_sparse_transposed(da[g], p.w_x[g]);
            dh_prev += dense_times_sparse_transposed(da[g], p.w_h[g]);
        }
        r.dx_seq[t] = std::move(dx);
        dh = std::move(dh_prev);
        dc = std::move(dc_prev);
    }

    for (std::size_t g = 0; g < 4; ++g) {
        r.grads.w_x[g] = SparseMatrix(p.w_x[g].mask_ptr(), std::move(gx_values[g]));
        r.grads.w_h[g] = SparseMatrix(p.w_h[g].mask_ptr(), std::move(gh_values[g]));
    }
    return r;
}

}  // namespace setlstm
