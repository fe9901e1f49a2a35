#pragma once

#include "setlstm/sparse.hpp"
#include "setlstm/types.hpp"

#include <array>
#include <vector>

namespace setlstm {

// The four gates in fixed order; every per-gate container follows it.
enum class Gate { input = 0, forget = 1, output = 2, cell = 3 };
inline constexpr std::array<const char*, 4> kGateNames = {"i", "f", "o", "g"};

// 4 gates x {input-to-hidden D x H, hidden-to-hidden H x H} sparse weights
// plus dense biases. Each matrix carries its own independent mask.
struct LstmCellParams {
    std::array<SparseMatrix, 4> w_x;  // w_xi, w_xf, w_xo, w_xg
    std::array<SparseMatrix, 4> w_h;  // w_hi, w_hf, w_ho, w_hg
    std::array<Vec, 4> b;             // b_i, b_f, b_o, b_g

    Index input_dim() const { return w_x[0].rows(); }
    Index hidden_dim() const { return w_x[0].cols(); }
};

// Stored activations for one timestep, in the shapes BPTT needs.
struct StepCache {
    Mat x;       // B x D
    Mat h_prev;  // B x H
    Mat c_prev;  // B x H
    std::array<Mat, 4> gate;  // i, f, o, g (post-activation)
    Mat c;       // B x H
    Mat tanh_c;  // B x H
};

struct LstmStepResult {
    Mat h;
    Mat c;
    StepCache cache;
};

// One application of the gate equations:
//   i = sigmoid(x.Wxi + h.Whi + bi)   f = sigmoid(x.Wxf + h.Whf + bf)
//   o = sigmoid(x.Wxo + h.Who + bo)   g = tanh(x.Wxg + h.Whg + bg)
//   c = f*c_prev + i*g                h = o*tanh(c)
LstmStepResult lstm_step(const Mat& x, const Mat& h_prev, const Mat& c_prev,
                         const LstmCellParams& p);

struct LstmSequenceResult {
    Mat h_last;                    // B x H
    std::vector<StepCache> caches; // one per timestep
};

// T chained steps with h0 = c0 = 0.
LstmSequenceResult lstm_sequence_forward(const MatSeq& x_seq, const LstmCellParams& p);

// Gradients w.r.t. cell parameters; sparse gradients share the parameter
// masks exactly (no off-mask mass can exist).
struct LstmCellGrads {
    std::array<SparseMatrix, 4> w_x;
    std::array<SparseMatrix, 4> w_h;
    std::array<Vec, 4> b;
};

struct LstmBackwardResult {
    LstmCellGrads grads;
    MatSeq dx_seq;  // gradient w.r.t. each x_t, feeds the embedding backward
};

// Analytic BPTT for a loss that depends on h_T only.
LstmBackwardResult lstm_backward(const std::vector<StepCache>& caches, const Mat& dh_last,
                                 const LstmCellParams& p);

}  // namespace setlstm
