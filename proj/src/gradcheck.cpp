#include "setlstm/gradcheck.hpp"

#include "setlstm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace setlstm {

namespace {

struct Instance {
    SetLstmModel model;
    TokenMat tokens;
    std::vector<std::int32_t> labels;
};

double forward_loss(const SetLstmModel& m, const TokenMat& tokens,
                    const std::vector<std::int32_t>& labels) {
    ForwardResult fwd = model_forward(m, tokens);
    return softmax_cross_entropy(fwd.logits, labels).loss;
}

Instance make_instance(const GradCheckOptions& opt, Rng& rng) {
    ModelDims dims;
    dims.vocab = static_cast<Index>(3 + rng.uniform_index(6));  // 3..8
    dims.embed = static_cast<Index>(1 + rng.uniform_index(static_cast<std::uint64_t>(opt.max_embed)));
    dims.hidden = static_cast<Index>(1 + rng.uniform_index(static_cast<std::uint64_t>(opt.max_hidden)));
    dims.seq_len = static_cast<Index>(1 + rng.uniform_index(static_cast<std::uint64_t>(opt.max_seq)));
    dims.classes = static_cast<Index>(2 + rng.uniform_index(3));  // 2..4
    const Index batch = static_cast<Index>(1 + rng.uniform_index(static_cast<std::uint64_t>(opt.max_batch)));

    Instance inst;
    // epsilon 2 keeps the toy masks sparse but never empty.
    inst.model = init_model(dims, 2.0, rng).model;
    inst.tokens.resize(batch, dims.seq_len);
    for (Index b = 0; b < batch; ++b)
        for (Index t = 0; t < dims.seq_len; ++t)
            inst.tokens(b, t) =
                static_cast<std::int32_t>(rng.uniform_index(static_cast<std::uint64_t>(dims.vocab)));
    inst.labels.reserve(static_cast<std::size_t>(batch));
    for (Index b = 0; b < batch; ++b)
        inst.labels.push_back(
            static_cast<std::int32_t>(rng.uniform_index(static_cast<std::uint64_t>(dims.classes))));
    return inst;
}

// Relative error with an absolute cutoff: a disagreement only counts
// relative to the larger magnitude, and parameters where both sides are
// essentially zero (< 1e-7) agree by definition.
double relative_error(double analytic, double numeric) {
    const double mag = std::max(std::abs(analytic), std::abs(numeric));
    if (mag < 1e-7) return 0.0;
    return std::abs(analytic - numeric) / mag;
}

class Accumulator {
public:
    void record(const std::string& cls, double analytic, double numeric) {
        auto& slot = worst_[cls];
        slot.first = std::max(slot.first, relative_error(analytic, numeric));
        slot.second += 1;
    }

    GradCheckReport finish(double tolerance) const {
        GradCheckReport report;
        for (const auto& [cls, slot] : worst_) {
            report.classes.push_back(GradCheckClassResult{cls, slot.first, slot.second});
            report.worst_relative_error = std::max(report.worst_relative_error, slot.first);
        }
        report.passed = report.worst_relative_error < tolerance;
        return report;
    }

private:
    std::map<std::string, std::pair<double, std::int64_t>> worst_;
};

// Bumps one stored parameter, re-runs the forward pass twice and compares
// the centered difference against the analytic gradient entry.
template <typename GetRef>
void check_param(Instance& inst, const GradCheckOptions& opt, Accumulator& acc,
                 const std::string& cls, double analytic, GetRef&& ref) {
    double& theta = ref();
    const double saved = theta;
    theta = saved + opt.step;
    const double loss_plus = forward_loss(inst.model, inst.tokens, inst.labels);
    theta = saved - opt.step;
    const double loss_minus = forward_loss(inst.model, inst.tokens, inst.labels);
    theta = saved;
    const double numeric = (loss_plus - loss_minus) / (2.0 * opt.step);
    acc.record(cls, analytic, numeric);
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckOptions& opt) {
    Rng rng(mix64(opt.seed, 0x67726164ULL));  // "grad"
    Accumulator acc;

    for (int i = 0; i < opt.instances; ++i) {
        Instance inst = make_instance(opt, rng);

        ForwardResult fwd = model_forward(inst.model, inst.tokens);
        LossResult loss = softmax_cross_entropy(fwd.logits, inst.labels);
        ModelGrads grads = model_backward(inst.model, inst.tokens, fwd, loss.dlogits);

        if (opt.inject_error && i == 0) {
            // Negative-control hook. The output bias gradient is the softmax
            // residual column sum, never identically zero.
            grads.output_b.array() = grads.output_b.array() * 1.01 + 1e-3;
        }

        for (std::size_t l = 0; l < kSparseLayerCount; ++l) {
            SparseMatrix& param = inst.model.sparse_layer(l);
            const SparseMatrix& grad =
                l == 0 ? grads.embedding
                       : (l < 5 ? grads.cell.w_x[l - 1] : grads.cell.w_h[l - 5]);
            for (std::size_t k = 0; k < static_cast<std::size_t>(param.nnz()); ++k) {
                check_param(inst, opt, acc, kSparseLayerNames[l], grad.value(k),
                            [&]() -> double& { return param.values_mut()[k]; });
            }
        }
        for (std::size_t g = 0; g < 4; ++g) {
            for (Eigen::Index k = 0; k < inst.model.cell.b[g].size(); ++k) {
                check_param(inst, opt, acc, std::string("bias_") + kGateNames[g],
                            grads.cell.b[g](k),
                            [&]() -> double& { return inst.model.cell.b[g](k); });
            }
        }
        for (Eigen::Index r = 0; r < inst.model.output.w.rows(); ++r)
            for (Eigen::Index c = 0; c < inst.model.output.w.cols(); ++c)
                check_param(inst, opt, acc, "output_w", grads.output_w(r, c),
                            [&]() -> double& { return inst.model.output.w(r, c); });
        for (Eigen::Index k = 0; k < inst.model.output.b.size(); ++k)
            check_param(inst, opt, acc, "output_b", grads.output_b(k),
                        [&]() -> double& { return inst.model.output.b(k); });
    }

    return acc.finish(opt.tolerance);
}

}  // namespace setlstm
