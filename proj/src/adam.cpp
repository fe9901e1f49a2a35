#include "setlstm/adam.hpp"

#include "setlstm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace setlstm {

AdamState init_adam_state(const SetLstmModel& m, const AdamHyper& hyper) {
    AdamState s;
    s.hyper = hyper;
    s.t = 0;
    for (std::size_t l = 0; l < kSparseLayerCount; ++l) {
        const SparseMatrix& w = m.sparse_layer(l);
        s.sparse[l].mask = w.mask_ptr();
        s.sparse[l].m.assign(static_cast<std::size_t>(w.nnz()), 0.0);
        s.sparse[l].v.assign(static_cast<std::size_t>(w.nnz()), 0.0);
    }
    for (std::size_t g = 0; g < 4; ++g) {
        s.bias[g].m = Vec::Zero(m.dims.hidden);
        s.bias[g].v = Vec::Zero(m.dims.hidden);
    }
    s.output_w.m = Mat::Zero(m.dims.hidden, m.dims.classes);
    s.output_w.v = Mat::Zero(m.dims.hidden, m.dims.classes);
    s.output_b.m = Vec::Zero(m.dims.classes);
    s.output_b.v = Vec::Zero(m.dims.classes);
    return s;
}

namespace {

void step_sparse(SparseMatrix& w, const SparseMatrix& g, SparseMoments& st,
                 const AdamHyper& h, double corr1, double corr2, const char* name) {
    if (!w.same_mask(g))
        throw MaskMismatch(std::string("adam_step: gradient mask differs from parameter ") + name);
    if (!st.mask || !(st.mask == w.mask_ptr() || *st.mask == w.mask()))
        throw StateMismatch(std::string("adam_step: moment keys differ from parameter ") + name);
    if (st.m.size() != static_cast<std::size_t>(w.nnz()) || st.v.size() != st.m.size())
        throw StateMismatch(std::string("adam_step: moment length mismatch on ") + name);

    auto theta = w.values_mut();
    const auto grad = g.values();
    for (std::size_t k = 0; k < theta.size(); ++k) {
        st.m[k] = h.beta1 * st.m[k] + (1.0 - h.beta1) * grad[k];
        st.v[k] = h.beta2 * st.v[k] + (1.0 - h.beta2) * grad[k] * grad[k];
        const double m_hat = st.m[k] / corr1;
        const double v_hat = st.v[k] / corr2;
        theta[k] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
}

template <typename M>
void step_dense(M& theta, const M& grad, M& m, M& v, const AdamHyper& h, double corr1,
                double corr2) {
    if (theta.rows() != grad.rows() || theta.cols() != grad.cols())
        throw MaskMismatch("adam_step: dense gradient shape mismatch");
    m = h.beta1 * m + (1.0 - h.beta1) * grad;
    v = (h.beta2 * v.array() + (1.0 - h.beta2) * grad.array().square()).matrix();
    theta.array() -= h.lr * (m.array() / corr1) /
                     ((v.array() / corr2).sqrt() + h.eps);
}

}  // namespace

void adam_step(SetLstmModel& model, const ModelGrads& grads, AdamState& state) {
    state.t += 1;
    const AdamHyper& h = state.hyper;
    const double corr1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));

    step_sparse(model.embedding.w_e, grads.embedding, state.sparse[0], h, corr1, corr2,
                kSparseLayerNames[0]);
    for (std::size_t g = 0; g < 4; ++g) {
        step_sparse(model.cell.w_x[g], grads.cell.w_x[g], state.sparse[1 + g], h, corr1,
                    corr2, kSparseLayerNames[1 + g]);
        step_sparse(model.cell.w_h[g], grads.cell.w_h[g], state.sparse[5 + g], h, corr1,
                    corr2, kSparseLayerNames[5 + g]);
        step_dense(model.cell.b[g], grads.cell.b[g], state.bias[g].m, state.bias[g].v, h,
                   corr1, corr2);
    }
    step_dense(model.output.w, grads.output_w, state.output_w.m, state.output_w.v, h,
               corr1, corr2);
    step_dense(model.output.b, grads.output_b, state.output_b.m, state.output_b.v, h,
               corr1, corr2);
}

SparseMoments migrate_state(const SparseMoments& state, const RewireReport& report,
                            std::shared_ptr<const ConnectionSet> new_mask) {
    if (!state.mask) throw StateMismatch("migrate_state: uninitialized state");
    if (state.m.size() != static_cast<std::size_t>(state.mask->size()))
        throw StateMismatch("migrate_state: state keys out of sync");

    // Survivors = old positions minus the removed ones. A removed position
    // may reappear in `added`; it restarts with zero moments.
    std::vector<Position> removed;
    removed.reserve(report.removed_positive.size() + report.removed_negative.size());
    removed.insert(removed.end(), report.removed_positive.begin(),
                   report.removed_positive.end());
    removed.insert(removed.end(), report.removed_negative.begin(),
                   report.removed_negative.end());
    std::sort(removed.begin(), removed.end());

    const auto old_positions = state.mask->positions();
    std::vector<Position> survivors;
    std::vector<double> surv_m, surv_v;
    survivors.reserve(old_positions.size());
    {
        std::size_t r = 0;
        for (std::size_t k = 0; k < old_positions.size(); ++k) {
            while (r < removed.size() && removed[r] < old_positions[k]) ++r;
            if (r < removed.size() && removed[r] == old_positions[k]) continue;
            survivors.push_back(old_positions[k]);
            surv_m.push_back(state.m[k]);
            surv_v.push_back(state.v[k]);
        }
    }

    SparseMoments out;
    out.mask = std::move(new_mask);
    const auto new_positions = out.mask->positions();
    out.m.assign(new_positions.size(), 0.0);
    out.v.assign(new_positions.size(), 0.0);
    std::size_t s = 0;
    for (std::size_t k = 0; k < new_positions.size(); ++k) {
        while (s < survivors.size() && survivors[s] < new_positions[k]) ++s;
        if (s < survivors.size() && survivors[s] == new_positions[k]) {
            out.m[k] = surv_m[s];
            out.v[k] = surv_v[s];
        }
    }
    return out;
}

}  // namespace setlstm
