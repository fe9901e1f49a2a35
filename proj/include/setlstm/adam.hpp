#pragma once

#include "setlstm/model.hpp"
#include "setlstm/sparse.hpp"
#include "setlstm/topology.hpp"
#include "setlstm/types.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace setlstm {

struct AdamHyper {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Moments for one sparse parameter, keyed by its mask: m/v are aligned with
// the parameter's stored positions.
struct SparseMoments {
    std::shared_ptr<const ConnectionSet> mask;
    std::vector<double> m;
    std::vector<double> v;
};

struct DenseMoments {
    Mat m;
    Mat v;
};

struct VecMoments {
    Vec m;
    Vec v;
};

// Optimizer state over the whole mixed sparse/dense parameter set. One
// global step counter; rewiring migrates sparse moments but never resets t.
struct AdamState {
    AdamHyper hyper;
    std::int64_t t = 0;
    std::array<SparseMoments, kSparseLayerCount> sparse;  // canonical layer order
    std::array<VecMoments, 4> bias;
    DenseMoments output_w;
    VecMoments output_b;
};

AdamState init_adam_state(const SetLstmModel& m, const AdamHyper& hyper);

// One Adam step with bias correction over every parameter; sparse parameters
// update per stored position. Throws MaskMismatch / StateMismatch when
// gradient or state keys disagree with the parameters.
void adam_step(SetLstmModel& m, const ModelGrads& grads, AdamState& state);

// After a rewiring event: surviving positions keep their moments, removed
// positions are dropped, added positions start at zero. t is unchanged.
SparseMoments migrate_state(const SparseMoments& state, const RewireReport& report,
                            std::shared_ptr<const ConnectionSet> new_mask);

}  // namespace setlstm
