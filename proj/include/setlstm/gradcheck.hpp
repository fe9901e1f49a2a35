#pragma once

#include "setlstm/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace setlstm {

// Central-finite-difference verification of every analytic gradient against
// the forward pass alone, over randomly drawn toy instances.
struct GradCheckOptions {
    std::uint64_t seed = 42;
    int instances = 20;
    Index max_batch = 6;
    Index max_seq = 6;
    Index max_embed = 6;
    Index max_hidden = 6;
    double step = 1e-5;        // central-difference h
    double tolerance = 1e-4;   // max allowed relative error
    bool inject_error = false; // test hook: corrupt one gradient on purpose
};

struct GradCheckClassResult {
    std::string parameter_class;
    double worst_relative_error = 0.0;
    std::int64_t checked = 0;
};

struct GradCheckReport {
    std::vector<GradCheckClassResult> classes;
    double worst_relative_error = 0.0;
    bool passed = false;
};

GradCheckReport run_gradcheck(const GradCheckOptions& options);

}  // namespace setlstm
