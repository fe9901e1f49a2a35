#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace setlstm {

// All arithmetic is double precision; gradient verification at 1e-4
// tolerance is not feasible in float.
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using TokenMat = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>;

// A B x T x D activation stack, stored as T slices of B x D.
using MatSeq = std::vector<Mat>;

using Index = std::int32_t;

}  // namespace setlstm
