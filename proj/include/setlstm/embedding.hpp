#pragma once

#include "setlstm/sparse.hpp"
#include "setlstm/types.hpp"

namespace setlstm {

// Sparse word embedding W_E (V x D).
struct EmbeddingParams {
    SparseMatrix w_e;

    Index vocab_size() const { return w_e.rows(); }
    Index embed_dim() const { return w_e.cols(); }
};

// x_seq[t].row(b) = row tokens(b, t) of densify(w_e).
MatSeq embedding_forward(const TokenMat& tokens, const EmbeddingParams& e);

// grad(v, d) = sum of dx[b][t][d] over occurrences tokens(b, t) == v,
// restricted to the mask. Rows of never-seen words get zero gradient.
SparseMatrix embedding_backward(const TokenMat& tokens, const MatSeq& dx_seq,
                                const EmbeddingParams& e);

}  // namespace setlstm
