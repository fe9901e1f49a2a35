#include "setlstm/embedding.hpp"

#include "setlstm/errors.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace setlstm {

MatSeq embedding_forward(const TokenMat& tokens, const EmbeddingParams& e) {
    const auto batch = tokens.rows();
    const auto steps = tokens.cols();
    const Index v = e.vocab_size();
    const Index d = e.embed_dim();

    const auto offsets = row_offsets(e.w_e.mask());
    const auto positions = e.w_e.mask().positions();
    const auto values = e.w_e.values();

    MatSeq x_seq(static_cast<std::size_t>(steps));
    for (Eigen::Index t = 0; t < steps; ++t) {
        Mat& x = x_seq[static_cast<std::size_t>(t)];
        x = Mat::Zero(batch, d);
        for (Eigen::Index b = 0; b < batch; ++b) {
            const std::int32_t id = tokens(b, t);
            if (id < 0 || id >= v)
                throw TokenOutOfRange("embedding_forward: token " + std::to_string(id) +
                                      " outside vocabulary of " + std::to_string(v));
            for (std::int64_t k = offsets[static_cast<std::size_t>(id)];
                 k < offsets[static_cast<std::size_t>(id) + 1]; ++k) {
                x(b, positions[static_cast<std::size_t>(k)].col) =
                    values[static_cast<std::size_t>(k)];
            }
        }
    }
    return x_seq;
}

SparseMatrix embedding_backward(const TokenMat& tokens, const MatSeq& dx_seq,
                                const EmbeddingParams& e) {
    const auto batch = tokens.rows();
    const auto steps = tokens.cols();
    if (static_cast<std::size_t>(steps) != dx_seq.size())
        throw ShapeMismatch("embedding_backward: dx stack length != token columns");
    const Index d = e.embed_dim();

    // Dense row accumulators for the rows that actually occur in the batch
    // keep the cost proportional to accessed rows, not to nnz(w_e).
    std::unordered_map<std::int32_t, Vec> row_acc;
    for (Eigen::Index t = 0; t < steps; ++t) {
        const Mat& dx = dx_seq[static_cast<std::size_t>(t)];
        if (dx.rows() != batch || dx.cols() != d)
            throw ShapeMismatch("embedding_backward: dx slice shape mismatch");
        for (Eigen::Index b = 0; b < batch; ++b) {
            const std::int32_t id = tokens(b, t);
            if (id < 0 || id >= e.vocab_size())
                throw TokenOutOfRange("embedding_backward: token " + std::to_string(id));
            auto [it, inserted] = row_acc.try_emplace(id, Vec());
            if (inserted) it->second = Vec::Zero(d);
            it->second += dx.row(b).transpose();
        }
    }

    const auto positions = e.w_e.mask().positions();
    std::vector<double> grad(positions.size(), 0.0);
    const auto offsets = row_offsets(e.w_e.mask());
    for (const auto& [id, acc] : row_acc) {
        for (std::int64_t k = offsets[static_cast<std::size_t>(id)];
             k < offsets[static_cast<std::size_t>(id) + 1]; ++k) {
            grad[static_cast<std::size_t>(k)] = acc(positions[static_cast<std::size_t>(k)].col);
        }
    }
    return SparseMatrix(e.w_e.mask_ptr(), std::move(grad));
}

}  // namespace setlstm
