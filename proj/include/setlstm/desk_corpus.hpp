#pragma once

#include "setlstm/data.hpp"

#include <cstdint>

namespace setlstm {

// Seeded generator for the bundled two-class sentiment corpus:
// keyword-template sentences with neutral filler and a small rate of
// off-class keyword noise. Deterministic given (n_examples, seed).
struct DeskCorpusSpec {
    std::size_t n_examples = 2000;
    std::uint64_t seed = 7;
    double keyword_noise = 0.08;  // chance a sentiment slot flips class
};

Corpus make_desk_corpus(const DeskCorpusSpec& spec);

}  // namespace setlstm
