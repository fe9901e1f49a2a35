#pragma once

#include "setlstm/rng.hpp"
#include "setlstm/types.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace setlstm {

struct Example {
    std::int32_t label;
    std::string text;
};

struct Corpus {
    std::vector<Example> examples;
    std::vector<std::string> class_names;

    std::size_t size() const { return examples.size(); }
};

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kOovId = 1;

// word -> id map with PAD=0 and OOV=1 reserved; words ranked by descending
// corpus frequency, ties broken lexicographically.
struct Vocabulary {
    std::unordered_map<std::string, std::int32_t> ids;
    Index capacity = 0;  // V

    std::int32_t lookup(const std::string& word) const {
        auto it = ids.find(word);
        return it == ids.end() ? kOovId : it->second;
    }
};

struct EncodedDataset {
    TokenMat tokens;                  // N x T
    std::vector<std::int32_t> labels; // N

    Eigen::Index size() const { return tokens.rows(); }
};

struct Batch {
    TokenMat tokens;                  // B x T
    std::vector<std::int32_t> labels; // B
};

// lowercase, whitespace split, non-alphanumeric edge punctuation stripped.
std::vector<std::string> tokenize(const std::string& text);

// "<label>\t<text>" per line; sidecar "<path>.classes" names the classes.
Corpus load_corpus(const std::string& path);

void write_corpus_tsv(const Corpus& corpus, const std::string& path);

Vocabulary build_vocab(const Corpus& corpus, Index capacity);

// Unknown words map to OOV; sequences keep the last T tokens and are
// left-padded with PAD.
std::vector<std::int32_t> encode(const std::string& text, const Vocabulary& vocab, Index t);

EncodedDataset encode_dataset(const Corpus& corpus, const Vocabulary& vocab, Index t);

// Deterministic shuffled split; train gets floor(ratio * N) examples.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double ratio, std::uint64_t seed);

// Shuffled mini-batches; the final partial batch is kept.
std::vector<Batch> make_batches(const EncodedDataset& data, Index batch_size, Rng& rng);

}  // namespace setlstm
