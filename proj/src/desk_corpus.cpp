#include "setlstm/desk_corpus.hpp"

#include "setlstm/rng.hpp"

#include <array>
#include <string>
#include <vector>

namespace setlstm {

namespace {

const std::array<const char*, 24> kPositive = {
    "good",      "great",     "excellent", "wonderful", "amazing",  "superb",
    "delightful", "fantastic", "brilliant", "charming",  "lovely",   "enjoyable",
    "perfect",   "impressive", "memorable", "satisfying", "fresh",    "engaging",
    "masterful", "stunning",  "touching",  "funny",      "clever",   "rewarding"};

const std::array<const char*, 24> kNegative = {
    "bad",       "terrible", "awful",    "dreadful", "boring",   "tedious",
    "disappointing", "weak", "horrible", "painful",  "bland",    "messy",
    "clumsy",    "forgettable", "annoying", "dull",   "shallow",  "pointless",
    "lazy",      "stale",    "confusing", "cheap",   "hollow",   "grating"};

const std::array<const char*, 40> kFiller = {
    "the",   "movie",  "film",   "plot",    "acting",  "story",  "scene",   "script",
    "cast",  "music",  "ending", "beginning", "overall", "quite", "really", "very",
    "was",   "felt",   "seemed", "looked",  "a",       "an",     "this",    "that",
    "with",  "and",    "but",    "also",    "in",      "of",     "we",      "i",
    "it",    "its",    "some",   "most",    "camera",  "dialogue", "pace",  "tone"};

}  // namespace

Corpus make_desk_corpus(const DeskCorpusSpec& spec) {
    Rng rng(mix64(spec.seed, 0x6465736bULL));  // "desk"

    Corpus corpus;
    corpus.class_names = {"negative", "positive"};
    corpus.examples.reserve(spec.n_examples);

    for (std::size_t n = 0; n < spec.n_examples; ++n) {
        const std::int32_t label = static_cast<std::int32_t>(n % 2);  // balanced
        const std::size_t length = 6 + rng.uniform_index(13);         // 6..18 tokens
        const std::size_t keywords = 2 + rng.uniform_index(3);        // 2..4 slots

        // Pick keyword slots among the token positions.
        std::vector<bool> is_keyword(length, false);
        std::size_t placed = 0;
        while (placed < keywords) {
            const auto p = static_cast<std::size_t>(rng.uniform_index(length));
            if (!is_keyword[p]) {
                is_keyword[p] = true;
                ++placed;
            }
        }

        std::string text;
        for (std::size_t p = 0; p < length; ++p) {
            if (!text.empty()) text += ' ';
            if (is_keyword[p]) {
                const bool flip = rng.uniform(0.0, 1.0) < spec.keyword_noise;
                const bool positive = (label == 1) != flip;
                const auto& lexicon = positive ? kPositive : kNegative;
                text += lexicon[rng.uniform_index(lexicon.size())];
            } else {
                text += kFiller[rng.uniform_index(kFiller.size())];
            }
        }
        corpus.examples.push_back(Example{label, std::move(text)});
    }
    return corpus;
}

}  // namespace setlstm
