#include "setlstm/data.hpp"

#include "setlstm/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace setlstm {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            std::size_t lo = i, hi = j;
            while (lo < hi && !std::isalnum(static_cast<unsigned char>(text[lo]))) ++lo;
            while (hi > lo && !std::isalnum(static_cast<unsigned char>(text[hi - 1]))) --hi;
            if (hi > lo) {
                std::string word = text.substr(lo, hi - lo);
                for (char& ch : word)
                    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
                tokens.push_back(std::move(word));
            }
        }
        i = j;
    }
    return tokens;
}

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path);

    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": missing TAB separator");
        std::int32_t label;
        try {
            std::size_t consumed = 0;
            label = std::stoi(line.substr(0, tab), &consumed);
            if (consumed != tab || label < 0) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": bad label field");
        }
        corpus.examples.push_back(Example{label, line.substr(tab + 1)});
    }
    if (corpus.examples.empty()) throw EmptyCorpus("corpus is empty: " + path);

    std::int32_t max_label = 0;
    for (const Example& e : corpus.examples) max_label = std::max(max_label, e.label);

    std::ifstream classes(path + ".classes");
    if (classes) {
        std::string name;
        while (std::getline(classes, name))
            if (!name.empty()) corpus.class_names.push_back(name);
    }
    if (corpus.class_names.empty()) {
        for (std::int32_t c = 0; c <= max_label; ++c)
            corpus.class_names.push_back("class" + std::to_string(c));
    }
    if (max_label >= static_cast<std::int32_t>(corpus.class_names.size()))
        throw ParseError("label " + std::to_string(max_label) +
                         " exceeds declared class count " +
                         std::to_string(corpus.class_names.size()));
    return corpus;
}

void write_corpus_tsv(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write corpus file: " + path);
    for (const Example& e : corpus.examples) out << e.label << '\t' << e.text << '\n';
    std::ofstream classes(path + ".classes");
    if (!classes) throw IoError("cannot write class file: " + path + ".classes");
    for (const std::string& name : corpus.class_names) classes << name << '\n';
}

Vocabulary build_vocab(const Corpus& corpus, Index capacity) {
    if (capacity < 3) throw ConfigError("build_vocab: capacity must be at least 3");

    // std::map keeps ties resolvable lexicographically without a second key.
    std::map<std::string, std::int64_t> freq;
    for (const Example& e : corpus.examples)
        for (std::string& w : tokenize(e.text)) freq[std::move(w)]++;

    std::vector<std::pair<std::string, std::int64_t>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocabulary vocab;
    vocab.capacity = capacity;
    const std::size_t keep =
        std::min(ranked.size(), static_cast<std::size_t>(capacity) - 2);
    for (std::size_t k = 0; k < keep; ++k)
        vocab.ids.emplace(ranked[k].first, static_cast<std::int32_t>(k + 2));
    return vocab;
}

std::vector<std::int32_t> encode(const std::string& text, const Vocabulary& vocab, Index t) {
    const std::vector<std::string> words = tokenize(text);
    std::vector<std::int32_t> out(static_cast<std::size_t>(t), kPadId);
    const std::size_t take = std::min(words.size(), static_cast<std::size_t>(t));
    const std::size_t word_start = words.size() - take;  // keep the last T tokens
    const std::size_t pad = static_cast<std::size_t>(t) - take;
    for (std::size_t k = 0; k < take; ++k)
        out[pad + k] = vocab.lookup(words[word_start + k]);
    return out;
}

EncodedDataset encode_dataset(const Corpus& corpus, const Vocabulary& vocab, Index t) {
    EncodedDataset data;
    data.tokens.resize(static_cast<Eigen::Index>(corpus.size()), t);
    data.labels.reserve(corpus.size());
    for (std::size_t n = 0; n < corpus.size(); ++n) {
        const auto row = encode(corpus.examples[n].text, vocab, t);
        for (Index k = 0; k < t; ++k)
            data.tokens(static_cast<Eigen::Index>(n), k) = row[static_cast<std::size_t>(k)];
        data.labels.push_back(corpus.examples[n].label);
    }
    return data;
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split: ratio must be in (0,1)");
    const std::size_t n = corpus.size();
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    Rng rng(seed);
    for (std::size_t k = n; k > 1; --k) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(k));
        std::swap(order[k - 1], order[j]);
    }
    const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
    Corpus train, test;
    train.class_names = corpus.class_names;
    test.class_names = corpus.class_names;
    for (std::size_t k = 0; k < n; ++k) {
        (k < n_train ? train : test).examples.push_back(corpus.examples[order[k]]);
    }
    return {std::move(train), std::move(test)};
}

std::vector<Batch> make_batches(const EncodedDataset& data, Index batch_size, Rng& rng) {
    if (batch_size < 1) throw ConfigError("make_batches: batch_size must be >= 1");
    const auto n = static_cast<std::size_t>(data.size());
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    for (std::size_t k = n; k > 1; --k) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(k));
        std::swap(order[k - 1], order[j]);
    }

    std::vector<Batch> batches;
    const auto b = static_cast<std::size_t>(batch_size);
    for (std::size_t start = 0; start < n; start += b) {
        const std::size_t count = std::min(b, n - start);
        Batch batch;
        batch.tokens.resize(static_cast<Eigen::Index>(count), data.tokens.cols());
        batch.labels.reserve(count);
        for (std::size_t k = 0; k < count; ++k) {
            batch.tokens.row(static_cast<Eigen::Index>(k)) =
                data.tokens.row(static_cast<Eigen::Index>(order[start + k]));
            batch.labels.push_back(data.labels[order[start + k]]);
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

}  // namespace setlstm
