// Generates the bundled synthetic sentiment corpus (TSV + .classes sidecar).
// Deterministic given --seed.

#include "setlstm/data.hpp"
#include "setlstm/desk_corpus.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"generate the synthetic two-class sentiment corpus"};
    std::string out_path = "desk_corpus.tsv";
    setlstm::DeskCorpusSpec spec;
    app.add_option("--out", out_path, "output TSV path");
    app.add_option("--n", spec.n_examples, "number of examples");
    app.add_option("--seed", spec.seed, "generator seed");
    app.add_option("--keyword-noise", spec.keyword_noise,
                   "chance a sentiment slot flips class");
    CLI11_PARSE(app, argc, argv);

    try {
        const setlstm::Corpus corpus = setlstm::make_desk_corpus(spec);
        setlstm::write_corpus_tsv(corpus, out_path);
        std::fprintf(stderr, "wrote %zu examples to %s (+ .classes)\n",
                     corpus.examples.size(), out_path.c_str());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
