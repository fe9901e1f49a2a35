// Acceptance suite: runs every criterion end to end and prints one
// PASS/FAIL line each. Criteria that name a CLI surface run the real
// binary (path in argv[1]); the rest drive the library directly.

#include "setlstm/desk_corpus.hpp"
#include "setlstm/experiments.hpp"
#include "setlstm/gradcheck.hpp"
#include "setlstm/trainer.hpp"

#include "dense_oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace setlstm;

namespace {

int g_failures = 0;

void report(int criterion, const char* label, bool ok, const std::string& detail) {
    std::printf("%s  criterion %d  %-24s %s\n", ok ? "PASS" : "FAIL", criterion, label,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& command) {
    CliResult result;
    FILE* pipe = popen((command + " 2>/dev/null").c_str(), "r");
    if (!pipe) return result;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) result.output += buf;
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// ---- shared fixtures ----

Corpus desk_corpus() {
    DeskCorpusSpec spec;
    spec.n_examples = 2000;
    spec.seed = 7;
    return make_desk_corpus(spec);
}

// Paper-scale dims with a desk-scale sequence length and epoch budget.
TrainConfig desk_full_config(double epsilon) {
    TrainConfig c;
    c.vocab_size = 20000;
    c.embed_dim = 256;
    c.hidden_dim = 256;
    c.seq_len = 20;
    c.n_classes = 2;
    c.epsilon = epsilon;
    c.zeta = 0.3;
    c.lr = 0.004;
    c.batch_size = 64;
    c.epochs = 10;
    c.seed = 3;
    return c;
}

// Smaller dims for the criteria that do not pin the paper's layer sizes.
TrainConfig desk_small_config() {
    TrainConfig c;
    c.vocab_size = 2000;
    c.embed_dim = 64;
    c.hidden_dim = 64;
    c.seq_len = 16;
    c.n_classes = 2;
    c.epsilon = 10.0;
    c.zeta = 0.4;
    c.lr = 0.004;
    c.batch_size = 64;
    c.epochs = 10;
    c.seed = 3;
    return c;
}

double best_accuracy(const Checkpoint& ckpt) {
    double best = 0.0;
    for (const MetricsRecord& rec : ckpt.history) best = std::max(best, rec.test_accuracy);
    return best;
}

// ---- criterion 1: parameter accounting via cmd_count_params ----

void criterion_1(const std::string& cli, const fs::path& scratch) {
    auto config_for = [&](double epsilon, const char* name) {
        TrainConfig c = desk_full_config(epsilon);
        c.seq_len = 100;
        const fs::path path = scratch / name;
        write_text(path, serialize_config(c));
        return path.string();
    };

    bool ok = true;
    std::string detail;

    const CliResult dense =
        run_cli(cli + " count-params --json --config " + config_for(0.0, "dense.cfg"));
    const CliResult e10 =
        run_cli(cli + " count-params --json --config " + config_for(10.0, "e10.cfg"));
    const CliResult e2 =
        run_cli(cli + " count-params --json --config " + config_for(2.0, "e2.cfg"));
    if (dense.exit_code != 0 || e10.exit_code != 0 || e2.exit_code != 0) {
        report(1, "parameter accounting", false, "count-params exited nonzero");
        return;
    }

    try {
        const json jd = json::parse(dense.output);
        const json j10 = json::parse(e10.output);
        const json j2 = json::parse(e2.output);

        const auto baseline = jd["dense_baseline"].get<std::int64_t>();
        ok &= baseline == 5645312;
        ok &= jd["sparse_total_ex_output"].get<std::int64_t>() == 5645312;

        const auto total10 = j10["sparse_total_ex_output"].get<std::int64_t>();
        const double sp10 = j10["sparsity_percent"].get<double>();
        ok &= std::llabs(total10 - 243442) <= static_cast<std::int64_t>(0.01 * 243442);
        ok &= sp10 >= 95.69 - 0.8 && sp10 <= 95.69 + 0.8;

        const double sp2 = j2["sparsity_percent"].get<double>();
        ok &= sp2 >= 99.1 - 0.3 && sp2 <= 99.1 + 0.3;

        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "dense=%lld total(e=10)=%lld sparsity(e=10)=%.2f%% sparsity(e=2)=%.2f%%",
                      static_cast<long long>(baseline), static_cast<long long>(total10),
                      sp10, sp2);
        detail = buf;
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("bad JSON: ") + e.what();
    }
    report(1, "parameter accounting", ok, detail);
}

// ---- criterion 2: gradient correctness via cmd_gradcheck ----

void criterion_2(const std::string& cli) {
    const CliResult r = run_cli(cli + " gradcheck --seed 42 --instances 20");
    bool ok = r.exit_code == 0 && r.output.find("gradcheck=PASS") != std::string::npos;
    double worst = -1.0;
    const auto pos = r.output.find("worst=");
    if (pos != std::string::npos) worst = std::atof(r.output.c_str() + pos + 6);
    ok &= worst >= 0.0 && worst < 1e-4;
    char buf[96];
    std::snprintf(buf, sizeof buf, "20 instances, worst_rel_err=%.3e (< 1e-4)", worst);
    report(2, "gradient correctness", ok, buf);
}

// ---- criterion 3: dense-oracle equivalence on 100 toy instances ----

void criterion_3() {
    Rng rng(mix64(99, 0x6f7261ULL));
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        ModelDims dims;
        dims.vocab = static_cast<Index>(3 + rng.uniform_index(6));
        dims.embed = static_cast<Index>(1 + rng.uniform_index(8));
        dims.hidden = static_cast<Index>(1 + rng.uniform_index(8));
        dims.seq_len = static_cast<Index>(1 + rng.uniform_index(8));
        dims.classes = static_cast<Index>(2 + rng.uniform_index(3));
        const Index batch = static_cast<Index>(1 + rng.uniform_index(8));

        const SetLstmModel model = init_model(dims, 2.0, rng).model;
        TokenMat tokens(batch, dims.seq_len);
        std::vector<std::int32_t> labels;
        for (Index b = 0; b < batch; ++b) {
            for (Index t = 0; t < dims.seq_len; ++t)
                tokens(b, t) = static_cast<std::int32_t>(
                    rng.uniform_index(static_cast<std::uint64_t>(dims.vocab)));
            labels.push_back(static_cast<std::int32_t>(
                rng.uniform_index(static_cast<std::uint64_t>(dims.classes))));
        }

        const ForwardResult fwd = model_forward(model, tokens);
        const oracle::DenseForward ref = oracle::dense_forward(model, tokens, labels);
        worst = std::max(worst, (fwd.lstm.h_last - ref.h_last).cwiseAbs().maxCoeff());
        worst = std::max(worst, (fwd.logits - ref.logits).cwiseAbs().maxCoeff());
        const double loss = softmax_cross_entropy(fwd.logits, labels).loss;
        worst = std::max(worst, std::abs(loss - ref.loss));
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "100 instances, max |sparse - dense| = %.2e", worst);
    report(3, "dense-oracle equivalence", worst <= 1e-12, buf);
}

// ---- criterion 4: rewiring invariants over a 10-epoch run ----

std::set<Position> removal_oracle(const SparseMatrix& w, double zeta) {
    std::set<Position> expected;
    std::vector<std::pair<double, Position>> pos, neg;
    for (std::size_t k = 0; k < static_cast<std::size_t>(w.nnz()); ++k) {
        const double v = w.value(k);
        if (v > 0.0) pos.push_back({v, w.position(k)});
        else if (v < 0.0) neg.push_back({v, w.position(k)});
        else expected.insert(w.position(k));
    }
    std::sort(pos.begin(), pos.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second < b.second;
    });
    std::sort(neg.begin(), neg.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const auto k_p = static_cast<std::size_t>(std::floor(zeta * static_cast<double>(pos.size())));
    const auto k_n = static_cast<std::size_t>(std::floor(zeta * static_cast<double>(neg.size())));
    for (std::size_t k = 0; k < k_p; ++k) expected.insert(pos[k].second);
    for (std::size_t k = 0; k < k_n; ++k) expected.insert(neg[k].second);
    return expected;
}

void criterion_4(const Corpus& corpus) {
    TrainConfig config = desk_small_config();  // zeta = 0.4, 10 epochs
    const PreparedData data = prepare_data(corpus, config);

    bool ok = true;
    std::string failure;
    std::array<std::int64_t, kSparseLayerCount> budget{};

    TrainOptions options;
    options.observer = [&](const EpochEvent& event) {
        for (std::size_t l = 0; l < kSparseLayerCount; ++l) {
            const SparseMatrix& before = event.pre_rewire.sparse_layer(l);
            const SparseMatrix& after = event.post_rewire.sparse_layer(l);
            if (event.epoch == 1) budget[l] = before.nnz();

            if (event.epoch != config.epochs && after.nnz() != budget[l]) {
                ok = false;
                failure = "nnz budget broken at epoch " + std::to_string(event.epoch);
            }

            const auto& report = event.reports[l];
            std::set<Position> reported(report.removed_positive.begin(),
                                        report.removed_positive.end());
            reported.insert(report.removed_negative.begin(), report.removed_negative.end());
            if (reported != removal_oracle(before, config.zeta)) {
                ok = false;
                failure = "removed set differs from the sort oracle (epoch " +
                          std::to_string(event.epoch) + ", layer " +
                          kSparseLayerNames[l] + ")";
            }

            if (!(*event.optimizer.sparse[l].mask == after.mask())) {
                ok = false;
                failure = "optimizer keys diverge from the mask";
            }
        }
    };
    const Checkpoint ckpt = train(config, data.train, data.test, options);
    (void)ckpt;
    report(4, "rewiring invariants", ok,
           ok ? "10 epochs, zeta=0.4: budgets, removal sets and state keys verified"
              : failure);
}

// ---- criterion 5: desk-scale trainability ----

void criterion_5(const Corpus& corpus) {
    const TrainConfig c10 = desk_full_config(10.0);
    const PreparedData d10 = prepare_data(corpus, c10);
    const Checkpoint run10 = train(c10, d10.train, d10.test);
    const double acc10 = best_accuracy(run10);
    const double sparsity10 = 100.0 * param_count_for(c10.dims(), 10.0).sparsity;

    // The extreme-sparsity network carries 5x fewer parameters and trains
    // with a larger step, as the reference runs do per dataset.
    TrainConfig c2 = desk_full_config(2.0);
    c2.lr = 0.01;
    const PreparedData d2 = prepare_data(corpus, c2);
    const Checkpoint run2 = train(c2, d2.train, d2.test);
    const double acc2 = best_accuracy(run2);
    const double sparsity2 = 100.0 * param_count_for(c2.dims(), 2.0).sparsity;

    // monotonic sanity: loss measured after epoch 1's updates < ln C
    const bool sane = run10.history[1].train_loss < std::log(2.0) &&
                      run2.history[1].train_loss < std::log(2.0);
    const bool ok = acc10 >= 0.90 && acc2 >= 0.85 && sane;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "eps=10 (%.2f%% sparse): acc=%.4f (>=0.90); eps=2 (%.2f%% sparse): "
                  "acc=%.4f (>=0.85)%s",
                  sparsity10, acc10, sparsity2, acc2,
                  sane ? "" : "; loss sanity FAILED");
    report(5, "desk-scale trainability", ok, buf);
}

// ---- criterion 6: similarity structure across trials ----

void criterion_6(const Corpus& corpus) {
    TrainConfig config = desk_full_config(10.0);
    const SimilarityResult r = run_similarity_experiment(config, corpus, 5, 2);

    const double cells = r.mean_offdiag_cells();
    const double embedding = r.mean_offdiag_embedding();
    const bool ok = cells >= 0.5 * r.cells_baseline && cells <= 1.5 * r.cells_baseline &&
                    embedding >= 0.5 * r.embedding_baseline &&
                    embedding <= 1.5 * r.embedding_baseline;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "cells %.4f vs baseline %.4f; embedding %.4f vs baseline %.4f (+-50%%)",
                  cells, r.cells_baseline, embedding, r.embedding_baseline);
    report(6, "similarity structure", ok, buf);
}

// ---- criterion 7: initialization effect on a fixed topology ----

void criterion_7(const Corpus& corpus) {
    TrainConfig donor_config = desk_small_config();
    const PreparedData data = prepare_data(corpus, donor_config);
    const Checkpoint donor = train(donor_config, data.train, data.test);

    std::vector<double> same, fresh;
    for (std::uint64_t pair = 0; pair < 5; ++pair) {
        const std::uint64_t seed = mix64(1000, pair);
        same.push_back(
            run_fixed_topology_experiment(donor, "same-as-checkpoint", corpus, seed, 6));
        fresh.push_back(run_fixed_topology_experiment(donor, "fresh", corpus, seed, 6));
    }

    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto variance = [&](const std::vector<double>& v) {
        const double m = mean(v);
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s / static_cast<double>(v.size());
    };

    const double mean_same = mean(same), mean_fresh = mean(fresh);
    const double var_same = variance(same), var_fresh = variance(fresh);
    const bool ok = mean_same >= mean_fresh && var_fresh >= var_same;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "same-init %.4f (var %.2e) vs fresh %.4f (var %.2e), 5 paired seeds",
                  mean_same, var_same, mean_fresh, var_fresh);
    report(7, "initialization effect", ok, buf);
}

// ---- criterion 8: bit-level determinism and resume equivalence ----

void criterion_8(const std::string& cli, const fs::path& scratch,
                 const fs::path& corpus_tsv) {
    TrainConfig config = desk_small_config();
    config.epochs = 6;
    const fs::path cfg = scratch / "det.cfg";
    write_text(cfg, serialize_config(config));

    const std::string base = cli + " train --config " + cfg.string() + " --data " +
                             corpus_tsv.string() + " --out ";
    const fs::path run1 = scratch / "det_run1";
    const fs::path run2 = scratch / "det_run2";
    const fs::path run3 = scratch / "det_run3";
    const fs::path run4 = scratch / "det_run4";

    bool ok = true;
    std::string detail = "reruns byte-identical; resumed run matches uninterrupted";
    if (run_cli(base + run1.string()).exit_code != 0 ||
        run_cli(base + run2.string()).exit_code != 0) {
        report(8, "determinism", false, "training run exited nonzero");
        return;
    }
    ok &= file_bytes(run1 / "metrics.csv") == file_bytes(run2 / "metrics.csv");
    ok &= file_bytes(run1 / "final.ckpt") == file_bytes(run2 / "final.ckpt");
    if (!ok) detail = "identical reruns diverged";

    if (run_cli(base + run3.string() + " --stop-after 3").exit_code != 0) {
        report(8, "determinism", false, "stop-after run exited nonzero");
        return;
    }
    if (run_cli(base + run4.string() + " --resume " + (run3 / "last.ckpt").string())
            .exit_code != 0) {
        report(8, "determinism", false, "resumed run exited nonzero");
        return;
    }
    const bool resume_ok =
        file_bytes(run1 / "metrics.csv") == file_bytes(run4 / "metrics.csv") &&
        file_bytes(run1 / "final.ckpt") == file_bytes(run4 / "final.ckpt");
    if (!resume_ok) detail = "resumed run diverged from the uninterrupted one";
    report(8, "determinism", ok && resume_ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-setlstm-cli>\n");
        return 2;
    }
    const std::string cli = argv[1];
    unsetenv("SETLSTM_SEED");  // the suite owns its seeds

    char scratch_template[] = "/tmp/setlstm_acceptance_XXXXXX";
    const char* scratch_cstr = mkdtemp(scratch_template);
    if (!scratch_cstr) {
        std::fprintf(stderr, "cannot create scratch directory\n");
        return 2;
    }
    const fs::path scratch(scratch_cstr);

    const Corpus corpus = desk_corpus();
    const fs::path corpus_tsv = scratch / "desk_corpus.tsv";
    write_corpus_tsv(corpus, corpus_tsv.string());

    criterion_1(cli, scratch);
    criterion_2(cli);
    criterion_3();
    criterion_4(corpus);
    criterion_5(corpus);
    criterion_6(corpus);
    criterion_7(corpus);
    criterion_8(cli, scratch, corpus_tsv);

    std::error_code ec;
    fs::remove_all(scratch, ec);

    if (g_failures > 0) {
        std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("acceptance: all 8 criteria passed\n");
    return 0;
}
