// setlstm: train, evaluate and analyze sparse evolutionary LSTM text
// classifiers. stdout carries only the declared machine-readable lines;
// everything else goes to stderr.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error, 3 verification
// failure (gradcheck).

#include "setlstm/data.hpp"
#include "setlstm/errors.hpp"
#include "setlstm/experiments.hpp"
#include "setlstm/gradcheck.hpp"
#include "setlstm/model.hpp"
#include "setlstm/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace setlstm;

namespace {

// Seed precedence: --seed flag > SETLSTM_SEED env > config file.
void resolve_seed(TrainConfig& config, const std::optional<std::uint64_t>& flag_seed) {
    if (flag_seed) {
        config.seed = *flag_seed;
        return;
    }
    if (const char* env = std::getenv("SETLSTM_SEED")) {
        try {
            config.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("bad SETLSTM_SEED value: '") + env + "'");
        }
    }
}

void echo_config(const TrainConfig& config) {
    std::cerr << "# resolved config\n";
    std::istringstream lines(serialize_config(config));
    std::string line;
    while (std::getline(lines, line)) std::cerr << "#   " << line << '\n';
}

Corpus load_corpus_checked(const std::string& path, const TrainConfig& config) {
    Corpus corpus = load_corpus(path);
    if (static_cast<Index>(corpus.class_names.size()) != config.n_classes)
        throw ConfigError("corpus declares " + std::to_string(corpus.class_names.size()) +
                          " classes but config expects " + std::to_string(config.n_classes));
    return corpus;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("short write on " + path.string());
}

void epoch_progress(const EpochEvent& event) {
    std::fprintf(stderr,
                 "epoch %d  train_loss=%.4f  train_acc=%.4f  test_acc=%.4f  nnz=%lld\n",
                 event.epoch, event.metrics.train_loss, event.metrics.train_accuracy,
                 event.metrics.test_accuracy,
                 static_cast<long long>(event.metrics.nnz_total));
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir, const std::string& resume_path,
              const std::optional<std::uint64_t>& seed, Index stop_after) {
    TrainConfig config = load_config(config_path);
    resolve_seed(config, seed);
    echo_config(config);

    const Corpus corpus = load_corpus_checked(data_path, config);
    const PreparedData data = prepare_data(corpus, config);

    fs::create_directories(out_dir);
    TrainOptions options;
    options.observer = epoch_progress;
    options.stop_after = stop_after;
    options.checkpoint_each_epoch_path = (fs::path(out_dir) / "last.ckpt").string();

    Checkpoint ckpt;
    if (!resume_path.empty()) {
        ckpt = resume_train(load_checkpoint(resume_path), config, data.train, data.test,
                            options);
    } else {
        ckpt = train(config, data.train, data.test, options);
    }

    write_file(fs::path(out_dir) / "metrics.csv", metrics_csv(ckpt.history));
    save_checkpoint(ckpt, (fs::path(out_dir) / "final.ckpt").string());

    std::printf("test_acc=%.6f\n", ckpt.final_test_accuracy());
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    echo_config(ckpt.config);
    const Corpus corpus = load_corpus_checked(data_path, ckpt.config);
    const PreparedData data = prepare_data(corpus, ckpt.config);
    const double acc = evaluate(ckpt.model, data.test, ckpt.config.batch_size);
    std::printf("test_acc=%.6f\n", acc);
    return 0;
}

json report_to_json(const ParamCountReport& r) {
    json j;
    j["embedding_nnz"] = r.embedding_nnz;
    for (std::size_t g = 0; g < 4; ++g) {
        j[std::string("w_x") + kGateNames[g] + "_nnz"] = r.w_x_nnz[g];
        j[std::string("w_h") + kGateNames[g] + "_nnz"] = r.w_h_nnz[g];
    }
    j["cell_nnz"] = r.cell_nnz;
    j["bias_count"] = r.bias_count;
    j["output_count"] = r.output_count;
    j["sparse_total_ex_output"] = r.sparse_ex_output;
    j["total"] = r.total;
    j["dense_baseline"] = r.dense_baseline;
    j["sparsity"] = r.sparsity;
    j["sparsity_percent"] = 100.0 * r.sparsity;
    return j;
}

int cmd_count_params(const std::string& config_path, bool as_json,
                     const std::optional<std::uint64_t>& seed) {
    TrainConfig config = load_config(config_path);
    resolve_seed(config, seed);
    echo_config(config);
    const ParamCountReport r = param_count_for(config.dims(), config.epsilon);

    if (as_json) {
        std::printf("%s\n", report_to_json(r).dump(2).c_str());
        return 0;
    }
    std::printf("%-24s %14s\n", "layer", "parameters");
    std::printf("%-24s %14lld\n", "embedding", static_cast<long long>(r.embedding_nnz));
    for (std::size_t g = 0; g < 4; ++g)
        std::printf("w_x%-21s %14lld\n", kGateNames[g], static_cast<long long>(r.w_x_nnz[g]));
    for (std::size_t g = 0; g < 4; ++g)
        std::printf("w_h%-21s %14lld\n", kGateNames[g], static_cast<long long>(r.w_h_nnz[g]));
    std::printf("%-24s %14lld\n", "biases", static_cast<long long>(r.bias_count));
    std::printf("%-24s %14lld\n", "output (dense)", static_cast<long long>(r.output_count));
    std::printf("%-24s %14lld\n", "sparse_total_ex_output",
                static_cast<long long>(r.sparse_ex_output));
    std::printf("%-24s %14lld\n", "total", static_cast<long long>(r.total));
    std::printf("%-24s %14lld\n", "dense_baseline", static_cast<long long>(r.dense_baseline));
    std::printf("%-24s %13.4f%%\n", "sparsity", 100.0 * r.sparsity);
    return 0;
}

int cmd_gradcheck(const GradCheckOptions& options) {
    const GradCheckReport report = run_gradcheck(options);
    for (const GradCheckClassResult& cls : report.classes)
        std::printf("class=%s worst_rel_err=%.3e checked=%lld\n", cls.parameter_class.c_str(),
                    cls.worst_relative_error, static_cast<long long>(cls.checked));
    std::printf("gradcheck=%s worst=%.3e tolerance=%.1e\n", report.passed ? "PASS" : "FAIL",
                report.worst_relative_error, options.tolerance);
    return report.passed ? 0 : 3;
}

int cmd_similarity(const std::string& config_path, const std::string& data_path,
                   int trials, const std::string& out_dir, int jobs,
                   const std::optional<std::uint64_t>& seed) {
    TrainConfig config = load_config(config_path);
    resolve_seed(config, seed);
    echo_config(config);
    const Corpus corpus = load_corpus_checked(data_path, config);

    const SimilarityResult result = run_similarity_experiment(config, corpus, trials, jobs);

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "cells_similarity.csv", similarity_csv(result.cells));
    write_file(fs::path(out_dir) / "embedding_similarity.csv",
               similarity_csv(result.embedding));
    char baseline[128];
    std::snprintf(baseline, sizeof baseline,
                  "cells_baseline=%.6f\nembedding_baseline=%.6f\n", result.cells_baseline,
                  result.embedding_baseline);
    write_file(fs::path(out_dir) / "baseline.txt", baseline);

    std::printf("cells_mean_offdiag=%.6f\n", result.mean_offdiag_cells());
    std::printf("embedding_mean_offdiag=%.6f\n", result.mean_offdiag_embedding());
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& data_path,
              const std::string& axis_name, const std::vector<double>& values, int trials,
              const std::string& out_dir, int jobs,
              const std::optional<std::uint64_t>& seed) {
    TrainConfig config = load_config(config_path);
    resolve_seed(config, seed);
    echo_config(config);
    const Corpus corpus = load_corpus_checked(data_path, config);
    const SweepAxis axis = axis_name == "zeta" ? SweepAxis::zeta : SweepAxis::epsilon;

    const std::vector<SweepRow> rows = run_sweep(config, corpus, axis, values, trials, jobs);
    const std::string csv = sweep_csv(rows, axis);

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "sweep.csv", csv);
    std::fputs(csv.c_str(), stdout);
    return 0;
}

int cmd_fixed_topology(const std::string& ckpt_path, const std::string& data_path,
                       const std::string& mode, const std::optional<std::uint64_t>& seed,
                       Index epochs) {
    const Checkpoint donor = load_checkpoint(ckpt_path);
    TrainConfig config = donor.config;
    resolve_seed(config, seed);
    echo_config(config);
    const Corpus corpus = load_corpus_checked(data_path, donor.config);
    const double acc =
        run_fixed_topology_experiment(donor, mode, corpus, config.seed, epochs);
    std::printf("test_acc=%.6f\n", acc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SET-LSTM: sparse evolutionary training for LSTM text classifiers"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_dir, ckpt_path, resume_path;
    std::optional<std::uint64_t> seed;
    int trials = 5;
    int jobs = 1;
    Index stop_after = 0;
    Index ft_epochs = -1;

    auto* train_cmd = app.add_subcommand("train", "train a SET-LSTM and write metrics + checkpoint");
    train_cmd->add_option("--config", config_path, "config file (key=value)")->required();
    train_cmd->add_option("--data", data_path, "corpus TSV (label<TAB>text)")->required();
    train_cmd->add_option("--out", out_dir, "output directory")->required();
    train_cmd->add_option("--resume", resume_path, "checkpoint to continue from");
    train_cmd->add_option("--seed", seed, "override the config seed");
    train_cmd->add_option("--stop-after", stop_after,
                          "stop after N epochs (mid-training checkpoint)");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the corpus test split");
    eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
    eval_cmd->add_option("--data", data_path, "corpus TSV")->required();

    std::string axis = "zeta";
    std::string values_arg;
    auto* sweep_cmd = app.add_subcommand("sweep", "accuracy over a zeta or epsilon grid");
    sweep_cmd->add_option("--config", config_path)->required();
    sweep_cmd->add_option("--data", data_path)->required();
    sweep_cmd->add_option("--axis", axis)->check(CLI::IsMember({"zeta", "epsilon"}));
    sweep_cmd->add_option("--values", values_arg, "comma-separated axis values")->required();
    sweep_cmd->add_option("--trials", trials, "trials per value");
    sweep_cmd->add_option("--out", out_dir)->required();
    sweep_cmd->add_option("--jobs", jobs, "parallel trials");
    sweep_cmd->add_option("--seed", seed);

    auto* sim_cmd = app.add_subcommand("similarity",
                                       "topology similarity across independent trials");
    sim_cmd->add_option("--config", config_path)->required();
    sim_cmd->add_option("--data", data_path)->required();
    sim_cmd->add_option("--trials", trials)->check(CLI::Range(2, 1000));
    sim_cmd->add_option("--out", out_dir)->required();
    sim_cmd->add_option("--jobs", jobs);
    sim_cmd->add_option("--seed", seed);

    std::string ft_mode = "fresh";
    auto* ft_cmd = app.add_subcommand("fixed-topology",
                                      "retrain on a checkpoint's best topology");
    ft_cmd->add_option("--ckpt", ckpt_path)->required();
    ft_cmd->add_option("--data", data_path)->required();
    ft_cmd->add_option("--mode", ft_mode)
        ->check(CLI::IsMember({"fresh", "same-as-checkpoint"}));
    ft_cmd->add_option("--seed", seed);
    ft_cmd->add_option("--epochs", ft_epochs, "retraining epochs (default: donor's)");

    bool as_json = false;
    auto* count_cmd = app.add_subcommand("count-params", "parameter accounting report");
    count_cmd->add_option("--config", config_path)->required();
    count_cmd->add_flag("--json", as_json, "emit JSON instead of the table");

    GradCheckOptions gc;
    std::string sizes_arg;
    auto* grad_cmd = app.add_subcommand("gradcheck",
                                        "finite-difference gradient verification");
    grad_cmd->add_option("--seed", gc.seed);
    grad_cmd->add_option("--instances", gc.instances)->check(CLI::PositiveNumber);
    grad_cmd->add_option("--sizes", sizes_arg, "max B,T,D,H (default 6,6,6,6)");
    grad_cmd->add_flag("--inject-gradient-error", gc.inject_error)->group("");  // test hook

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 1;
    }

    try {
        if (*train_cmd)
            return cmd_train(config_path, data_path, out_dir, resume_path, seed, stop_after);
        if (*eval_cmd) return cmd_eval(ckpt_path, data_path);
        if (*count_cmd) return cmd_count_params(config_path, as_json, seed);
        if (*grad_cmd) {
            if (const char* env = std::getenv("SETLSTM_SEED"); env && !grad_cmd->count("--seed"))
                gc.seed = std::stoull(env);
            if (!sizes_arg.empty()) {
                int b = 0, t = 0, d = 0, h = 0;
                if (std::sscanf(sizes_arg.c_str(), "%d,%d,%d,%d", &b, &t, &d, &h) != 4 ||
                    b < 1 || t < 1 || d < 1 || h < 1)
                    throw ConfigError("--sizes expects B,T,D,H positive integers");
                gc.max_batch = b;
                gc.max_seq = t;
                gc.max_embed = d;
                gc.max_hidden = h;
            }
            return cmd_gradcheck(gc);
        }
        if (*sim_cmd)
            return cmd_similarity(config_path, data_path, trials, out_dir, jobs, seed);
        if (*sweep_cmd) {
            std::vector<double> values;
            std::istringstream vs(values_arg);
            std::string item;
            while (std::getline(vs, item, ',')) {
                try {
                    values.push_back(std::stod(item));
                } catch (const std::exception&) {
                    throw ConfigError("bad --values entry: '" + item + "'");
                }
            }
            return cmd_sweep(config_path, data_path, axis, values, trials, out_dir, jobs,
                             seed);
        }
        if (*ft_cmd)
            return cmd_fixed_topology(ckpt_path, data_path, ft_mode, seed, ft_epochs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
