// Command-line entry point: gen, train, eval, ablate, generalize, predict.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vip/common/error.hpp"
#include "vip/eval/experiments.hpp"
#include "vip/scenario/dataset.hpp"
#include "vip/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kGeneration = 3, kMissing = 4 };

struct ExitError {
    int code;
    std::string message;
};

[[noreturn]] void fail(int code, const std::string& msg) { throw ExitError{code, msg}; }

void require_file(const fs::path& p, const std::string& what, int code = kMissing) {
    if (!fs::exists(p)) fail(code, what + " not found: " + p.string());
}

json read_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f) fail(kConfig, "config file not found: " + path);
    try {
        json j;
        f >> j;
        if (!j.is_object()) fail(kConfig, "config file must hold a JSON object");
        for (const auto& [k, v] : j.items()) {
            if (k != "gen" && k != "train") fail(kConfig, "unknown config section '" + k + "' (gen, train)");
        }
        return j;
    } catch (const json::exception& e) {
        fail(kConfig, std::string("config file: ") + e.what());
    }
}

struct TrainFlags {
    std::optional<double> lr, dropout, recurrent_dropout;
    std::optional<std::size_t> batch_size, windows_per_case, hidden, layers, grad_chunk;
    std::optional<int> max_epochs, patience, t_min, t_max;
    std::optional<std::string> monitor;

    void add_to(CLI::App* app) {
        app->add_option("--lr", lr, "Adam learning rate [1e-4]");
        app->add_option("--batch-size", batch_size, "windows per mini-batch [256]");
        app->add_option("--max-epochs", max_epochs, "epoch limit [400]");
        app->add_option("--patience", patience, "epochs without validation improvement before stopping [6]");
        app->add_option("--t-min", t_min, "first window end time in seconds [60]");
        app->add_option("--t-max", t_max, "window end time range limit in seconds [180]");
        app->add_option("--windows-per-case", windows_per_case, "evenly spaced windows per case [24]");
        app->add_option("--dropout", dropout, "input dropout rate [0.5]");
        app->add_option("--recurrent-dropout", recurrent_dropout, "recurrent dropout rate [0.5]");
        app->add_option("--hidden", hidden, "cells per layer [32]");
        app->add_option("--layers", layers, "stacked layers [3]");
        app->add_option("--grad-chunk", grad_chunk, "windows per gradient work unit [32]");
        app->add_option("--monitor", monitor, "early-stopping metric: accuracy or loss [accuracy]")
            ->check(CLI::IsMember({"accuracy", "loss"}));
    }

    vip::train::TrainConfig resolve(const json& config) const {
        vip::train::TrainConfig cfg;
        if (config.contains("train")) cfg.merge_json(config.at("train"));
        json j = json::object();
        if (lr) j["learning_rate"] = *lr;
        if (batch_size) j["batch_size"] = *batch_size;
        if (max_epochs) j["max_epochs"] = *max_epochs;
        if (patience) j["patience"] = *patience;
        if (t_min) j["t_min"] = *t_min;
        if (t_max) j["t_max"] = *t_max;
        if (windows_per_case) j["windows_per_case"] = *windows_per_case;
        if (dropout) j["dropout_input"] = *dropout;
        if (recurrent_dropout) j["dropout_recurrent"] = *recurrent_dropout;
        if (hidden) j["hidden"] = *hidden;
        if (layers) j["layers"] = *layers;
        if (grad_chunk) j["grad_chunk"] = *grad_chunk;
        if (monitor) j["monitor"] = *monitor;
        cfg.merge_json(j);
        return cfg;
    }
};

void print_line(const std::string& s) {
    std::cout << s << '\n' << std::flush;
}

vip::eval::Datasets open_datasets(const fs::path& dir) {
    require_file(dir / "header.json", "dataset");
    for (const char* split : vip::scenario::kSplitNames) {
        require_file(dir / (std::string(split) + ".features.bin"), "dataset split");
    }
    return vip::eval::load_datasets(dir);
}

void print_histogram(const vip::scenario::GenerationReport& r) {
    const auto& names = vip::scenario::class_names();
    std::printf("%-6s", "t=180");
    for (const auto& n : names) std::printf(" %10s", n.c_str());
    std::printf("\n");
    for (std::size_t s = 0; s < 3; ++s) {
        std::size_t total = 0;
        for (auto v : r.at_t180[s]) total += v;
        std::printf("%-6s", vip::scenario::kSplitNames[s]);
        for (auto v : r.at_t180[s]) {
            std::printf(" %6zu %2.0f%%", v, total ? 100.0 * static_cast<double>(v) / static_cast<double>(total) : 0.0);
        }
        std::printf("\n");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Voltage instability prediction: grid simulation, LSTM training and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    std::size_t workers = 1;
    std::string config_path;
    app.add_option("--workers", workers, "worker threads; results do not depend on this value")
        ->check(CLI::PositiveNumber);
    app.add_option("--config", config_path, "JSON file with \"gen\" and/or \"train\" sections; flags override it");

    // gen
    auto* gen = app.add_subcommand("gen", "simulate paired N-1 / N-1-1 cases and write a dataset");
    std::uint64_t gen_seed = 0;
    std::string grid_path, gen_out = "dataset";
    std::optional<std::size_t> train_pairs, train_n1, train_n11, val_n1, val_n11, test_n1, test_n11, export_csv,
        max_attempts;
    std::optional<int> horizon;
    gen->add_option("--seed", gen_seed, "random seed")->required();
    gen->add_option("--grid", grid_path, "grid description JSON [data/grid12.json]");
    gen->add_option("--out", gen_out, "dataset directory")->capture_default_str();
    gen->add_option("--train-pairs", train_pairs, "N: train with N N-1 and 2N N-1-1 cases");
    gen->add_option("--train-n1", train_n1, "N-1 training cases [2000]");
    gen->add_option("--train-n11", train_n11, "N-1-1 training cases [4000]");
    gen->add_option("--val-n1", val_n1, "N-1 validation cases [250]");
    gen->add_option("--val-n11", val_n11, "N-1-1 validation cases [500]");
    gen->add_option("--test-n1", test_n1, "N-1 test cases [500]");
    gen->add_option("--test-n11", test_n11, "N-1-1 test cases [500]");
    gen->add_option("--export-csv", export_csv, "cases per split also written as CSV [0]");
    gen->add_option("--max-attempts", max_attempts, "operating-condition draws per pair before aborting [100]");
    gen->add_option("--horizon", horizon, "simulated seconds [560]");

    // train
    auto* tr = app.add_subcommand("train", "train one model and write a checkpoint directory");
    std::uint64_t train_seed = 0;
    std::string train_data = "dataset", train_out, model = "lstm-60", regime_name = "full";
    std::size_t small_batch = 250;
    TrainFlags train_flags;
    tr->add_option("--seed", train_seed, "random seed")->required();
    tr->add_option("--data", train_data, "dataset directory")->capture_default_str();
    tr->add_option("--out", train_out, "checkpoint directory [runs/<model>]");
    tr->add_option("--model", model, "lstm-60, lstm-30 or ffnn")
        ->capture_default_str()
        ->check(CLI::IsMember({"lstm-60", "lstm-30", "ffnn"}));
    tr->add_option("--regime", regime_name, "training cases: full, small-batch or n1-only")
        ->capture_default_str()
        ->check(CLI::IsMember({"full", "small-batch", "n1-only"}));
    tr->add_option("--small-batch", small_batch, "N-1-1 cases in the small-batch regime")->capture_default_str();
    train_flags.add_to(tr);

    // eval
    auto* ev = app.add_subcommand("eval", "accuracy over time and confusion table of one checkpoint");
    std::string eval_data = "dataset", eval_ckpt, eval_out = "eval";
    ev->add_option("--data", eval_data, "dataset directory")->capture_default_str();
    ev->add_option("--checkpoint", eval_ckpt, "checkpoint directory")->required();
    ev->add_option("--out", eval_out, "output directory")->capture_default_str();

    // ablate
    auto* ab = app.add_subcommand("ablate", "compare lstm-60, lstm-30 and ffnn on N-1-1 test cases");
    std::uint64_t ablate_seed = 0;
    std::string ablate_data = "dataset", ablate_out = "ablation";
    TrainFlags ablate_flags;
    ab->add_option("--seed", ablate_seed, "random seed")->required();
    ab->add_option("--data", ablate_data, "dataset directory")->capture_default_str();
    ab->add_option("--out", ablate_out, "output directory; trained models are kept under models/")->capture_default_str();
    ablate_flags.add_to(ab);

    // generalize
    auto* gz = app.add_subcommand("generalize", "compare training regimes on N-1-1 test cases");
    std::uint64_t gen_reg_seed = 0;
    std::string gz_data = "dataset", gz_out = "generalization";
    std::size_t gz_small = 250;
    TrainFlags gz_flags;
    gz->add_option("--seed", gen_reg_seed, "random seed")->required();
    gz->add_option("--data", gz_data, "dataset directory")->capture_default_str();
    gz->add_option("--out", gz_out, "output directory; trained models are kept under models/")->capture_default_str();
    gz->add_option("--small-batch", gz_small, "N-1-1 cases in the small-batch regime")->capture_default_str();
    gz_flags.add_to(gz);

    // predict
    auto* pr = app.add_subcommand("predict", "replay a case CSV through a checkpoint, one line per second");
    std::string pr_ckpt, pr_case, pr_out;
    pr->add_option("--checkpoint", pr_ckpt, "checkpoint directory")->required();
    pr->add_option("--case", pr_case, "case CSV (t, optional label, features)")->required();
    pr->add_option("--out", pr_out, "write to this file instead of standard output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    auto log = [](const std::string& s) { print_line(s); };
    int stage = kMissing;
    try {
        const json config = read_config(config_path);

        if (*gen) {
            stage = kConfig;
            vip::scenario::GenConfig cfg;
            if (config.contains("gen")) cfg.merge_json(config.at("gen"));
            json j = json::object();
            if (!grid_path.empty()) j["grid_file"] = grid_path;
            if (train_pairs) j["train"] = {{"n1", *train_pairs}, {"n11", 2 * *train_pairs}};
            if (train_n1) j["train"]["n1"] = *train_n1;
            if (train_n11) j["train"]["n11"] = *train_n11;
            if (val_n1) j["val"]["n1"] = *val_n1;
            if (val_n11) j["val"]["n11"] = *val_n11;
            if (test_n1) j["test"]["n1"] = *test_n1;
            if (test_n11) j["test"]["n11"] = *test_n11;
            if (export_csv) j["export_csv"] = *export_csv;
            if (max_attempts) j["max_attempts"] = *max_attempts;
            if (horizon) j["sim"]["horizon"] = *horizon;
            cfg.merge_json(j);
            require_file(cfg.grid_file, "grid file", kConfig);
            (void)vip::grid::load_grid(cfg.grid_file);
            for (const auto& sc : {cfg.train, cfg.val, cfg.test}) {
                if (sc.pairs() == 0) fail(kConfig, "every split needs at least one case");
            }
            stage = kGeneration;
            const auto report = vip::scenario::generate_dataset(cfg, gen_seed, gen_out, workers, log);
            print_histogram(report);
            print_line("dataset written to " + gen_out);
        } else if (*tr) {
            stage = kConfig;
            const auto cfg = train_flags.resolve(config);
            const auto regime = vip::eval::regime_by_name(regime_name, small_batch);
            stage = kMissing;
            const auto data = open_datasets(train_data);
            stage = kGeneration;
            const fs::path out = train_out.empty() ? fs::path("runs") / model : fs::path(train_out);
            print_line("training " + model + " on " + train_data + " (" + regime.name + ")");
            auto result = vip::train::train_model(
                vip::eval::regime_input(data, regime), model, cfg, train_seed, workers,
                [](const vip::train::HistoryRow& r) {
                    std::printf("epoch %d train_loss %.5f val_loss %.5f val_acc %.5f\n", r.epoch, r.train_loss,
                                r.val_loss, r.val_acc);
                    std::fflush(stdout);
                });
            result.checkpoint.extra["identity"] = {
                {"dataset",
                 {{"seed", data.header.at("seed")},
                  {"grid_file_fnv1a64", data.header.at("grid_file_fnv1a64")},
                  {"counts", data.header.at("counts")}}},
                {"regime", regime.name}};
            vip::nn::save_checkpoint(result.checkpoint, out);
            vip::train::write_history_csv(out / "history.csv", result.history);
            std::printf("best epoch %d, %zu training windows, %zu short cases skipped; checkpoint in %s\n",
                        result.best_epoch, result.train_windows, result.skipped_cases, out.string().c_str());
        } else if (*ev) {
            require_file(fs::path(eval_ckpt) / "header.json", "checkpoint");
            const auto data = open_datasets(eval_data);
            const auto ckpt = vip::nn::load_checkpoint(eval_ckpt, data.test.num_features);
            stage = kGeneration;
            const auto s = vip::eval::run_eval(data, ckpt, eval_out, workers);
            std::printf("N-1 mean accuracy T[36,120] %.4f (majority %.4f); N-1-1 %.4f; confusion at T=50 accuracy %.4f\n",
                        s["n1"]["mean_T36_120"].get<double>(), s["n1"]["majority_mean_T36_120"].get<double>(),
                        s["n11"]["mean_T36_120"].get<double>(),
                        s["n11"]["confusion_T50"]["accuracy"].is_null()
                            ? 0.0
                            : s["n11"]["confusion_T50"]["accuracy"].get<double>());
            print_line("artifacts written to " + eval_out);
        } else if (*ab) {
            stage = kConfig;
            const auto cfg = ablate_flags.resolve(config);
            stage = kMissing;
            const auto data = open_datasets(ablate_data);
            stage = kGeneration;
            const auto s = vip::eval::run_ablation(data, cfg, ablate_seed, ablate_out, workers, log);
            for (const auto& [name, m] : s["models"].items()) {
                std::printf("%-8s mean N-1-1 accuracy T[36,120] %.4f\n", name.c_str(),
                            m["mean_T36_120"].is_null() ? 0.0 : m["mean_T36_120"].get<double>());
            }
            print_line(std::string("lstm-60 >= ffnn: ") + (s["verdicts"]["lstm60_ge_ffnn"].get<bool>() ? "yes" : "no"));
        } else if (*gz) {
            stage = kConfig;
            const auto cfg = gz_flags.resolve(config);
            stage = kMissing;
            const auto data = open_datasets(gz_data);
            stage = kGeneration;
            const auto s = vip::eval::run_generalization(data, cfg, gen_reg_seed, gz_small, gz_out, workers, log);
            for (const auto& [name, m] : s["regimes"].items()) {
                std::printf("%-12s mean N-1-1 accuracy T[36,120] %.4f\n", name.c_str(),
                            m["n11_mean_T36_120"].is_null() ? 0.0 : m["n11_mean_T36_120"].get<double>());
            }
            print_line(std::string("full >= small-batch >= n1-only: ") +
                       (s["verdicts"]["ordering_holds"].get<bool>() ? "yes" : "no"));
        } else if (*pr) {
            require_file(fs::path(pr_ckpt) / "header.json", "checkpoint");
            require_file(pr_case, "case file");
            const auto ckpt = vip::nn::load_checkpoint(pr_ckpt);
            stage = kConfig;
            const auto series = vip::scenario::read_case_csv(pr_case);
            if (series.feature_names.size() != ckpt.net->spec().input_dim) {
                fail(kConfig, "case file has " + std::to_string(series.feature_names.size()) +
                                  " feature columns, checkpoint expects " + std::to_string(ckpt.net->spec().input_dim));
            }
            const auto pred = vip::eval::rolling_predict(ckpt, series.features, series.t_end);
            std::ofstream file;
            if (!pr_out.empty()) {
                file.open(pr_out);
                if (!file) fail(kConfig, "cannot write " + pr_out);
            }
            std::ostream& os = pr_out.empty() ? std::cout : file;
            const auto& names = vip::scenario::class_names();
            char buf[64];
            for (Eigen::Index j = 0; j < pred.probs.cols(); ++j) {
                os << pred.first_t + static_cast<int>(j);
                for (Eigen::Index k = 0; k < pred.probs.rows(); ++k) {
                    std::snprintf(buf, sizeof buf, ",%.6f", pred.probs(k, j));
                    os << buf;
                }
                os << ',' << names[static_cast<std::size_t>(pred.classes[static_cast<std::size_t>(j)])] << '\n';
            }
        }
    } catch (const ExitError& e) {
        std::cerr << "error: " << e.message << '\n';
        return e.code;
    } catch (const vip::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.code()) {
            case vip::ErrorCode::Config: return kConfig;
            case vip::ErrorCode::Io:
            case vip::ErrorCode::DimensionMismatch:
            case vip::ErrorCode::CorruptCheckpoint: return stage == kConfig ? kConfig : kMissing;
            case vip::ErrorCode::InvalidModel:
            case vip::ErrorCode::UnknownElement: return stage == kGeneration ? kGeneration : kConfig;
            default: return stage == kConfig ? kConfig : kGeneration;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return stage == kConfig ? kConfig : kGeneration;
    }
    return kOk;
}
