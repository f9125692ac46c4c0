#include "vip/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "vip/common/error.hpp"
#include "vip/common/parallel.hpp"
#include "vip/common/rng.hpp"
#include "vip/nn/adam.hpp"

namespace vip::train {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

enum Stream : std::uint64_t { kInit = 0, kShuffle = 1, kDropout = 2 };

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

Evaluation evaluate(const nn::Classifier& net, const Normalization& norm, const scenario::SplitData& split,
                    const std::vector<WindowRef>& refs, std::size_t workers) {
    if (refs.empty()) return {};
    const MatrixXd probs = predict_windows(net, norm, split, refs, workers);
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t j = 0; j < refs.size(); ++j) {
        const int y = split.label(refs[j].case_index, refs[j].t);
        loss += nn::cross_entropy(probs.col(static_cast<Index>(j)), y);
        if (nn::argmax(probs.col(static_cast<Index>(j))) == y) ++correct;
    }
    const auto n = static_cast<double>(refs.size());
    return {loss / n, static_cast<double>(correct) / n};
}

}  // namespace

json TrainConfig::to_json() const {
    return {{"learning_rate", learning_rate},
            {"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"patience", patience},
            {"t_min", t_min},
            {"t_max", t_max},
            {"windows_per_case", windows_per_case},
            {"dropout_input", dropout.input},
            {"dropout_recurrent", dropout.recurrent},
            {"hidden", hidden},
            {"layers", layers},
            {"grad_chunk", grad_chunk},
            {"monitor", monitor}};
}

void TrainConfig::merge_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::Config, "TrainConfig must be an object");
    const std::set<std::string> known{"learning_rate", "batch_size", "max_epochs",        "patience",
                                      "t_min",         "t_max",      "windows_per_case",  "dropout_input",
                                      "dropout_recurrent", "hidden", "layers",            "grad_chunk",
                                      "monitor"};
    for (const auto& [k, v] : j.items()) {
        if (!known.contains(k)) throw Error(ErrorCode::Config, "unknown TrainConfig key '" + k + "'");
    }
    try {
        if (j.contains("learning_rate")) learning_rate = j["learning_rate"].get<double>();
        if (j.contains("batch_size")) batch_size = j["batch_size"].get<std::size_t>();
        if (j.contains("max_epochs")) max_epochs = j["max_epochs"].get<int>();
        if (j.contains("patience")) patience = j["patience"].get<int>();
        if (j.contains("t_min")) t_min = j["t_min"].get<int>();
        if (j.contains("t_max")) t_max = j["t_max"].get<int>();
        if (j.contains("windows_per_case")) windows_per_case = j["windows_per_case"].get<std::size_t>();
        if (j.contains("dropout_input")) dropout.input = j["dropout_input"].get<double>();
        if (j.contains("dropout_recurrent")) dropout.recurrent = j["dropout_recurrent"].get<double>();
        if (j.contains("hidden")) hidden = j["hidden"].get<std::size_t>();
        if (j.contains("layers")) layers = j["layers"].get<std::size_t>();
        if (j.contains("grad_chunk")) grad_chunk = j["grad_chunk"].get<std::size_t>();
        if (j.contains("monitor")) monitor = j["monitor"].get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, e.what());
    }
    if (learning_rate <= 0.0 || batch_size == 0 || max_epochs < 1 || patience < 1 || windows_per_case == 0 ||
        grad_chunk == 0 || hidden == 0 || layers == 0) {
        throw Error(ErrorCode::Config, "training sizes and rates must be positive");
    }
    if (t_min < 1 || t_max <= t_min) throw Error(ErrorCode::Config, "window range must satisfy 1 <= t_min < t_max");
    if (dropout.input < 0.0 || dropout.input >= 1.0 || dropout.recurrent < 0.0 || dropout.recurrent >= 1.0) {
        throw Error(ErrorCode::Config, "dropout rates must lie in [0, 1)");
    }
    if (monitor != "accuracy" && monitor != "loss") throw Error(ErrorCode::Config, "monitor must be accuracy or loss");
}

std::string TrainConfig::hash() const {
    const auto s = to_json().dump();
    return hex64(fnv1a64(std::as_bytes(std::span(s.data(), s.size()))));
}

const std::vector<std::string>& model_names() {
    static const std::vector<std::string> names{"lstm-60", "lstm-30", "ffnn"};
    return names;
}

nn::NetSpec spec_for_model(const std::string& model, std::size_t input_dim, const TrainConfig& cfg) {
    nn::NetSpec s;
    s.input_dim = input_dim;
    s.hidden = cfg.hidden;
    s.layers = cfg.layers;
    s.classes = scenario::kNumClasses;
    if (model == "lstm-60") {
        s.kind = nn::NetKind::Lstm;
        s.seq_len = 60;
    } else if (model == "lstm-30") {
        s.kind = nn::NetKind::Lstm;
        s.seq_len = 30;
    } else if (model == "ffnn") {
        s.kind = nn::NetKind::Ffnn;
        s.seq_len = 1;
    } else {
        throw Error(ErrorCode::Config, "unknown model '" + model + "' (lstm-60, lstm-30, ffnn)");
    }
    return s;
}

std::vector<int> window_times(const TrainConfig& cfg) {
    std::vector<int> ts;
    const auto range = static_cast<std::int64_t>(cfg.t_max - cfg.t_min);
    const auto n = static_cast<std::int64_t>(cfg.windows_per_case);
    for (std::int64_t k = 0; k < n; ++k) ts.push_back(cfg.t_min + static_cast<int>(k * range / n));
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

std::vector<WindowRef> make_windows(const scenario::SplitData& split, std::size_t case_index, const TrainConfig& cfg) {
    const int last = split.last_t(case_index);
    if (last < cfg.t_min) {
        throw Error(ErrorCode::CaseTooShort, "case " + std::to_string(case_index) + " ends at t=" +
                                                 std::to_string(last) + " before the first window");
    }
    std::vector<WindowRef> out;
    for (int t : window_times(cfg)) {
        if (t > last) break;
        out.push_back({static_cast<std::uint32_t>(case_index), t});
    }
    return out;
}

WindowSet build_windows(const scenario::SplitData& split, const std::vector<std::size_t>& cases,
                        const TrainConfig& cfg) {
    WindowSet ws;
    for (auto c : cases) {
        if (split.last_t(c) < cfg.t_min) {
            ++ws.skipped_cases;
            continue;
        }
        auto w = make_windows(split, c, cfg);
        ws.windows.insert(ws.windows.end(), w.begin(), w.end());
    }
    return ws;
}

std::vector<std::size_t> all_cases(const scenario::SplitData& split) {
    std::vector<std::size_t> c(split.size());
    std::iota(c.begin(), c.end(), std::size_t{0});
    return c;
}

Normalization compute_normalization(const scenario::SplitData& split, const std::vector<std::size_t>& cases) {
    const std::size_t m = split.num_features;
    std::vector<double> sum(m, 0.0);
    std::size_t count = 0;
    for (auto c : cases) {
        for (int t = 1; t <= split.last_t(c); ++t) {
            const float* row = split.snapshot(c, t);
            for (std::size_t j = 0; j < m; ++j) sum[j] += row[j];
            ++count;
        }
    }
    if (count == 0) throw Error(ErrorCode::EmptyDataset, "no snapshots for normalization");
    Normalization n;
    n.mean.resize(m);
    for (std::size_t j = 0; j < m; ++j) n.mean[j] = sum[j] / static_cast<double>(count);
    std::vector<double> sq(m, 0.0);
    for (auto c : cases) {
        for (int t = 1; t <= split.last_t(c); ++t) {
            const float* row = split.snapshot(c, t);
            for (std::size_t j = 0; j < m; ++j) {
                const double d = row[j] - n.mean[j];
                sq[j] += d * d;
            }
        }
    }
    n.std.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double s = std::sqrt(sq[j] / static_cast<double>(count));
        n.std[j] = s > 1e-8 ? s : 1.0;
    }
    return n;
}

nn::SequenceBatch assemble_batch(const scenario::SplitData& split, const Normalization& norm,
                                 std::span<const WindowRef> refs, std::size_t seq_len) {
    const auto m = static_cast<Index>(split.num_features);
    if (norm.mean.size() != split.num_features) {
        throw Error(ErrorCode::DimensionMismatch, "normalization has " + std::to_string(norm.mean.size()) +
                                                      " features, data has " + std::to_string(split.num_features));
    }
    nn::SequenceBatch b;
    b.steps.assign(seq_len, MatrixXd(m, static_cast<Index>(refs.size())));
    for (std::size_t j = 0; j < refs.size(); ++j) {
        const int first = refs[j].t - static_cast<int>(seq_len) + 1;
        if (first < 1 || refs[j].t > split.last_t(refs[j].case_index)) {
            throw Error(ErrorCode::ShapeMismatch, "window outside the recorded snapshots");
        }
        for (std::size_t s = 0; s < seq_len; ++s) {
            const float* row = split.snapshot(refs[j].case_index, first + static_cast<int>(s));
            auto col = b.steps[s].col(static_cast<Index>(j));
            for (Index q = 0; q < m; ++q) {
                col(q) = (static_cast<double>(row[q]) - norm.mean[static_cast<std::size_t>(q)]) /
                         norm.std[static_cast<std::size_t>(q)];
            }
        }
    }
    return b;
}

MatrixXd predict_windows(const nn::Classifier& net, const Normalization& norm, const scenario::SplitData& split,
                         std::span<const WindowRef> refs, std::size_t workers, std::size_t chunk) {
    if (net.spec().input_dim != split.num_features) {
        throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(net.spec().input_dim) +
                                                      " features, data has " + std::to_string(split.num_features));
    }
    MatrixXd probs(static_cast<Index>(net.spec().classes), static_cast<Index>(refs.size()));
    const std::size_t n_chunks = (refs.size() + chunk - 1) / chunk;
    parallel_for(n_chunks, workers, [&](std::size_t c) {
        const std::size_t begin = c * chunk, end = std::min(refs.size(), begin + chunk);
        const auto batch = assemble_batch(split, norm, refs.subspan(begin, end - begin), net.spec().seq_len);
        const auto cache = net.forward(batch, nullptr);
        probs.middleCols(static_cast<Index>(begin), static_cast<Index>(end - begin)) = cache->probs;
    });
    return probs;
}

bool EarlyStopping::update(double metric) {
    ++epoch_;
    if (!any_ || metric > best_) {
        any_ = true;
        best_ = metric;
        best_epoch_ = epoch_;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

TrainResult train_model(const TrainInput& input, const std::string& model, const TrainConfig& cfg, std::uint64_t seed,
                        std::size_t workers, const std::function<void(const HistoryRow&)>& on_epoch) {
    if (input.train == nullptr || input.val == nullptr) throw Error(ErrorCode::EmptyDataset, "missing split");
    const auto& train = *input.train;
    const auto& val = *input.val;
    if (train.num_features != val.num_features) throw Error(ErrorCode::DimensionMismatch, "train/val feature counts");
    const auto spec = spec_for_model(model, train.num_features, cfg);

    TrainResult result;
    auto train_ws = build_windows(train, input.train_cases, cfg);
    const auto val_ws = build_windows(val, input.val_cases, cfg);
    if (train_ws.windows.empty()) throw Error(ErrorCode::EmptyDataset, "no training windows");
    result.train_windows = train_ws.windows.size();
    result.val_windows = val_ws.windows.size();
    result.skipped_cases = train_ws.skipped_cases + val_ws.skipped_cases;
    const auto norm = compute_normalization(train, input.train_cases);

    auto net = nn::make_classifier(spec);
    {
        Rng init_rng(derive_seed(seed, kInit));
        net->initialize(init_rng);
    }
    auto best = net->params();
    auto adam = nn::AdamState::zeros(static_cast<Index>(net->param_count()));
    const nn::AdamHyper hyper{cfg.learning_rate};
    EarlyStopping stopper(cfg.patience);

    auto& order = train_ws.windows;
    const std::size_t n_batches = (order.size() + cfg.batch_size - 1) / cfg.batch_size;
    std::int64_t global_batch = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(seed, kShuffle, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b, ++global_batch) {
            const std::size_t begin = b * cfg.batch_size, end = std::min(order.size(), begin + cfg.batch_size);
            const std::size_t bsize = end - begin;
            const std::size_t n_chunks = (bsize + cfg.grad_chunk - 1) / cfg.grad_chunk;
            std::vector<VectorXd> grads(n_chunks);
            std::vector<double> losses(n_chunks);
            const std::uint64_t batch_seed = derive_seed(seed, kDropout, static_cast<std::uint64_t>(global_batch));
            parallel_for(n_chunks, workers, [&](std::size_t c) {
                const std::size_t cb = begin + c * cfg.grad_chunk, ce = std::min(end, cb + cfg.grad_chunk);
                const std::span<const WindowRef> refs(order.data() + cb, ce - cb);
                const auto batch = assemble_batch(train, norm, refs, spec.seq_len);
                std::vector<int> targets(refs.size());
                for (std::size_t j = 0; j < refs.size(); ++j) targets[j] = train.label(refs[j].case_index, refs[j].t);
                Rng mask_rng(derive_seed(batch_seed, c));
                const auto masks = net->sample_masks(mask_rng, static_cast<Index>(refs.size()), cfg.dropout);
                const auto cache = net->forward(batch, &masks);
                losses[c] = nn::mean_cross_entropy(cache->probs, targets) * static_cast<double>(refs.size());
                net->backward(*cache, targets, grads[c]);
                grads[c] *= static_cast<double>(refs.size());
            });
            VectorXd grad = VectorXd::Zero(static_cast<Index>(net->param_count()));
            double batch_loss = 0.0;
            for (std::size_t c = 0; c < n_chunks; ++c) {
                grad += grads[c];
                batch_loss += losses[c];
            }
            grad /= static_cast<double>(bsize);
            batch_loss /= static_cast<double>(bsize);
            if (!std::isfinite(batch_loss) || !grad.allFinite()) {
                throw Error(ErrorCode::DivergedLoss,
                            "non-finite loss in epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
            }
            loss_sum += batch_loss * static_cast<double>(bsize);
            nn::adam_step(net->params(), grad, adam, hyper);
        }

        const auto ev = evaluate(*net, norm, val, val_ws.windows, workers);
        HistoryRow row{epoch, loss_sum / static_cast<double>(order.size()), ev.loss, ev.accuracy};
        result.history.push_back(row);
        if (on_epoch) on_epoch(row);
        if (stopper.update(cfg.monitor == "loss" ? -ev.loss : ev.accuracy)) best = net->params();
        if (stopper.should_stop()) break;
    }

    net->params() = best;
    result.best_epoch = stopper.best_epoch();
    const auto& best_row = result.history[static_cast<std::size_t>(result.best_epoch - 1)];
    auto& ck = result.checkpoint;
    ck.model_name = model;
    ck.net = std::move(net);
    ck.feature_mean = norm.mean;
    ck.feature_std = norm.std;
    ck.seed = seed;
    ck.train_config_hash = cfg.hash();
    ck.extra = {{"best_epoch", result.best_epoch},
                {"best_val_accuracy", best_row.val_acc},
                {"best_val_loss", best_row.val_loss},
                {"epochs_run", result.history.size()},
                {"train_windows", result.train_windows},
                {"val_windows", result.val_windows},
                {"train_config", cfg.to_json()}};
    return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
    os << "epoch,train_loss,val_loss,val_acc\n";
    os.precision(10);
    for (const auto& r : history) os << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_acc << '\n';
}

BatchFit fit_single_batch(nn::Classifier& net, const nn::SequenceBatch& batch, std::span<const int> targets, int steps,
                          double learning_rate) {
    auto adam = nn::AdamState::zeros(static_cast<Index>(net.param_count()));
    const nn::AdamHyper hyper{learning_rate};
    VectorXd grad;
    for (int s = 0; s < steps; ++s) {
        const auto cache = net.forward(batch, nullptr);
        net.backward(*cache, targets, grad);
        nn::adam_step(net.params(), grad, adam, hyper);
    }
    const auto cache = net.forward(batch, nullptr);
    BatchFit fit;
    fit.loss = nn::mean_cross_entropy(cache->probs, targets);
    std::size_t correct = 0;
    for (std::size_t j = 0; j < targets.size(); ++j) {
        if (nn::argmax(cache->probs.col(static_cast<Index>(j))) == targets[j]) ++correct;
    }
    fit.accuracy = static_cast<double>(correct) / static_cast<double>(targets.size());
    return fit;
}

}  // namespace vip::train
