#include "vip/eval/experiments.hpp"

#include <cmath>
#include <fstream>

#include "vip/common/error.hpp"

namespace vip::eval {

namespace fs = std::filesystem;
using nlohmann::json;
using scenario::CaseKind;

namespace {

json nan_safe(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json curve_json(const EvalCurve& c) {
    json j = json::array();
    for (double v : c.accuracy) j.push_back(v);
    return j;
}

json confusion_json(const ConfusionTable& t) {
    json recall = json::array(), precision = json::array();
    for (std::size_t k = 0; k < scenario::kNumClasses; ++k) {
        recall.push_back(nan_safe(t.recall(k)));
        precision.push_back(nan_safe(t.precision(k)));
    }
    return {{"counts", t.counts}, {"total", t.total()}, {"accuracy", nan_safe(t.accuracy())},
            {"recall", recall},   {"precision", precision}};
}

json dataset_identity(const Datasets& d) {
    return {{"seed", d.header.at("seed")},
            {"grid_file_fnv1a64", d.header.at("grid_file_fnv1a64")},
            {"counts", d.header.at("counts")}};
}

std::vector<double> nan_gaps(const EvalCurve& c) {
    std::vector<double> y(c.accuracy.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = c.count[i] == 0 ? std::numeric_limits<double>::quiet_NaN() : c.accuracy[i];
    }
    return y;
}

std::pair<int, int> second_contingency_span(const Datasets& d) {
    const auto& s = d.header.at("config").at("schedule");
    const int t1 = s.at("t1").get<int>();
    return {t1 + s.at("min_delay").get<int>() - kFirstPrediction, t1 + s.at("max_delay").get<int>() - kFirstPrediction};
}

}  // namespace

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
    os << j.dump(2) << '\n';
}

Datasets load_datasets(const fs::path& dir, int max_t) {
    Datasets d;
    d.dir = dir;
    d.header = scenario::read_header(dir);
    d.train = scenario::load_split(dir, "train", max_t);
    d.val = scenario::load_split(dir, "val", max_t);
    d.test = scenario::load_split(dir, "test", max_t);
    return d;
}

Regime regime_by_name(const std::string& name, std::size_t small_batch) {
    if (name == "full") return {name, 0, true};
    if (name == "small-batch") return {name, small_batch, true};
    if (name == "n1-only") return {name, 0, false};
    throw Error(ErrorCode::Config, "unknown regime '" + name + "' (full, small-batch, n1-only)");
}

train::TrainInput regime_input(const Datasets& data, const Regime& regime) {
    train::TrainInput in;
    in.train = &data.train;
    in.val = &data.val;
    std::size_t n11_taken = 0;
    for (std::size_t c = 0; c < data.train.size(); ++c) {
        if (data.train.cases[c].kind == CaseKind::N1) {
            in.train_cases.push_back(c);
        } else if (regime.include_n11 && (regime.n11_limit == 0 || n11_taken < regime.n11_limit)) {
            in.train_cases.push_back(c);
            ++n11_taken;
        }
    }
    // Validation follows the training population: N-1 only when no N-1-1 cases are trained on.
    in.val_cases = regime.include_n11 ? train::all_cases(data.val) : cases_of_kind(data.val, CaseKind::N1);
    return in;
}

nn::Checkpoint obtain_model(const Datasets& data, const std::string& model, const Regime& regime,
                            const train::TrainConfig& cfg, std::uint64_t seed, const fs::path& dir,
                            std::size_t workers, const Log& log) {
    const json identity = {{"dataset", dataset_identity(data)}, {"regime", regime.name}};
    if (fs::exists(dir / "header.json")) {
        try {
            auto ck = nn::load_checkpoint(dir, data.train.num_features);
            if (ck.model_name == model && ck.seed == seed && ck.train_config_hash == cfg.hash() &&
                ck.extra.value("identity", json()) == identity) {
                if (log) log("reusing " + dir.string());
                return ck;
            }
        } catch (const Error&) {
            // Stale or damaged checkpoints are retrained.
        }
    }
    if (log) log("training " + model + " (" + regime.name + ") seed " + std::to_string(seed));
    auto result = train::train_model(regime_input(data, regime), model, cfg, seed, workers, [&](const train::HistoryRow& r) {
        if (log) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "  %s epoch %d train_loss %.4f val_loss %.4f val_acc %.4f", model.c_str(),
                          r.epoch, r.train_loss, r.val_loss, r.val_acc);
            log(buf);
        }
    });
    result.checkpoint.extra["identity"] = identity;
    fs::create_directories(dir);
    nn::save_checkpoint(result.checkpoint, dir);
    train::write_history_csv(dir / "history.csv", result.history);
    return std::move(result.checkpoint);
}

json run_eval(const Datasets& data, const nn::Checkpoint& ckpt, const fs::path& out, std::size_t workers) {
    fs::create_directories(out);
    const auto n1 = cases_of_kind(data.test, CaseKind::N1);
    const auto n11 = cases_of_kind(data.test, CaseKind::N11);
    const auto p1 = predict_split(ckpt, data.test, n1, workers);
    const auto p11 = predict_split(ckpt, data.test, n11, workers);
    const auto c1 = accuracy_over_time(p1, data.test);
    const auto c11 = accuracy_over_time(p11, data.test);

    train::TrainConfig window_cfg;
    if (ckpt.extra.contains("train_config")) window_cfg.merge_json(ckpt.extra.at("train_config"));
    const auto train_windows = train::build_windows(data.train, train::all_cases(data.train), window_cfg);
    const int majority = majority_class(data.train, train_windows.windows);
    const auto m1 = majority_curve(data.test, n1, majority);
    const auto m11 = majority_curve(data.test, n11, majority);

    const auto t1 = confusion_at(p1, data.test, 50);
    const auto t11 = confusion_at(p11, data.test, 50);
    write_confusion_csv(out / "confusion_T50.csv", t11);
    write_confusion_csv(out / "confusion_T50_n1.csv", t1);
    write_curves_csv(out / "curves.csv", {"n1", "n11", "majority_n1", "majority_n11"}, {c1, c11, m1, m11});
    write_svg_chart(out / "accuracy.svg", "Accuracy over time (" + ckpt.model_name + ")", "T = t - 60 [s]", 0,
                    {{"N-1", nan_gaps(c1)}, {"N-1-1", nan_gaps(c11)}, {"majority N-1", nan_gaps(m1)}},
                    second_contingency_span(data));

    json s;
    s["model"] = ckpt.model_name;
    s["majority_class"] = scenario::class_names()[static_cast<std::size_t>(majority)];
    s["n1"] = {{"mean_T0_120", nan_safe(c1.mean(0, kMaxT))},
               {"mean_T36_120", nan_safe(c1.mean(kSummaryLo, kSummaryHi))},
               {"majority_mean_T36_120", nan_safe(m1.mean(kSummaryLo, kSummaryHi))},
               {"pre_contingency_accuracy", nan_safe(pre_contingency_accuracy(p1, data.test))},
               {"confusion_T50", confusion_json(t1)},
               {"curve", curve_json(c1)}};
    s["n11"] = {{"mean_T0_120", nan_safe(c11.mean(0, kMaxT))},
                {"mean_T36_120", nan_safe(c11.mean(kSummaryLo, kSummaryHi))},
                {"majority_mean_T36_120", nan_safe(m11.mean(kSummaryLo, kSummaryHi))},
                {"pre_contingency_accuracy", nan_safe(pre_contingency_accuracy(p11, data.test))},
                {"confusion_T50", confusion_json(t11)},
                {"curve", curve_json(c11)}};
    s["n1_margin_over_majority_T36_120"] =
        nan_safe(c1.mean(kSummaryLo, kSummaryHi) - m1.mean(kSummaryLo, kSummaryHi));
    write_json(out / "summary.json", s);
    return s;
}

json run_ablation(const Datasets& data, const train::TrainConfig& cfg, std::uint64_t seed, const fs::path& out,
                  std::size_t workers, const Log& log) {
    fs::create_directories(out);
    const auto full = regime_by_name("full");
    const auto n11 = cases_of_kind(data.test, CaseKind::N11);
    std::vector<std::string> names;
    std::vector<EvalCurve> curves;
    std::vector<ChartSeries> chart;
    json summary;
    summary["seed"] = seed;
    summary["summary_range_T"] = {kSummaryLo, kSummaryHi};
    std::vector<AlignedCurve> aligned;
    constexpr int d_lo = -20, d_hi = 70;

    for (const auto& model : train::model_names()) {
        const auto ckpt = obtain_model(data, model, full, cfg, seed, out / "models" / model, workers, log);
        const auto pred = predict_split(ckpt, data.test, n11, workers);
        const auto curve = accuracy_over_time(pred, data.test);
        names.push_back(model);
        curves.push_back(curve);
        chart.push_back({model, nan_gaps(curve)});
        aligned.push_back(aligned_on_second(pred, data.test, d_lo, d_hi));

        const auto onsets = memory_onsets(ckpt, data.test, n11, workers);
        std::size_t measured = 0, within = 0;
        int min_off = std::numeric_limits<int>::max(), max_off = std::numeric_limits<int>::min();
        const int window = static_cast<int>(ckpt.net->spec().seq_len);
        for (const auto& o : onsets) {
            if (o.onset_t < 0) continue;
            ++measured;
            // Expected information horizon on the T axis: t2 - 60 + window.
            const int onset_big_t = o.onset_t - kFirstPrediction;
            const int expected = o.t2 - kFirstPrediction + window;
            const int off = onset_big_t - expected;
            min_off = std::min(min_off, off);
            max_off = std::max(max_off, off);
            if (std::abs(off) <= 1) ++within;
        }
        summary["models"][model] = {
            {"mean_T36_120", nan_safe(curve.mean(kSummaryLo, kSummaryHi))},
            {"mean_T0_120", nan_safe(curve.mean(0, kMaxT))},
            {"best_epoch", ckpt.extra.value("best_epoch", 0)},
            {"onset",
             {{"cases_measured", measured},
              {"within_1s_of_t2_minus_60_plus_window", within},
              {"min_offset", measured ? json(min_off) : json(nullptr)},
              {"max_offset", measured ? json(max_off) : json(nullptr)}}},
            {"curve", curve_json(curve)}};
    }
    const double m60 = curves[0].mean(kSummaryLo, kSummaryHi), mff = curves[2].mean(kSummaryLo, kSummaryHi);
    summary["verdicts"] = {{"lstm60_ge_ffnn", m60 >= mff},
                           {"lstm60_ge_lstm30", m60 >= curves[1].mean(kSummaryLo, kSummaryHi)}};

    write_curves_csv(out / "ablation_curves.csv", names, curves);
    {
        std::ofstream os(out / "ablation_aligned_t2.csv");
        os << "t_minus_t2";
        for (const auto& n : names) os << ',' << n << ',' << n << "_count";
        os << '\n';
        os.precision(8);
        for (int d = d_lo; d <= d_hi; ++d) {
            os << d;
            for (const auto& a : aligned) {
                const auto i = static_cast<std::size_t>(d - d_lo);
                os << ',' << a.accuracy[i] << ',' << a.count[i];
            }
            os << '\n';
        }
    }
    write_svg_chart(out / "ablation.svg", "Sequence length ablation, N-1-1 test cases", "T = t - 60 [s]", 0, chart,
                    second_contingency_span(data));
    write_json(out / "ablation_summary.json", summary);
    return summary;
}

json run_generalization(const Datasets& data, const train::TrainConfig& cfg, std::uint64_t seed,
                        std::size_t small_batch, const fs::path& out, std::size_t workers, const Log& log) {
    fs::create_directories(out);
    const auto n1 = cases_of_kind(data.test, CaseKind::N1);
    const auto n11 = cases_of_kind(data.test, CaseKind::N11);
    std::vector<std::string> names;
    std::vector<EvalCurve> curves;
    std::vector<ChartSeries> chart;
    json summary;
    summary["seed"] = seed;
    summary["small_batch"] = small_batch;
    summary["summary_range_T"] = {kSummaryLo, kSummaryHi};
    for (const std::string name : {"full", "small-batch", "n1-only"}) {
        const auto regime = regime_by_name(name, small_batch);
        const std::string dir = name == "full" ? "lstm-60" : "lstm-60-" + name;
        const auto ckpt = obtain_model(data, "lstm-60", regime, cfg, seed, out / "models" / dir, workers, log);
        const auto p11 = predict_split(ckpt, data.test, n11, workers);
        const auto p1 = predict_split(ckpt, data.test, n1, workers);
        const auto c11 = accuracy_over_time(p11, data.test);
        const auto c1 = accuracy_over_time(p1, data.test);
        names.push_back(name);
        curves.push_back(c11);
        chart.push_back({name, nan_gaps(c11)});
        summary["regimes"][name] = {{"n11_mean_T36_120", nan_safe(c11.mean(kSummaryLo, kSummaryHi))},
                                    {"n11_mean_T0_120", nan_safe(c11.mean(0, kMaxT))},
                                    {"n1_mean_T0_120", nan_safe(c1.mean(0, kMaxT))},
                                    {"train_cases", regime_input(data, regime).train_cases.size()},
                                    {"best_epoch", ckpt.extra.value("best_epoch", 0)},
                                    {"curve", curve_json(c11)}};
    }
    const double full = curves[0].mean(kSummaryLo, kSummaryHi), small = curves[1].mean(kSummaryLo, kSummaryHi),
                 only = curves[2].mean(kSummaryLo, kSummaryHi);
    summary["verdicts"] = {{"full_ge_small", full >= small},
                           {"small_ge_n1_only", small >= only},
                           {"ordering_holds", full >= small && small >= only}};
    write_curves_csv(out / "generalization_curves.csv", names, curves);
    write_svg_chart(out / "generalization.svg", "Training regimes, N-1-1 test cases", "T = t - 60 [s]", 0, chart,
                    second_contingency_span(data));
    write_json(out / "generalization_summary.json", summary);
    return summary;
}

}  // namespace vip::eval
