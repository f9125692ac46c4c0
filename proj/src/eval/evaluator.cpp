#include "vip/eval/evaluator.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "vip/common/error.hpp"
#include "vip/common/parallel.hpp"

namespace vip::eval {

using Eigen::Index;
using scenario::SplitData;

namespace {

SplitData single_case_split(const std::vector<float>& features, int t_end, std::size_t m) {
    SplitData s;
    s.name = "series";
    s.num_features = m;
    s.horizon = t_end;
    s.features = features;
    s.labels.assign(static_cast<std::size_t>(t_end), 0);
    scenario::CaseRecord r;
    r.t_end = t_end;
    s.cases.push_back(r);
    return s;
}

std::vector<train::WindowRef> rolling_refs(const SplitData& split, std::size_t c) {
    std::vector<train::WindowRef> refs;
    for (int t = kFirstPrediction; t <= split.last_t(c); ++t) refs.push_back({static_cast<std::uint32_t>(c), t});
    return refs;
}

CasePrediction predict_refs(const nn::Checkpoint& ckpt, const SplitData& split,
                            const std::vector<train::WindowRef>& refs) {
    CasePrediction p;
    if (refs.empty()) return p;
    p.probs = train::predict_windows(*ckpt.net, normalization_of(ckpt), split, refs, 1, 128);
    p.classes.resize(refs.size());
    for (std::size_t j = 0; j < refs.size(); ++j) p.classes[j] = nn::argmax(p.probs.col(static_cast<Index>(j)));
    return p;
}

}  // namespace

train::Normalization normalization_of(const nn::Checkpoint& ckpt) { return {ckpt.feature_mean, ckpt.feature_std}; }

CasePrediction rolling_predict(const nn::Checkpoint& ckpt, const SplitData& split, std::size_t case_index) {
    if (ckpt.net->spec().input_dim != split.num_features) {
        throw Error(ErrorCode::DimensionMismatch, "checkpoint expects " + std::to_string(ckpt.net->spec().input_dim) +
                                                      " features, data has " + std::to_string(split.num_features));
    }
    return predict_refs(ckpt, split, rolling_refs(split, case_index));
}

CasePrediction rolling_predict(const nn::Checkpoint& ckpt, const std::vector<float>& features, int t_end) {
    const std::size_t m = ckpt.net->spec().input_dim;
    if (features.size() != static_cast<std::size_t>(t_end) * m) {
        throw Error(ErrorCode::DimensionMismatch, "series has " + std::to_string(features.size()) +
                                                      " values, expected " + std::to_string(t_end) + " x " +
                                                      std::to_string(m));
    }
    const auto split = single_case_split(features, t_end, m);
    return rolling_predict(ckpt, split, 0);
}

SplitPrediction predict_split(const nn::Checkpoint& ckpt, const SplitData& split, const std::vector<std::size_t>& cases,
                              std::size_t workers) {
    if (ckpt.net->spec().input_dim != split.num_features) {
        throw Error(ErrorCode::DimensionMismatch, "checkpoint expects " + std::to_string(ckpt.net->spec().input_dim) +
                                                      " features, data has " + std::to_string(split.num_features));
    }
    SplitPrediction out;
    out.cases = cases;
    out.per_case.resize(cases.size());
    parallel_for(cases.size(), workers, [&](std::size_t k) { out.per_case[k] = rolling_predict(ckpt, split, cases[k]); });
    return out;
}

double EvalCurve::mean(int t_lo, int t_hi) const {
    double sum = 0.0;
    int n = 0;
    for (int t = std::max(0, t_lo); t <= std::min(t_hi, static_cast<int>(accuracy.size()) - 1); ++t) {
        if (count[static_cast<std::size_t>(t)] == 0) continue;
        sum += accuracy[static_cast<std::size_t>(t)];
        ++n;
    }
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
}

EvalCurve curve_from_predictor(const SplitData& split, const std::vector<std::size_t>& cases,
                               const std::function<int(std::size_t, int)>& predict) {
    EvalCurve curve;
    curve.accuracy.assign(kMaxT + 1, 0.0);
    curve.count.assign(kMaxT + 1, 0);
    std::vector<std::size_t> correct(kMaxT + 1, 0);
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const auto c = cases[k];
        for (int big_t = 0; big_t <= kMaxT; ++big_t) {
            const int t = big_t + kFirstPrediction;
            if (t > split.last_t(c)) break;
            ++curve.count[static_cast<std::size_t>(big_t)];
            if (predict(k, t) == split.label(c, t)) ++correct[static_cast<std::size_t>(big_t)];
        }
    }
    for (std::size_t i = 0; i <= kMaxT; ++i) {
        if (curve.count[i] > 0) curve.accuracy[i] = static_cast<double>(correct[i]) / static_cast<double>(curve.count[i]);
    }
    return curve;
}

EvalCurve accuracy_over_time(const SplitPrediction& pred, const SplitData& split) {
    return curve_from_predictor(split, pred.cases, [&](std::size_t k, int t) {
        const auto& p = pred.per_case[k];
        return p.classes[static_cast<std::size_t>(t - p.first_t)];
    });
}

EvalCurve majority_curve(const SplitData& split, const std::vector<std::size_t>& cases, int majority) {
    EvalCurve curve;
    curve.accuracy.assign(kMaxT + 1, 0.0);
    curve.count.assign(kMaxT + 1, 0);
    for (int big_t = 0; big_t <= kMaxT; ++big_t) {
        std::array<std::size_t, scenario::kNumClasses> hist{};
        std::size_t n = 0;
        for (auto c : cases) {
            const int t = big_t + kFirstPrediction;
            if (t > split.last_t(c)) continue;
            ++hist[static_cast<std::size_t>(split.label(c, t))];
            ++n;
        }
        curve.count[static_cast<std::size_t>(big_t)] = n;
        if (n > 0) {
            curve.accuracy[static_cast<std::size_t>(big_t)] =
                static_cast<double>(hist[static_cast<std::size_t>(majority)]) / static_cast<double>(n);
        }
    }
    return curve;
}

int majority_class(const SplitData& split, const std::vector<train::WindowRef>& windows) {
    std::array<std::size_t, scenario::kNumClasses> hist{};
    for (const auto& w : windows) ++hist[static_cast<std::size_t>(split.label(w.case_index, w.t))];
    std::size_t best = 0;
    for (std::size_t k = 1; k < hist.size(); ++k) {
        if (hist[k] > hist[best]) best = k;
    }
    return static_cast<int>(best);
}

std::size_t ConfusionTable::total() const {
    std::size_t s = 0;
    for (const auto& row : counts) {
        for (auto v : row) s += v;
    }
    return s;
}

std::size_t ConfusionTable::row_sum(std::size_t actual) const {
    std::size_t s = 0;
    for (auto v : counts[actual]) s += v;
    return s;
}

std::size_t ConfusionTable::col_sum(std::size_t predicted) const {
    std::size_t s = 0;
    for (const auto& row : counts) s += row[predicted];
    return s;
}

double ConfusionTable::accuracy() const {
    std::size_t trace = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) trace += counts[k][k];
    const auto n = total();
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(trace) / static_cast<double>(n);
}

double ConfusionTable::recall(std::size_t k) const {
    const auto n = row_sum(k);
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(counts[k][k]) / static_cast<double>(n);
}

double ConfusionTable::precision(std::size_t k) const {
    const auto n = col_sum(k);
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(counts[k][k]) / static_cast<double>(n);
}

ConfusionTable confusion_at(const SplitPrediction& pred, const SplitData& split, int big_t) {
    ConfusionTable table;
    const int t = big_t + kFirstPrediction;
    for (std::size_t k = 0; k < pred.cases.size(); ++k) {
        const auto c = pred.cases[k];
        if (t > split.last_t(c)) continue;
        const auto& p = pred.per_case[k];
        const int predicted = p.classes[static_cast<std::size_t>(t - p.first_t)];
        ++table.counts[static_cast<std::size_t>(split.label(c, t))][static_cast<std::size_t>(predicted)];
    }
    return table;
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionTable& table) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
    const auto& names = scenario::class_names();
    os << "actual\\predicted";
    for (const auto& n : names) os << ',' << n;
    os << ",total,recall\n";
    os.precision(6);
    for (std::size_t a = 0; a < names.size(); ++a) {
        os << names[a];
        for (auto v : table.counts[a]) os << ',' << v;
        os << ',' << table.row_sum(a) << ',' << table.recall(a) << '\n';
    }
    os << "total";
    for (std::size_t p = 0; p < names.size(); ++p) os << ',' << table.col_sum(p);
    os << ',' << table.total() << ',' << table.accuracy() << '\n';
    os << "precision";
    for (std::size_t p = 0; p < names.size(); ++p) os << ',' << table.precision(p);
    os << ",,\n";
}

std::vector<std::size_t> cases_of_kind(const SplitData& split, scenario::CaseKind kind) {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < split.size(); ++c) {
        if (split.cases[c].kind == kind) out.push_back(c);
    }
    return out;
}

double pre_contingency_accuracy(const SplitPrediction& pred, const SplitData& split) {
    std::size_t n = 0, correct = 0;
    for (std::size_t k = 0; k < pred.cases.size(); ++k) {
        const auto c = pred.cases[k];
        const auto& p = pred.per_case[k];
        for (int t = kFirstPrediction; t < split.cases[c].t1 && t <= split.last_t(c); ++t) {
            ++n;
            if (p.classes[static_cast<std::size_t>(t - p.first_t)] == split.label(c, t)) ++correct;
        }
    }
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(correct) / static_cast<double>(n);
}

std::vector<OnsetMeasurement> memory_onsets(const nn::Checkpoint& ckpt, const SplitData& split,
                                            const std::vector<std::size_t>& cases, std::size_t workers) {
    const std::size_t m = split.num_features;
    std::vector<OnsetMeasurement> out(cases.size());
    parallel_for(cases.size(), workers, [&](std::size_t k) {
        const auto c = cases[k];
        auto& o = out[k];
        o.case_index = c;
        o.t2 = split.cases[c].t2;
        const int last = split.last_t(c);
        if (o.t2 <= 0 || last < kFirstPrediction) return;
        std::vector<float> original(split.snapshot(c, 1), split.snapshot(c, 1) + static_cast<std::size_t>(last) * m);
        auto perturbed = original;
        for (int t = 1; t < o.t2 && t <= last; ++t) {
            for (std::size_t j = 0; j < m; ++j) {
                perturbed[static_cast<std::size_t>(t - 1) * m + j] = static_cast<float>(ckpt.feature_mean[j]);
            }
        }
        const auto a = rolling_predict(ckpt, original, last);
        const auto b = rolling_predict(ckpt, perturbed, last);
        int onset = -1;
        for (Index j = a.probs.cols() - 1; j >= 0; --j) {
            if (a.probs.col(j) != b.probs.col(j)) break;
            onset = a.first_t + static_cast<int>(j);
        }
        o.onset_t = onset;
    });
    return out;
}

AlignedCurve aligned_on_second(const SplitPrediction& pred, const SplitData& split, int d_lo, int d_hi) {
    AlignedCurve curve;
    curve.d_lo = d_lo;
    const auto n = static_cast<std::size_t>(d_hi - d_lo + 1);
    curve.accuracy.assign(n, 0.0);
    curve.count.assign(n, 0);
    std::vector<std::size_t> correct(n, 0);
    for (std::size_t k = 0; k < pred.cases.size(); ++k) {
        const auto c = pred.cases[k];
        const int t2 = split.cases[c].t2;
        if (t2 <= 0) continue;
        const auto& p = pred.per_case[k];
        for (int d = d_lo; d <= d_hi; ++d) {
            const int t = t2 + d;
            if (t < p.first_t || t > split.last_t(c)) continue;
            const auto i = static_cast<std::size_t>(d - d_lo);
            ++curve.count[i];
            if (p.classes[static_cast<std::size_t>(t - p.first_t)] == split.label(c, t)) ++correct[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (curve.count[i] > 0) curve.accuracy[i] = static_cast<double>(correct[i]) / static_cast<double>(curve.count[i]);
    }
    return curve;
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                      const std::vector<EvalCurve>& curves) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
    os << "T";
    for (const auto& n : names) os << ',' << n << ',' << n << "_count";
    os << '\n';
    os.precision(8);
    for (int t = 0; t <= kMaxT; ++t) {
        os << t;
        for (const auto& c : curves) {
            os << ',' << c.accuracy[static_cast<std::size_t>(t)] << ',' << c.count[static_cast<std::size_t>(t)];
        }
        os << '\n';
    }
}

void write_svg_chart(const std::filesystem::path& path, const std::string& title, const std::string& x_label, int x0,
                     const std::vector<ChartSeries>& series, std::pair<int, int> shaded) {
    constexpr double width = 760, height = 440, left = 60, right = 170, top = 40, bottom = 50;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    std::size_t n = 0;
    for (const auto& s : series) n = std::max(n, s.y.size());
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    const double span = n > 1 ? static_cast<double>(n - 1) : 1.0;
    auto px = [&](double x) { return left + (x - x0) / span * plot_w; };
    auto py = [&](double y) { return top + (1.0 - y) * plot_h; };

    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
    os.precision(5);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    if (shaded.second > shaded.first) {
        os << "<rect x=\"" << px(shaded.first) << "\" y=\"" << top << "\" width=\"" << px(shaded.second) - px(shaded.first)
           << "\" height=\"" << plot_h << "\" fill=\"#eeeeee\"/>\n";
    }
    for (int k = 0; k <= 5; ++k) {
        const double y = k / 5.0;
        os << "<line x1=\"" << left << "\" x2=\"" << left + plot_w << "\" y1=\"" << py(y) << "\" y2=\"" << py(y)
           << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << left - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << y << "</text>\n";
    }
    const int x_end = x0 + static_cast<int>(span);
    for (int x = x0; x <= x_end; ++x) {
        if ((x - x0) % 20 != 0 && x != x_end) continue;
        os << "<line x1=\"" << px(x) << "\" x2=\"" << px(x) << "\" y1=\"" << top + plot_h << "\" y2=\"" << top + plot_h + 5
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << px(x) << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">" << x << "</text>\n";
    }
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">" << x_label
       << "</text>\n";
    os << "<text transform=\"translate(16," << top + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">accuracy</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = colors[s % std::size(colors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < series[s].y.size(); ++i) {
            if (std::isnan(series[s].y[i])) continue;
            os << px(x0 + static_cast<double>(i)) << ',' << py(series[s].y[i]) << ' ';
        }
        os << "\"/>\n";
        const double ly = top + 16 + 20 * static_cast<double>(s);
        os << "<line x1=\"" << left + plot_w + 12 << "\" x2=\"" << left + plot_w + 36 << "\" y1=\"" << ly << "\" y2=\""
           << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << left + plot_w + 42 << "\" y=\"" << ly + 4 << "\">" << series[s].name << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace vip::eval
