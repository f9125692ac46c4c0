#include "vip/scenario/dataset.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "vip/common/error.hpp"
#include "vip/common/parallel.hpp"
#include "vip/common/rng.hpp"

namespace vip::scenario {

static_assert(std::endian::native == std::endian::little, "dataset blobs are little-endian");

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorCode::Config, where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items()) {
        if (!ok.contains(k)) throw Error(ErrorCode::Config, "unknown key '" + k + "' in " + where);
    }
}

template <typename T>
void take(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

grid::Contingency parse_contingency(const std::string& s) {
    if (s.starts_with("line:")) return grid::Contingency::trip_branch(s.substr(5));
    if (s.starts_with("gen:")) return grid::Contingency::trip_generator(s.substr(4));
    throw Error(ErrorCode::Config, "contingency '" + s + "' must start with line: or gen:");
}

json counts_json(const SplitCounts& c) { return {{"n1", c.n1}, {"n11", c.n11}}; }

void merge_counts(const json& j, SplitCounts& c, const std::string& where) {
    check_keys(j, {"n1", "n11"}, where);
    take(j, "n1", c.n1);
    take(j, "n11", c.n11);
}

std::string fmt_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

std::string fmt_float(float v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        s += fmt_double(v[i]);
    }
    return s;
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) out.push_back(std::stod(item));
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::uint64_t file_hash(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot read " + p.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return fnv1a64(std::as_bytes(std::span(bytes)));
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

CaseRecord record_of(const LabeledCase& c, const GeneratedPair& p, std::size_t index, std::int64_t pair) {
    CaseRecord r;
    r.index = index;
    r.kind = c.kind;
    r.pair = pair;
    r.t_end = c.trajectory.t_end;
    r.collapsed = c.trajectory.collapsed;
    r.collapse_time = c.trajectory.collapse_time.value_or(-1);
    r.t1 = c.t1;
    r.t2 = c.t2;
    if (const auto f = c.trajectory.schedule.first()) r.first = grid::to_string(f->contingency);
    if (const auto s = c.trajectory.schedule.second()) r.second = grid::to_string(s->contingency);
    r.end_class = c.end_class;
    r.first_class = c.first_class;
    r.attempts = p.attempts;
    r.load_factors = p.oc.load_factors;
    r.gen_p = p.oc.gen_p;
    return r;
}

const char* kCasesHeader =
    "index,kind,pair,t_end,collapsed,collapse_time,t1,t2,first,second,end_class,first_class,attempts,load_factors,gen_p";

void write_case_row(std::ostream& os, const CaseRecord& r) {
    os << r.index << ',' << case_kind_name(r.kind) << ',' << r.pair << ',' << r.t_end << ',' << (r.collapsed ? 1 : 0)
       << ',' << r.collapse_time << ',' << r.t1 << ',' << r.t2 << ',' << r.first << ',' << r.second << ','
       << to_string(r.end_class) << ',' << to_string(r.first_class) << ',' << r.attempts << ','
       << join(r.load_factors) << ',' << join(r.gen_p) << '\n';
}

StabilityClass class_by_name(const std::string& s) {
    const auto& names = class_names();
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == s) return class_from_index(k);
    }
    throw Error(ErrorCode::ShapeMismatch, "unknown class '" + s + "'");
}

CaseRecord parse_case_row(const std::string& line) {
    const auto f = split_csv_line(line);
    if (f.size() != 15) throw Error(ErrorCode::ShapeMismatch, "cases.csv row has " + std::to_string(f.size()) + " fields");
    CaseRecord r;
    r.index = std::stoull(f[0]);
    r.kind = f[1] == "N-1-1" ? CaseKind::N11 : CaseKind::N1;
    r.pair = std::stoll(f[2]);
    r.t_end = std::stoi(f[3]);
    r.collapsed = f[4] == "1";
    r.collapse_time = std::stoi(f[5]);
    r.t1 = std::stoi(f[6]);
    r.t2 = std::stoi(f[7]);
    r.first = f[8];
    r.second = f[9];
    r.end_class = class_by_name(f[10]);
    r.first_class = class_by_name(f[11]);
    r.attempts = std::stoull(f[12]);
    r.load_factors = split_doubles(f[13]);
    r.gen_p = split_doubles(f[14]);
    return r;
}

}  // namespace

std::string case_kind_name(CaseKind k) { return k == CaseKind::N1 ? "N-1" : "N-1-1"; }

json GenConfig::to_json() const {
    std::vector<std::string> major_names;
    for (const auto& c : schedule.major) major_names.push_back(grid::to_string(c));
    return {
        {"grid_file", grid_file.string()},
        {"train", counts_json(train)},
        {"val", counts_json(val)},
        {"test", counts_json(test)},
        {"load", {{"min_factor", load.min_factor}, {"max_factor", load.max_factor}}},
        {"schedule",
         {{"t1", schedule.t1}, {"min_delay", schedule.min_delay}, {"max_delay", schedule.max_delay}, {"major", major_names}}},
        {"sim",
         {{"horizon", sim.horizon},
          {"collapse_voltage", sim.collapse_voltage},
          {"max_tap_settle_rounds", sim.max_tap_settle_rounds},
          {"tolerance", sim.power_flow.tolerance},
          {"max_iterations", sim.power_flow.max_iterations},
          {"damped_max_iterations", sim.power_flow.damped_max_iterations},
          {"oltc",
           {{"deadband_low", sim.oltc.deadband_low},
            {"deadband_high", sim.oltc.deadband_high},
            {"first_delay", sim.oltc.first_delay},
            {"next_delay", sim.oltc.next_delay},
            {"step", sim.oltc.step},
            {"min_position", sim.oltc.min_position},
            {"max_position", sim.oltc.max_position}}},
          {"oxl", {{"delay", sim.oxl.delay}}}}},
        {"max_attempts", max_attempts},
        {"export_csv", export_csv},
    };
}

void GenConfig::merge_json(const json& j) {
    try {
        check_keys(j, {"grid_file", "train", "val", "test", "load", "schedule", "sim", "max_attempts", "export_csv"},
                   "GenConfig");
        if (j.contains("grid_file")) grid_file = j.at("grid_file").get<std::string>();
        if (j.contains("train")) merge_counts(j.at("train"), train, "train");
        if (j.contains("val")) merge_counts(j.at("val"), val, "val");
        if (j.contains("test")) merge_counts(j.at("test"), test, "test");
        if (j.contains("load")) {
            const auto& l = j.at("load");
            check_keys(l, {"min_factor", "max_factor"}, "load");
            take(l, "min_factor", load.min_factor);
            take(l, "max_factor", load.max_factor);
        }
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            check_keys(s, {"t1", "min_delay", "max_delay", "major"}, "schedule");
            take(s, "t1", schedule.t1);
            take(s, "min_delay", schedule.min_delay);
            take(s, "max_delay", schedule.max_delay);
            if (s.contains("major")) {
                schedule.major.clear();
                for (const auto& name : s.at("major")) schedule.major.push_back(parse_contingency(name.get<std::string>()));
            }
        }
        if (j.contains("sim")) {
            const auto& s = j.at("sim");
            check_keys(s,
                       {"horizon", "collapse_voltage", "max_tap_settle_rounds", "tolerance", "max_iterations",
                        "damped_max_iterations", "oltc", "oxl"},
                       "sim");
            take(s, "horizon", sim.horizon);
            take(s, "collapse_voltage", sim.collapse_voltage);
            take(s, "max_tap_settle_rounds", sim.max_tap_settle_rounds);
            take(s, "tolerance", sim.power_flow.tolerance);
            take(s, "max_iterations", sim.power_flow.max_iterations);
            take(s, "damped_max_iterations", sim.power_flow.damped_max_iterations);
            if (s.contains("oltc")) {
                const auto& o = s.at("oltc");
                check_keys(o,
                           {"deadband_low", "deadband_high", "first_delay", "next_delay", "step", "min_position",
                            "max_position"},
                           "sim.oltc");
                take(o, "deadband_low", sim.oltc.deadband_low);
                take(o, "deadband_high", sim.oltc.deadband_high);
                take(o, "first_delay", sim.oltc.first_delay);
                take(o, "next_delay", sim.oltc.next_delay);
                take(o, "step", sim.oltc.step);
                take(o, "min_position", sim.oltc.min_position);
                take(o, "max_position", sim.oltc.max_position);
            }
            if (s.contains("oxl")) {
                check_keys(s.at("oxl"), {"delay"}, "sim.oxl");
                take(s.at("oxl"), "delay", sim.oxl.delay);
            }
        }
        take(j, "max_attempts", max_attempts);
        take(j, "export_csv", export_csv);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, e.what());
    }
    if (load.min_factor > load.max_factor || load.min_factor <= 0.0) throw Error(ErrorCode::Config, "bad load range");
    if (schedule.min_delay < 1 || schedule.min_delay > schedule.max_delay) throw Error(ErrorCode::Config, "bad delay range");
    if (schedule.t1 < 1 || schedule.t1 + schedule.max_delay > sim.horizon) {
        throw Error(ErrorCode::Config, "contingency times must fall inside the horizon");
    }
    if (max_attempts == 0) throw Error(ErrorCode::Config, "max_attempts must be positive");
}

GeneratedPair generate_pair(const grid::GridModel& base, const GenConfig& cfg, std::uint64_t pair_seed) {
    GeneratedPair out;
    Rng oc_rng(derive_seed(pair_seed, 0));
    for (out.attempts = 1;; ++out.attempts) {
        out.oc = sample_operating_condition(base, oc_rng, cfg.load);
        if (grid::check_feasibility(base, out.oc, cfg.sim)) break;
        if (out.attempts >= cfg.max_attempts) {
            throw Error(ErrorCode::RetryBudgetExceeded,
                        "no feasible operating condition after " + std::to_string(out.attempts) + " draws");
        }
    }
    Rng schedule_rng(derive_seed(pair_seed, 1));
    const auto schedule = sample_schedule(base, schedule_rng, cfg.schedule);
    auto n1 = grid::simulate_case(base, out.oc, n1_schedule(schedule), cfg.sim);
    auto n11 = grid::simulate_case(base, out.oc, schedule, cfg.sim);
    auto [a, b] = label_pair(std::move(n1), std::move(n11), schedule.second()->time, LabelRule::from_model(base),
                             cfg.sim.horizon);
    out.n1 = std::move(a);
    out.n11 = std::move(b);
    return out;
}

GenerationReport generate_dataset(const GenConfig& cfg, std::uint64_t seed, const fs::path& out, std::size_t workers,
                                  const std::function<void(const std::string&)>& log) {
    const auto base = grid::load_grid(cfg.grid_file);
    const auto names = grid::feature_names(base);
    const std::size_t m = names.size();
    const auto horizon = static_cast<std::size_t>(cfg.sim.horizon);
    fs::create_directories(out);

    GenerationReport report;
    json counts = json::object(), hist_all = json::object(), hist_180 = json::object(), split_seeds = json::object();
    const std::array<SplitCounts, 3> split_counts{cfg.train, cfg.val, cfg.test};
    constexpr std::size_t kChunk = 256;

    for (std::size_t s = 0; s < 3; ++s) {
        const std::string split = kSplitNames[s];
        const auto& sc = split_counts[s];
        const std::uint64_t split_seed = derive_seed(seed, s);
        split_seeds[split] = split_seed;
        std::ofstream feat(out / (split + ".features.bin"), std::ios::binary);
        std::ofstream lab(out / (split + ".labels.bin"), std::ios::binary);
        if (!feat || !lab) throw Error(ErrorCode::Io, "cannot write into " + out.string());

        // N-1 cases are stored first, then N-1-1 cases; both in pair order.
        std::vector<CaseRecord> n1_records, n11_records;
        ClassHistogram all{}, at180{};
        const std::size_t pairs = sc.pairs();
        std::vector<float> padded(horizon * m);
        std::vector<std::uint8_t> lab_bytes(horizon);
        std::size_t case_csv_written = 0;

        auto emit = [&](const LabeledCase& c, std::ofstream& fo, std::ofstream& lo, std::size_t index) {
            std::fill(padded.begin(), padded.end(), 0.0f);
            std::copy(c.trajectory.features.begin(), c.trajectory.features.end(), padded.begin());
            for (std::size_t t = 0; t < horizon; ++t) {
                lab_bytes[t] = static_cast<std::uint8_t>(index_of(c.labels[t]));
                ++all[lab_bytes[t]];
            }
            if (horizon >= 180) ++at180[lab_bytes[179]];
            fo.write(reinterpret_cast<const char*>(padded.data()), static_cast<std::streamsize>(padded.size() * 4));
            lo.write(reinterpret_cast<const char*>(lab_bytes.data()), static_cast<std::streamsize>(lab_bytes.size()));
            if (case_csv_written < cfg.export_csv) {
                fs::create_directories(out / (split + "_cases"));
                write_case_csv(out / (split + "_cases") / ("case_" + std::to_string(index) + ".csv"), names,
                               c.trajectory.features.data(), lab_bytes.data(), c.trajectory.t_end);
                ++case_csv_written;
            }
        };

        // Spill N-1-1 cases to a temporary file so memory stays bounded by one chunk.
        const fs::path tmp_feat = out / (split + ".n11.features.tmp"), tmp_lab = out / (split + ".n11.labels.tmp");
        std::ofstream tf(tmp_feat, std::ios::binary), tl(tmp_lab, std::ios::binary);
        std::size_t infeasible = 0;

        for (std::size_t begin = 0; begin < pairs; begin += kChunk) {
            const std::size_t end = std::min(pairs, begin + kChunk);
            std::vector<GeneratedPair> chunk(end - begin);
            parallel_for(chunk.size(), workers,
                         [&](std::size_t k) { chunk[k] = generate_pair(base, cfg, derive_seed(split_seed, begin + k)); });
            for (std::size_t k = 0; k < chunk.size(); ++k) {
                const std::size_t i = begin + k;
                const auto& p = chunk[k];
                infeasible += p.attempts - 1;
                if (i < sc.n1) {
                    const std::int64_t partner = i < sc.n11 ? static_cast<std::int64_t>(sc.n1 + i) : -1;
                    n1_records.push_back(record_of(p.n1, p, i, partner));
                    emit(p.n1, feat, lab, i);
                }
                if (i < sc.n11) {
                    const std::int64_t partner = i < sc.n1 ? static_cast<std::int64_t>(i) : -1;
                    n11_records.push_back(record_of(p.n11, p, sc.n1 + i, partner));
                }
            }
            // N-1-1 rows go to the spill file; CSV export for them happens on copy-back.
            for (std::size_t k = 0; k < chunk.size(); ++k) {
                if (begin + k >= sc.n11) break;
                const auto& c = chunk[k].n11;
                std::fill(padded.begin(), padded.end(), 0.0f);
                std::copy(c.trajectory.features.begin(), c.trajectory.features.end(), padded.begin());
                for (std::size_t t = 0; t < horizon; ++t) lab_bytes[t] = static_cast<std::uint8_t>(index_of(c.labels[t]));
                tf.write(reinterpret_cast<const char*>(padded.data()), static_cast<std::streamsize>(padded.size() * 4));
                tl.write(reinterpret_cast<const char*>(lab_bytes.data()), static_cast<std::streamsize>(horizon));
            }
            if (log) log(split + ": " + std::to_string(end) + "/" + std::to_string(pairs) + " pairs");
        }
        tf.close();
        tl.close();
        {
            std::ifstream rf(tmp_feat, std::ios::binary), rl(tmp_lab, std::ios::binary);
            for (std::size_t j = 0; j < n11_records.size(); ++j) {
                rf.read(reinterpret_cast<char*>(padded.data()), static_cast<std::streamsize>(padded.size() * 4));
                rl.read(reinterpret_cast<char*>(lab_bytes.data()), static_cast<std::streamsize>(horizon));
                if (!rf || !rl) throw Error(ErrorCode::Io, "spill file truncated");
                for (std::size_t t = 0; t < horizon; ++t) ++all[lab_bytes[t]];
                if (horizon >= 180) ++at180[lab_bytes[179]];
                feat.write(reinterpret_cast<const char*>(padded.data()), static_cast<std::streamsize>(padded.size() * 4));
                lab.write(reinterpret_cast<const char*>(lab_bytes.data()), static_cast<std::streamsize>(horizon));
                if (case_csv_written < cfg.export_csv) {
                    fs::create_directories(out / (split + "_cases"));
                    write_case_csv(out / (split + "_cases") / ("case_" + std::to_string(n11_records[j].index) + ".csv"),
                                   names, padded.data(), lab_bytes.data(), n11_records[j].t_end);
                    ++case_csv_written;
                }
            }
        }
        fs::remove(tmp_feat);
        fs::remove(tmp_lab);
        if (!feat || !lab) throw Error(ErrorCode::Io, "failed writing split " + split);

        std::ofstream cases(out / (split + ".cases.csv"));
        cases << kCasesHeader << '\n';
        for (const auto& r : n1_records) write_case_row(cases, r);
        for (const auto& r : n11_records) write_case_row(cases, r);

        counts[split] = {{"n1", sc.n1}, {"n11", sc.n11}, {"cases", sc.n1 + sc.n11}, {"pairs_simulated", pairs}};
        hist_all[split] = all;
        hist_180[split] = at180;
        report.at_t180[s] = at180;
        report.infeasible_draws[s] = infeasible;
    }

    json h;
    h["generator_version"] = kGeneratorVersion;
    h["seed"] = seed;
    h["split_seeds"] = split_seeds;
    h["grid_name"] = base.name;
    h["grid_file_fnv1a64"] = hex64(file_hash(cfg.grid_file));
    h["feature_count"] = m;
    h["feature_names"] = names;
    h["feature_convention"] = "V and theta (rad) per bus; P and Q at the from-end of each branch (0 when tripped)";
    h["class_names"] = class_names();
    h["horizon"] = cfg.sim.horizon;
    h["layout"] = "f32 little-endian [case][time][feature], zero after t_end; u8 labels [case][time]";
    h["case_order"] = "N-1 cases first, then N-1-1 cases; pair i shares operating condition and first contingency";
    h["counts"] = counts;
    h["label_histogram"] = hist_all;
    h["label_histogram_t180"] = hist_180;
    h["infeasible_draws"] = {{"train", report.infeasible_draws[0]},
                             {"val", report.infeasible_draws[1]},
                             {"test", report.infeasible_draws[2]}};
    h["config"] = cfg.to_json();
    h["config"]["grid_file"] = cfg.grid_file.filename().string();
    std::ofstream hf(out / "header.json");
    hf << h.dump(2) << '\n';
    if (!hf) throw Error(ErrorCode::Io, "failed writing header");
    report.header = std::move(h);
    return report;
}

json read_header(const fs::path& dir) {
    std::ifstream f(dir / "header.json");
    if (!f) throw Error(ErrorCode::Io, "missing " + (dir / "header.json").string());
    try {
        json h;
        f >> h;
        return h;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, std::string("bad dataset header: ") + e.what());
    }
}

SplitData load_split(const fs::path& dir, const std::string& split, int max_t) {
    const auto header = read_header(dir);
    SplitData d;
    d.name = split;
    d.num_features = header.at("feature_count").get<std::size_t>();
    const int stored = header.at("horizon").get<int>();
    d.horizon = std::min(stored, max_t);

    std::ifstream cases(dir / (split + ".cases.csv"));
    if (!cases) throw Error(ErrorCode::Io, "missing " + (dir / (split + ".cases.csv")).string());
    std::string line;
    std::getline(cases, line);
    while (std::getline(cases, line)) {
        if (!line.empty()) d.cases.push_back(parse_case_row(line));
    }

    const std::size_t n = d.cases.size();
    const std::size_t m = d.num_features;
    const auto full_row = static_cast<std::size_t>(stored) * m;
    const auto keep_row = static_cast<std::size_t>(d.horizon) * m;
    std::ifstream feat(dir / (split + ".features.bin"), std::ios::binary | std::ios::ate);
    std::ifstream lab(dir / (split + ".labels.bin"), std::ios::binary | std::ios::ate);
    if (!feat || !lab) throw Error(ErrorCode::Io, "missing binary files for split " + split);
    if (static_cast<std::size_t>(feat.tellg()) != n * full_row * 4 ||
        static_cast<std::size_t>(lab.tellg()) != n * static_cast<std::size_t>(stored)) {
        throw Error(ErrorCode::ShapeMismatch, "split " + split + " blob sizes disagree with cases.csv");
    }
    d.features.resize(n * keep_row);
    d.labels.resize(n * static_cast<std::size_t>(d.horizon));
    for (std::size_t c = 0; c < n; ++c) {
        feat.seekg(static_cast<std::streamoff>(c * full_row * 4));
        feat.read(reinterpret_cast<char*>(d.features.data() + c * keep_row), static_cast<std::streamsize>(keep_row * 4));
        lab.seekg(static_cast<std::streamoff>(c * static_cast<std::size_t>(stored)));
        lab.read(reinterpret_cast<char*>(d.labels.data() + c * static_cast<std::size_t>(d.horizon)), d.horizon);
    }
    if (!feat || !lab) throw Error(ErrorCode::Io, "failed reading split " + split);
    return d;
}

void write_case_csv(const fs::path& path, const std::vector<std::string>& feature_names, const float* features,
                    const std::uint8_t* labels, int t_end) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
    os << "t,label";
    for (const auto& n : feature_names) os << ',' << n;
    os << '\n';
    const std::size_t m = feature_names.size();
    for (int t = 1; t <= t_end; ++t) {
        os << t << ',' << static_cast<int>(labels[t - 1]);
        const float* row = features + static_cast<std::size_t>(t - 1) * m;
        for (std::size_t j = 0; j < m; ++j) os << ',' << fmt_float(row[j]);
        os << '\n';
    }
}

CaseSeries read_case_csv(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorCode::Config, "empty case file");
    auto head = split_csv_line(line);
    if (head.empty() || head[0] != "t") throw Error(ErrorCode::Config, "case file must start with a 't' column");
    const bool has_label = head.size() > 1 && head[1] == "label";
    const std::size_t first_feature = has_label ? 2 : 1;
    CaseSeries s;
    s.feature_names.assign(head.begin() + static_cast<std::ptrdiff_t>(first_feature), head.end());
    if (s.feature_names.empty()) throw Error(ErrorCode::Config, "case file has no feature columns");
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != head.size()) {
            throw Error(ErrorCode::Config, "row " + std::to_string(s.t_end + 1) + " has " + std::to_string(f.size()) +
                                               " fields, expected " + std::to_string(head.size()));
        }
        int t = 0;
        const auto r = std::from_chars(f[0].data(), f[0].data() + f[0].size(), t);
        if (r.ec != std::errc() || t != s.t_end + 1) throw Error(ErrorCode::Config, "t column must count 1, 2, 3, ...");
        if (has_label) {
            int label = 0;
            const auto rl = std::from_chars(f[1].data(), f[1].data() + f[1].size(), label);
            if (rl.ec != std::errc() || label < 0 || label >= static_cast<int>(kNumClasses)) {
                throw Error(ErrorCode::Config, "bad label at t=" + std::to_string(t));
            }
            s.labels.push_back(label);
        }
        for (std::size_t j = first_feature; j < f.size(); ++j) {
            float v = 0.0f;
            const auto rv = std::from_chars(f[j].data(), f[j].data() + f[j].size(), v);
            if (rv.ec != std::errc() || rv.ptr != f[j].data() + f[j].size()) {
                throw Error(ErrorCode::Config, "bad number '" + f[j] + "' at t=" + std::to_string(t));
            }
            s.features.push_back(v);
        }
        s.t_end = t;
    }
    return s;
}

}  // namespace vip::scenario
