#include "vip/scenario/labeling.hpp"

#include <algorithm>
#include <cstring>

#include "vip/common/error.hpp"

namespace vip::scenario {

const std::array<std::string, kNumClasses>& class_names() {
    static const std::array<std::string, kNumClasses> names{"Stable", "AlertC1", "AlertC2", "AlertC3", "Emergency"};
    return names;
}

std::string to_string(StabilityClass c) { return class_names()[index_of(c)]; }

StabilityClass class_from_index(std::size_t k) {
    if (k >= kNumClasses) throw Error(ErrorCode::Config, "class index out of range");
    return static_cast<StabilityClass>(k);
}

LabelRule LabelRule::from_model(const grid::GridModel& model) {
    LabelRule rule;
    rule.monitored = model.monitored;
    for (auto b : model.monitored) rule.regions.push_back(model.buses[b].region);
    return rule;
}

StabilityClass classify_voltages(std::span<const double> v, const LabelRule& rule) {
    if (v.size() != rule.regions.size() || v.empty()) {
        throw Error(ErrorCode::ShapeMismatch, "monitored voltage count");
    }
    const auto lowest = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
    if (v[lowest] >= rule.stable_voltage) return StabilityClass::Stable;
    if (v[lowest] < rule.emergency_voltage) return StabilityClass::Emergency;
    switch (rule.regions[lowest]) {
        case grid::Region::C1: return StabilityClass::AlertC1;
        case grid::Region::C2: return StabilityClass::AlertC2;
        case grid::Region::C3: return StabilityClass::AlertC3;
        case grid::Region::North: break;
    }
    throw Error(ErrorCode::InvalidModel, "monitored bus outside the alert regions");
}

StabilityClass classify_end_state(const grid::Trajectory& traj, const LabelRule& rule) {
    if (traj.collapsed) return StabilityClass::Emergency;
    std::vector<double> v;
    for (auto b : rule.monitored) v.push_back(traj.final_v(static_cast<Eigen::Index>(b)));
    return classify_voltages(v, rule);
}

std::pair<LabeledCase, LabeledCase> label_pair(grid::Trajectory n1, grid::Trajectory n11, int t2,
                                               const LabelRule& rule, int horizon) {
    const int shared = std::min({t2 - 1, n1.t_end, n11.t_end});
    if (n1.num_features != n11.num_features ||
        (shared < t2 - 1 && n1.t_end != n11.t_end) ||
        std::memcmp(n1.features.data(), n11.features.data(),
                    static_cast<std::size_t>(std::max(shared, 0)) * n1.num_features * sizeof(float)) != 0) {
        throw Error(ErrorCode::PairMismatch, "N-1 and N-1-1 runs differ before the second contingency");
    }
    const auto c1 = classify_end_state(n1, rule);
    const auto c11 = classify_end_state(n11, rule);
    const int t1 = kFirstContingencyTime;

    LabeledCase a;
    a.kind = CaseKind::N1;
    a.end_class = c1;
    a.first_class = c1;
    a.t1 = t1;
    a.labels.resize(static_cast<std::size_t>(horizon));
    for (int t = 1; t <= horizon; ++t) a.labels[t - 1] = t < t1 ? StabilityClass::Stable : c1;
    a.trajectory = std::move(n1);

    LabeledCase b;
    b.kind = CaseKind::N11;
    b.end_class = c11;
    b.first_class = c1;
    b.t1 = t1;
    b.t2 = t2;
    b.labels.resize(static_cast<std::size_t>(horizon));
    for (int t = 1; t <= horizon; ++t) {
        b.labels[t - 1] = t < t1 ? StabilityClass::Stable : (t < t2 ? c1 : c11);
    }
    b.trajectory = std::move(n11);
    return {std::move(a), std::move(b)};
}

}  // namespace vip::scenario
