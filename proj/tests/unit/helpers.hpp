#pragma once

#include <complex>
#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "vip/grid/grid_model.hpp"
#include "vip/grid/power_flow.hpp"
#include "vip/common/rng.hpp"
#include "vip/scenario/dataset.hpp"

namespace testing {

inline std::filesystem::path shipped_grid() { return std::filesystem::path(VIP_DATA_DIR) / "grid12.json"; }

/// Slack at 1.0 pu feeding a constant-power, unity power factor load over a
/// lossless line of reactance x.
inline vip::grid::GridModel two_bus(double p_load, double x) {
    using namespace vip::grid;
    GridModel m;
    m.name = "two-bus";
    m.buses = {{"S", Region::North, BusKind::Slack, 0.0}, {"L", Region::C1, BusKind::PQ, 0.0}};
    m.branches = {{"S-L", 0, 1, x, 0.0, true, BranchKind::Line}};
    m.generators = {{"G", 0, 0.0, 1.0, -9.9, 9.9, 10.0, false, true}};
    m.loads = {{1, p_load, 0.0, 0.0, 0.0}};
    m.monitored = {1};
    return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("vip_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Worst bus power mismatch computed from first principles: builds the
/// admittance matrix from the branch list and compares injections with
/// generation minus voltage-dependent load.
inline double balance_residual(const vip::grid::GridModel& m, const vip::grid::NetworkControls& c,
                               const Eigen::VectorXd& v, const Eigen::VectorXd& theta) {
    using cd = std::complex<double>;
    const auto n = m.buses.size();
    std::vector<std::vector<cd>> y(n, std::vector<cd>(n, cd(0, 0)));
    const auto oltc = m.oltc_branches();
    for (std::size_t k = 0; k < m.branches.size(); ++k) {
        const auto& br = m.branches[k];
        if (!br.in_service) continue;
        double a = 1.0;
        for (std::size_t q = 0; q < oltc.size(); ++q) {
            if (oltc[q] == k) a = c.taps[q];
        }
        const cd ys = cd(1, 0) / cd(br.r, br.x);
        y[br.from][br.from] += ys * a * a;
        y[br.to][br.to] += ys;
        y[br.from][br.to] -= ys * a;
        y[br.to][br.from] -= ys * a;
    }
    std::vector<cd> vc(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i][i] += cd(0, m.buses[i].shunt_b);
        vc[i] = std::polar(v(static_cast<Eigen::Index>(i)), theta(static_cast<Eigen::Index>(i)));
    }
    std::vector<double> p_spec(n, 0.0), q_spec(n, 0.0);
    std::vector<bool> q_free(n, false);
    for (std::size_t g = 0; g < m.generators.size(); ++g) {
        const auto& gen = m.generators[g];
        if (!gen.in_service) continue;
        p_spec[gen.bus] += gen.p;
        const bool limited = !c.oxl_limited.empty() && c.oxl_limited[g];
        if (limited) {
            q_spec[gen.bus] += gen.q_max;
        } else {
            q_free[gen.bus] = true;
        }
    }
    for (const auto& l : m.loads) {
        const double vb = v(static_cast<Eigen::Index>(l.bus));
        p_spec[l.bus] -= l.p0 * std::pow(vb, l.alpha_p);
        q_spec[l.bus] -= l.q0 * std::pow(vb, l.alpha_q);
    }
    double worst = 0.0;
    const auto slack = m.slack_bus();
    for (std::size_t i = 0; i < n; ++i) {
        cd current(0, 0);
        for (std::size_t j = 0; j < n; ++j) current += y[i][j] * vc[j];
        const cd s = vc[i] * std::conj(current);
        if (i == slack) continue;
        worst = std::max(worst, std::abs(s.real() - p_spec[i]));
        if (!q_free[i]) worst = std::max(worst, std::abs(s.imag() - q_spec[i]));
    }
    return worst;
}

/// In-memory split whose label is readable from feature 0: before t1 it is 0,
/// afterwards it equals the case class scaled by 0.25, plus small noise on
/// the other features. Every third case is N-1-1 with t2 = 80.
inline vip::scenario::SplitData synthetic_split(std::size_t cases, std::size_t features, std::uint64_t seed,
                                                int horizon = 180) {
    using namespace vip::scenario;
    SplitData s;
    s.name = "synthetic";
    s.num_features = features;
    s.horizon = horizon;
    s.features.assign(cases * static_cast<std::size_t>(horizon) * features, 0.0f);
    s.labels.assign(cases * static_cast<std::size_t>(horizon), 0);
    vip::Rng rng(seed);
    for (std::size_t c = 0; c < cases; ++c) {
        CaseRecord r;
        r.index = c;
        r.t_end = horizon;
        r.kind = c % 3 == 2 ? CaseKind::N11 : CaseKind::N1;
        r.t2 = r.kind == CaseKind::N11 ? 80 : 0;
        r.end_class = class_from_index(c % kNumClasses);
        r.first_class = r.kind == CaseKind::N11 ? StabilityClass::Stable : r.end_class;
        for (int t = 1; t <= horizon; ++t) {
            int y = 0;
            if (t >= r.t1) y = static_cast<int>(r.kind == CaseKind::N11 && t < r.t2 ? r.first_class : r.end_class);
            const auto row = (c * static_cast<std::size_t>(horizon) + static_cast<std::size_t>(t - 1));
            s.labels[row] = static_cast<std::uint8_t>(y);
            float* f = s.features.data() + row * features;
            f[0] = 0.25f * static_cast<float>(y);
            for (std::size_t m = 1; m < features; ++m) f[m] = static_cast<float>(rng.uniform(-0.1, 0.1));
        }
        s.cases.push_back(r);
    }
    return s;
}

}  // namespace testing
