#include "vip/grid/power_flow.hpp"

#include <cmath>
#include <complex>

#include <Eigen/LU>

#include "vip/common/error.hpp"

namespace vip::grid {

namespace {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class Role { Slack, PV, PQ };

struct Formulation {
    std::size_t n = 0;
    MatrixXcd ybus;
    std::vector<Role> role;
    VectorXd p_gen;      // scheduled generation per bus
    VectorXd q_fixed;    // fixed reactive generation at PQ buses (OXL-limited)
    std::vector<int> pvpq;  // buses with θ unknown
    std::vector<int> pq;    // buses with V unknown
    const GridModel* model = nullptr;

    Formulation(const GridModel& m, const NetworkControls& c) : n(m.buses.size()), model(&m) {
        ybus = MatrixXcd::Zero(n, n);
        const auto oltcs = m.oltc_branches();
        if (c.taps.size() != oltcs.size()) throw Error(ErrorCode::ShapeMismatch, "tap vector size");
        std::vector<double> tap(m.branches.size(), 1.0);
        for (std::size_t k = 0; k < oltcs.size(); ++k) tap[oltcs[k]] = c.taps[k];
        for (std::size_t k = 0; k < m.branches.size(); ++k) {
            const auto& br = m.branches[k];
            if (!br.in_service) continue;
            const cd y = 1.0 / cd(br.r, br.x);
            const double a = tap[k];
            ybus(br.from, br.from) += y * a * a;
            ybus(br.from, br.to) -= y * a;
            ybus(br.to, br.from) -= y * a;
            ybus(br.to, br.to) += y;
        }
        for (std::size_t i = 0; i < n; ++i) ybus(i, i) += cd(0.0, m.buses[i].shunt_b);

        role.assign(n, Role::PQ);
        p_gen = VectorXd::Zero(n);
        q_fixed = VectorXd::Zero(n);
        std::vector<int> regulating(n, 0);
        if (!c.oxl_limited.empty() && c.oxl_limited.size() != m.generators.size()) {
            throw Error(ErrorCode::ShapeMismatch, "oxl flag vector size");
        }
        for (std::size_t g = 0; g < m.generators.size(); ++g) {
            const auto& gen = m.generators[g];
            if (!gen.in_service) continue;
            p_gen(gen.bus) += gen.p;
            const bool limited = !c.oxl_limited.empty() && c.oxl_limited[g];
            if (limited) {
                q_fixed(gen.bus) += gen.q_max;
            } else {
                regulating[gen.bus] += 1;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (m.buses[i].kind == BusKind::Slack) {
                role[i] = Role::Slack;
            } else if (m.buses[i].kind == BusKind::PV && regulating[i] > 0) {
                role[i] = Role::PV;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (role[i] != Role::Slack) pvpq.push_back(static_cast<int>(i));
            if (role[i] == Role::PQ) pq.push_back(static_cast<int>(i));
        }
    }

    // Setpoint voltages for regulated buses (first regulating generator wins).
    void apply_setpoints(VectorXd& v, const NetworkControls& c) const {
        std::vector<bool> done(n, false);
        for (std::size_t g = 0; g < model->generators.size(); ++g) {
            const auto& gen = model->generators[g];
            const bool limited = !c.oxl_limited.empty() && c.oxl_limited[g];
            if (!gen.in_service || limited || done[gen.bus] || role[gen.bus] == Role::PQ) continue;
            v(gen.bus) = gen.v;
            done[gen.bus] = true;
        }
    }

    VectorXcd injections(const VectorXd& v, const VectorXd& th) const {
        VectorXcd vc(n);
        for (std::size_t i = 0; i < n; ++i) vc(i) = std::polar(v(i), th(i));
        VectorXcd ib = ybus * vc;
        VectorXcd s(n);
        for (std::size_t i = 0; i < n; ++i) s(i) = vc(i) * std::conj(ib(i));
        return s;
    }

    VectorXcd scheduled(const VectorXd& v) const {
        VectorXcd s(n);
        for (std::size_t i = 0; i < n; ++i) s(i) = cd(p_gen(i), q_fixed(i));
        for (const auto& l : model->loads) {
            const double vm = v(l.bus);
            s(l.bus) -= cd(l.p0 * std::pow(vm, l.alpha_p), l.q0 * std::pow(vm, l.alpha_q));
        }
        return s;
    }

    VectorXd mismatch(const VectorXd& v, const VectorXd& th) const {
        const VectorXcd ds = injections(v, th) - scheduled(v);
        VectorXd f(pvpq.size() + pq.size());
        for (std::size_t k = 0; k < pvpq.size(); ++k) f(k) = ds(pvpq[k]).real();
        for (std::size_t k = 0; k < pq.size(); ++k) f(pvpq.size() + k) = ds(pq[k]).imag();
        return f;
    }

    MatrixXd jacobian(const VectorXd& v, const VectorXd& th) const {
        VectorXcd vc(n), vn(n);
        for (std::size_t i = 0; i < n; ++i) {
            vc(i) = std::polar(v(i), th(i));
            vn(i) = std::polar(1.0, th(i));
        }
        const VectorXcd ib = ybus * vc;
        // dS/dVm = diag(V) conj(Y diag(Vn)) + conj(diag(I)) diag(Vn)
        // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
        MatrixXcd ds_dvm(n, n), ds_dva(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                ds_dvm(i, j) = vc(i) * std::conj(ybus(i, j) * vn(j));
                ds_dva(i, j) = cd(0, 1) * vc(i) * std::conj(-ybus(i, j) * vc(j));
            }
            ds_dvm(i, i) += std::conj(ib(i)) * vn(i);
            ds_dva(i, i) += cd(0, 1) * vc(i) * std::conj(ib(i));
        }
        for (const auto& l : model->loads) {
            const double vm = v(l.bus);
            ds_dvm(l.bus, l.bus) += cd(l.alpha_p * l.p0 * std::pow(vm, l.alpha_p - 1.0),
                                       l.alpha_q * l.q0 * std::pow(vm, l.alpha_q - 1.0));
        }
        const auto npv = static_cast<Eigen::Index>(pvpq.size());
        const auto npq = static_cast<Eigen::Index>(pq.size());
        MatrixXd jac(npv + npq, npv + npq);
        for (Eigen::Index r = 0; r < npv; ++r) {
            for (Eigen::Index c = 0; c < npv; ++c) jac(r, c) = ds_dva(pvpq[r], pvpq[c]).real();
            for (Eigen::Index c = 0; c < npq; ++c) jac(r, npv + c) = ds_dvm(pvpq[r], pq[c]).real();
        }
        for (Eigen::Index r = 0; r < npq; ++r) {
            for (Eigen::Index c = 0; c < npv; ++c) jac(npv + r, c) = ds_dva(pq[r], pvpq[c]).imag();
            for (Eigen::Index c = 0; c < npq; ++c) jac(npv + r, npv + c) = ds_dvm(pq[r], pq[c]).imag();
        }
        return jac;
    }

    void update(VectorXd& v, VectorXd& th, const VectorXd& dx, double step) const {
        for (std::size_t k = 0; k < pvpq.size(); ++k) th(pvpq[k]) += step * dx(k);
        for (std::size_t k = 0; k < pq.size(); ++k) v(pq[k]) += step * dx(pvpq.size() + k);
    }
};

double inf_norm(const VectorXd& f) { return f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff(); }

bool sane(const VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v(i)) || v(i) <= 0.0) return false;
    }
    return true;
}

struct NewtonOutcome {
    bool converged = false;
    int iterations = 0;
    double mismatch = 0.0;
};

NewtonOutcome newton(const Formulation& form, VectorXd& v, VectorXd& th, double tol, int max_steps, bool damped) {
    NewtonOutcome out;
    VectorXd f = form.mismatch(v, th);
    double norm = inf_norm(f);
    for (int it = 1;; ++it) {
        out.iterations = it;
        out.mismatch = norm;
        if (!std::isfinite(norm)) return out;
        if (norm <= tol) {
            out.converged = true;
            return out;
        }
        if (it > max_steps) return out;
        const MatrixXd jac = form.jacobian(v, th);
        const VectorXd dx = -jac.partialPivLu().solve(f);
        if (!dx.allFinite()) return out;
        if (!damped) {
            form.update(v, th, dx, 1.0);
            if (!sane(v)) return out;
            f = form.mismatch(v, th);
            norm = inf_norm(f);
            continue;
        }
        double step = 1.0;
        VectorXd best_v = v, best_th = th;
        bool accepted = false;
        for (int halving = 0; halving < 12; ++halving, step *= 0.5) {
            VectorXd tv = v, tt = th;
            form.update(tv, tt, dx, step);
            if (!sane(tv)) continue;
            const VectorXd tf = form.mismatch(tv, tt);
            const double tn = inf_norm(tf);
            if (std::isfinite(tn) && tn < norm) {
                v = std::move(tv);
                th = std::move(tt);
                f = tf;
                norm = tn;
                accepted = true;
                break;
            }
        }
        if (!accepted) return out;
    }
}

}  // namespace

NetworkControls default_controls(const GridModel& model) {
    NetworkControls c;
    c.taps.assign(model.oltc_branches().size(), 1.0);
    c.oxl_limited.assign(model.generators.size(), false);
    return c;
}

PowerFlowResult solve_power_flow(const GridModel& model, const NetworkControls& controls, const VectorXd& v0,
                                 const VectorXd& theta0, const PowerFlowOptions& options) {
    const Formulation form(model, controls);
    const auto n = static_cast<Eigen::Index>(form.n);
    VectorXd v_start = v0.size() == n ? v0 : VectorXd::Ones(n);
    VectorXd th_start = theta0.size() == n ? theta0 : VectorXd::Zero(n);
    form.apply_setpoints(v_start, controls);

    PowerFlowResult res;
    VectorXd v = v_start, th = th_start;
    auto run = newton(form, v, th, options.tolerance, options.max_iterations, false);
    if (!run.converged) {
        v = v_start;
        th = th_start;
        run = newton(form, v, th, options.tolerance, options.damped_max_iterations, true);
        res.damped = true;
    }
    res.converged = run.converged;
    res.iterations = run.iterations;
    res.max_mismatch = run.mismatch;
    res.v = v;
    res.theta = th;
    res.p_from.assign(model.branches.size(), 0.0);
    res.q_from.assign(model.branches.size(), 0.0);
    res.q_gen.assign(model.generators.size(), 0.0);
    if (!res.converged) return res;

    const auto oltcs = model.oltc_branches();
    std::vector<double> tap(model.branches.size(), 1.0);
    for (std::size_t k = 0; k < oltcs.size(); ++k) tap[oltcs[k]] = controls.taps[k];
    for (std::size_t k = 0; k < model.branches.size(); ++k) {
        const auto& br = model.branches[k];
        if (!br.in_service) continue;
        const cd y = 1.0 / cd(br.r, br.x);
        const cd vf = std::polar(v(br.from), th(br.from));
        const cd vt = std::polar(v(br.to), th(br.to));
        const double a = tap[k];
        const cd i_from = y * a * a * vf - y * a * vt;
        const cd s = vf * std::conj(i_from);
        res.p_from[k] = s.real();
        res.q_from[k] = s.imag();
    }

    // Generator outputs: bus net injection plus local load; shared equally among
    // regulating units at the same bus, limited units report q_max.
    const VectorXcd s_calc = form.injections(v, th);
    VectorXd load_p = VectorXd::Zero(n), load_q = VectorXd::Zero(n);
    for (const auto& l : model.loads) {
        load_p(l.bus) += l.p0 * std::pow(v(l.bus), l.alpha_p);
        load_q(l.bus) += l.q0 * std::pow(v(l.bus), l.alpha_q);
    }
    std::vector<int> regulating(form.n, 0);
    for (std::size_t g = 0; g < model.generators.size(); ++g) {
        const auto& gen = model.generators[g];
        const bool limited = !controls.oxl_limited.empty() && controls.oxl_limited[g];
        if (gen.in_service && !limited) regulating[gen.bus] += 1;
    }
    for (std::size_t g = 0; g < model.generators.size(); ++g) {
        const auto& gen = model.generators[g];
        if (!gen.in_service) continue;
        const bool limited = !controls.oxl_limited.empty() && controls.oxl_limited[g];
        if (limited) {
            res.q_gen[g] = gen.q_max;
        } else if (regulating[gen.bus] > 0) {
            const double q_bus = s_calc(gen.bus).imag() + load_q(gen.bus) - form.q_fixed(gen.bus);
            res.q_gen[g] = q_bus / regulating[gen.bus];
        }
    }
    const auto slack = model.slack_bus();
    res.p_slack = s_calc(slack).real() + load_p(slack);
    return res;
}

Mismatch power_mismatch(const GridModel& model, const NetworkControls& controls, const VectorXd& v,
                        const VectorXd& theta) {
    const Formulation form(model, controls);
    const VectorXcd ds = form.injections(v, theta) - form.scheduled(v);
    Mismatch m;
    for (auto i : form.pvpq) m.max_p = std::max(m.max_p, std::abs(ds(i).real()));
    for (auto i : form.pq) m.max_q = std::max(m.max_q, std::abs(ds(i).imag()));
    return m;
}

}  // namespace vip::grid
