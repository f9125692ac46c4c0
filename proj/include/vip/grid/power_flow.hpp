#pragma once

#include <vector>

#include <Eigen/Core>

#include "vip/grid/grid_model.hpp"

namespace vip::grid {

struct PowerFlowOptions {
    double tolerance = 1e-8;  ///< max |ΔP|, |ΔQ| in pu
    int max_iterations = 20;
    int damped_max_iterations = 40;
};

/// Electrical inputs that vary during a simulation on top of the static model.
struct NetworkControls {
    std::vector<double> taps;       ///< per OLTC branch, in GridModel::oltc_branches() order
    std::vector<bool> oxl_limited;  ///< per generator: solved as PQ at q_max
};

struct PowerFlowResult {
    Eigen::VectorXd v;      ///< bus voltage magnitude, pu
    Eigen::VectorXd theta;  ///< bus angle, rad
    std::vector<double> p_from;  ///< per branch; 0 for out-of-service
    std::vector<double> q_from;
    std::vector<double> q_gen;  ///< per generator reactive output, pu
    double p_slack = 0.0;
    bool converged = false;
    bool damped = false;  ///< the damped retry was needed
    int iterations = 0;   ///< mismatch evaluations of the run that produced the result
    double max_mismatch = 0.0;
};

/// Default controls for a model: all taps 1.0, no OXL limiting.
NetworkControls default_controls(const GridModel& model);

/// Newton-Raphson power flow in polar coordinates with voltage-dependent
/// loads P = P0 V^αP, Q = Q0 V^αQ. `v0`/`theta0` are the starting point (warm
/// start); pass empty vectors for a flat start. Runs max_iterations Newton steps
/// and, on failure, one damped retry from the same start with step halving.
/// Does not throw on divergence: check `converged`.
PowerFlowResult solve_power_flow(const GridModel& model, const NetworkControls& controls,
                                 const Eigen::VectorXd& v0, const Eigen::VectorXd& theta0,
                                 const PowerFlowOptions& options = {});

/// Per-bus mismatch |S_calc - S_spec| components at the given voltages, for
/// non-slack buses (P) and PQ buses (Q). Used to verify converged solutions.
struct Mismatch {
    double max_p = 0.0;
    double max_q = 0.0;
};
Mismatch power_mismatch(const GridModel& model, const NetworkControls& controls, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& theta);

}  // namespace vip::grid
