#include "vip/nn/adam.hpp"

#include <cmath>

#include "vip/common/error.hpp"

namespace vip::nn {

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, const AdamHyper& hyper) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw Error(ErrorCode::ShapeMismatch, "adam operands");
    }
    ++state.step;
    state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grads;
    state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    params.array() -= hyper.learning_rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + hyper.epsilon);
}

}  // namespace vip::nn
