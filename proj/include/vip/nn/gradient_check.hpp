#pragma once

#include <cstdint>

#include "vip/nn/network.hpp"

namespace vip::nn {

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t parameters_checked = 0;
};

/// Compares backward() against central finite differences of the batch-mean
/// cross-entropy for random parameters, inputs, targets and dropout masks.
/// Relative error per parameter is |a - n| / max(|a|, |n|, floor).
GradientCheckResult gradient_check(const NetSpec& spec, int trials, std::uint64_t seed, double step = 1e-5,
                                   Eigen::Index batch = 2, bool with_dropout = true, double floor = 1e-7);

}  // namespace vip::nn
