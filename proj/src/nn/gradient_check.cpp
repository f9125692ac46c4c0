#include "vip/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vip::nn {

GradientCheckResult gradient_check(const NetSpec& spec, int trials, std::uint64_t seed, double step,
                                   Eigen::Index batch, bool with_dropout, double floor) {
    GradientCheckResult out;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
        auto net = make_classifier(spec);
        for (Eigen::Index i = 0; i < net->params().size(); ++i) net->params()(i) = rng.uniform(-0.8, 0.8);
        SequenceBatch x;
        for (std::size_t t = 0; t < spec.seq_len; ++t) {
            Eigen::MatrixXd s(static_cast<Eigen::Index>(spec.input_dim), batch);
            for (Eigen::Index j = 0; j < s.size(); ++j) s.data()[j] = rng.uniform(-1.5, 1.5);
            x.steps.push_back(std::move(s));
        }
        std::vector<int> y;
        for (Eigen::Index j = 0; j < batch; ++j) {
            y.push_back(static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(spec.classes) - 1)));
        }
        const DropoutMasks masks = with_dropout ? net->sample_masks(rng, batch, {0.3, 0.3}) : DropoutMasks{};
        const DropoutMasks* mp = with_dropout ? &masks : nullptr;

        Eigen::VectorXd analytic;
        net->backward(*net->forward(x, mp), y, analytic);
        auto loss = [&] { return mean_cross_entropy(net->forward(x, mp)->probs, y); };
        for (Eigen::Index i = 0; i < net->params().size(); ++i) {
            const double keep = net->params()(i);
            net->params()(i) = keep + step;
            const double up = loss();
            net->params()(i) = keep - step;
            const double down = loss();
            net->params()(i) = keep;
            const double numeric = (up - down) / (2.0 * step);
            const double denom = std::max({std::abs(analytic(i)), std::abs(numeric), floor});
            out.max_relative_error = std::max(out.max_relative_error, std::abs(analytic(i) - numeric) / denom);
            ++out.parameters_checked;
        }
    }
    return out;
}

}  // namespace vip::nn
