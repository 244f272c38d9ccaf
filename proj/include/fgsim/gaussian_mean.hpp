#pragma once

#include "fgsim/model.hpp"

namespace fgsim {

/// One-parameter model estimating the mean of scalar observations:
/// per-example loss 0.5*(x - theta)^2, gradient (theta - x). Full-batch
/// gradient descent with step 1 lands on the sample mean in one step.
class GaussianMeanModel final : public TrainableModel {
public:
    std::size_t param_dim() const override { return 1; }

    double loss(const ParamVector& params, std::span<const Example> batch) const override;
    ParamVector grad(const ParamVector& params, std::span<const Example> batch) const override;
    ParamVector init_params(RngStream& rng) const override;
};

} // namespace fgsim
