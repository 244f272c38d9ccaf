#include "fgsim/gaussian_mean.hpp"

#include "fgsim/errors.hpp"

namespace fgsim {

double GaussianMeanModel::loss(const ParamVector& params, std::span<const Example> batch) const {
    if (batch.empty()) throw ContractViolation("GaussianMeanModel::loss: empty batch");
    const double theta = params[0];
    double total = 0.0;
    for (const Example& ex : batch) {
        const double d = ex.scalar() - theta;
        total += 0.5 * d * d;
    }
    return total / static_cast<double>(batch.size());
}

ParamVector GaussianMeanModel::grad(const ParamVector& params, std::span<const Example> batch) const {
    if (batch.empty()) throw ContractViolation("GaussianMeanModel::grad: empty batch");
    const double theta = params[0];
    double total = 0.0;
    for (const Example& ex : batch) total += theta - ex.scalar();
    ParamVector g(1);
    g[0] = total / static_cast<double>(batch.size());
    return g;
}

ParamVector GaussianMeanModel::init_params(RngStream& rng) const {
    ParamVector p(1);
    p[0] = rng.uniform(-0.08, 0.08);
    return p;
}

} // namespace fgsim
