#include "fgsim/model.hpp"

#include <algorithm>
#include <cmath>

#include "fgsim/errors.hpp"

namespace fgsim {

double perplexity(const LanguageModel& model, const ParamVector& params,
                  std::span<const Example> data) {
    if (data.empty()) throw ContractViolation("perplexity: empty data");
    double total_nll = 0.0;
    std::size_t total_tokens = 0;
    for (const Example& ex : data) {
        auto [nll, count] = model.sequence_nll(params, ex);
        total_nll += nll;
        total_tokens += count;
    }
    if (total_tokens == 0)
        throw ContractViolation("perplexity: no predicted tokens (all sequences shorter than 2)");
    return std::exp(total_nll / static_cast<double>(total_tokens));
}

double grad_check(const TrainableModel& model, const ParamVector& params,
                  std::span<const Example> batch, double epsilon) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
        throw ContractViolation("grad_check: epsilon must be in [1e-7, 1e-3]");
    const ParamVector analytic = model.grad(params, batch);
    ParamVector probe = params;
    double worst = 0.0;
    for (std::size_t i = 0; i < params.dim(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + epsilon;
        const double up = model.loss(probe, batch);
        probe[i] = saved - epsilon;
        const double down = model.loss(probe, batch);
        probe[i] = saved;
        const double cd = (up - down) / (2.0 * epsilon);
        const double denom = std::max(1.0, std::abs(analytic[i]) + std::abs(cd));
        worst = std::max(worst, std::abs(analytic[i] - cd) / denom);
    }
    return worst;
}

} // namespace fgsim
