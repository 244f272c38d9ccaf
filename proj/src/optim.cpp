#include "fgsim/optim.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "fgsim/errors.hpp"

namespace fgsim {

ParamVector local_sgd(const ParamVector& model, std::span<const Example> data,
                      const SgdConfig& cfg, const TrainableModel& loss_fn, RngStream& rng) {
    if (data.empty()) throw ContractViolation("local_sgd: empty data");
    if (model.dim() != loss_fn.param_dim())
        throw ContractViolation("local_sgd: model dim does not match loss_fn");
    if (!(cfg.learning_rate >= 0.0)) throw ContractViolation("local_sgd: negative learning rate");
    if (cfg.batch_size == 0) throw ContractViolation("local_sgd: batch_size must be positive");

    ParamVector params = model;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Example> batch;
    batch.reserve(std::min<std::size_t>(cfg.batch_size, data.size()));

    for (std::uint64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);

            const ParamVector g = loss_fn.grad(params, batch);
            if (!g.all_finite())
                throw DivergenceError("local_sgd: non-finite gradient at epoch " +
                                      std::to_string(epoch + 1) + ", batch " +
                                      std::to_string(batch_index + 1));
            params.axpy(-cfg.learning_rate, g);
            if (!params.all_finite())
                throw DivergenceError("local_sgd: non-finite parameters at epoch " +
                                      std::to_string(epoch + 1) + ", batch " +
                                      std::to_string(batch_index + 1));
        }
    }
    return params;
}

ParamVector aggregate_deltas(const std::vector<ModelDelta>& deltas, DeltaWeighting weighting) {
    if (deltas.empty()) throw ContractViolation("aggregate_deltas: empty input");
    const std::size_t dim = deltas.front().delta.dim();
    ParamVector sum(dim);
    double total_weight = 0.0;
    for (const ModelDelta& d : deltas) {
        if (d.delta.dim() != dim)
            throw ContractViolation("aggregate_deltas: dim mismatch for client " + d.client_id);
        const double w =
            weighting == DeltaWeighting::uniform ? 1.0 : static_cast<double>(d.num_examples);
        sum.axpy(w, d.delta);
        total_weight += w;
    }
    for (std::size_t i = 0; i < dim; ++i) sum[i] /= total_weight;
    return sum;
}

FedAdamResult fedadam_step(const ParamVector& model, const FedAdamState& state,
                           const ParamVector& pseudo_grad, double eta) {
    const std::size_t dim = model.dim();
    if (state.m.dim() != dim || state.v.dim() != dim || pseudo_grad.dim() != dim)
        throw ContractViolation("fedadam_step: dim mismatch");
    if (!pseudo_grad.all_finite())
        throw DivergenceError("fedadam_step: non-finite pseudo-gradient");

    FedAdamResult out;
    out.model = ParamVector(dim);
    out.state = state;
    out.state.step = state.step + 1;
    for (std::size_t i = 0; i < dim; ++i) {
        const double g = pseudo_grad[i];
        const double m = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        const double v = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        out.state.m[i] = m;
        out.state.v[i] = v;
        out.model[i] = model[i] - eta * m / (std::sqrt(v) + state.tau);
    }
    if (!out.model.all_finite())
        throw DivergenceError("fedadam_step: non-finite model after update " +
                              std::to_string(out.state.step));
    return out;
}

} // namespace fgsim
