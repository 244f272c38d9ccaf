#pragma once

#include <cstdint>
#include <vector>

#include "fgsim/model.hpp"
#include "fgsim/rng.hpp"
#include "fgsim/types.hpp"

namespace fgsim {

struct SgdConfig {
    double learning_rate = 0.1;
    std::uint64_t batch_size = 8;
    std::uint64_t epochs = 1;
};

/// Client-side mini-batch SGD. Each epoch visits every example exactly once
/// in rng-shuffled mini-batches of size <= batch_size (final batch may be
/// smaller); each batch applies theta <- theta - lr * mean_grad(batch).
/// Throws DivergenceError (with epoch/batch context) the moment a gradient
/// or updated parameter goes non-finite.
ParamVector local_sgd(const ParamVector& model, std::span<const Example> data,
                      const SgdConfig& cfg, const TrainableModel& loss_fn, RngStream& rng);

enum class DeltaWeighting { uniform, by_examples };

/// Weighted average of client deltas (the server's "pseudo-gradient"):
/// uniform weights 1/n, or weights proportional to each client's example
/// count. Implemented as sum-then-divide.
ParamVector aggregate_deltas(const std::vector<ModelDelta>& deltas, DeltaWeighting weighting);

/// Server optimizer accumulators. No bias correction is applied, which is
/// what distinguishes the federated variant from centralized Adam.
struct FedAdamState {
    ParamVector m;
    ParamVector v;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double tau = 1e-3;

    static FedAdamState fresh(std::size_t dim) {
        FedAdamState s;
        s.m = ParamVector(dim);
        s.v = ParamVector(dim);
        return s;
    }
};

struct FedAdamResult {
    ParamVector model;
    FedAdamState state;
};

/// One server update:
///   m' = b1*m + (1-b1)*g,  v' = b2*v + (1-b2)*g^2,
///   theta' = theta - eta * m' / (sqrt(v') + tau),  step' = step + 1.
/// The pseudo-gradient is the averaged delta (delivered model minus trained
/// model), which points opposite the local descent direction, so subtracting
/// here moves the server model toward the clients.
FedAdamResult fedadam_step(const ParamVector& model, const FedAdamState& state,
                           const ParamVector& pseudo_grad, double eta);

} // namespace fgsim
