#pragma once

#include <span>
#include <utility>

#include "fgsim/rng.hpp"
#include "fgsim/types.hpp"

namespace fgsim {

/// A trainable model over flat parameters with exact analytic gradients.
/// loss/grad are pure functions of (params, batch); loss uses a mean
/// reduction over the batch so the client learning rate is batch-size
/// invariant.
class TrainableModel {
public:
    virtual ~TrainableModel() = default;

    virtual std::size_t param_dim() const = 0;
    virtual double loss(const ParamVector& params, std::span<const Example> batch) const = 0;
    virtual ParamVector grad(const ParamVector& params, std::span<const Example> batch) const = 0;
    virtual ParamVector init_params(RngStream& rng) const = 0;
};

/// Capability interface for models that assign token-level likelihoods.
class LanguageModel {
public:
    virtual ~LanguageModel() = default;

    /// Total negative log-likelihood and number of predicted tokens for one
    /// token sequence.
    virtual std::pair<double, std::size_t> sequence_nll(const ParamVector& params,
                                                        const Example& sentence) const = 0;
};

/// Corpus perplexity: exp(total NLL / total predicted-token count) over all
/// sequences, token-weighted.
double perplexity(const LanguageModel& model, const ParamVector& params,
                  std::span<const Example> data);

/// Max over coordinates of the relative error between the analytic gradient
/// and a central finite difference with step epsilon:
///   |analytic_i - cd_i| / max(1, |analytic_i| + |cd_i|)
double grad_check(const TrainableModel& model, const ParamVector& params,
                  std::span<const Example> batch, double epsilon);

} // namespace fgsim
