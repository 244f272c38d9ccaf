#pragma once

#include "fgsim/model.hpp"

namespace fgsim {

/// Tiny neural bigram language model: predict token t+1 from token t through
/// embed -> affine -> tanh -> affine -> softmax. Loss is the mean token-level
/// cross-entropy over all consecutive pairs in the batch.
///
/// Flat parameter layout, in order:
///   embedding  V x d   (row per token)
///   W1         d x h   (z1 = e W1 + b1)
///   b1         h
///   W2         h x V   (z2 = a W2 + b2)
///   b2         V
/// so param_dim = V*d + d*h + h + h*V + V.
class TinyBigramLM final : public TrainableModel, public LanguageModel {
public:
    TinyBigramLM(int vocab_size = 64, int embed_dim = 16, int hidden_dim = 32);

    int vocab_size() const { return V_; }
    int embed_dim() const { return d_; }
    int hidden_dim() const { return h_; }

    std::size_t param_dim() const override;
    double loss(const ParamVector& params, std::span<const Example> batch) const override;
    ParamVector grad(const ParamVector& params, std::span<const Example> batch) const override;

    /// Uniform init in [-0.08, 0.08] per coordinate.
    ParamVector init_params(RngStream& rng) const override;

    std::pair<double, std::size_t> sequence_nll(const ParamVector& params,
                                                const Example& sentence) const override;

private:
    int V_;
    int d_;
    int h_;

    // Parameter block offsets into the flat vector.
    std::size_t off_w1() const { return static_cast<std::size_t>(V_) * d_; }
    std::size_t off_b1() const { return off_w1() + static_cast<std::size_t>(d_) * h_; }
    std::size_t off_w2() const { return off_b1() + static_cast<std::size_t>(h_); }
    std::size_t off_b2() const { return off_w2() + static_cast<std::size_t>(h_) * V_; }

    void check_params(const ParamVector& params) const;
    void check_tokens(const Example& ex) const;

    // Forward pass for one input token; fills hidden activation and
    // log-probabilities. Returns nothing; scratch buffers are caller-owned.
    void forward(const double* p, int token, std::vector<double>& act,
                 std::vector<double>& logprob) const;
};

} // namespace fgsim
