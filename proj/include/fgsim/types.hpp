#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fgsim/errors.hpp"

namespace fgsim {

/// Flat vector of model parameters. All aggregation, delta arithmetic and
/// checkpointing is model-agnostic; models define their own index layout.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
    explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

    std::size_t dim() const { return values_.size(); }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }

    bool all_finite() const {
        for (double v : values_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    /// this += alpha * other
    void axpy(double alpha, const ParamVector& other) {
        if (other.dim() != dim()) throw ContractViolation("ParamVector::axpy: dim mismatch");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += alpha * other.values_[i];
    }

    friend ParamVector operator-(const ParamVector& a, const ParamVector& b) {
        if (a.dim() != b.dim()) throw ContractViolation("ParamVector subtraction: dim mismatch");
        ParamVector out(a.dim());
        for (std::size_t i = 0; i < a.dim(); ++i) out.values_[i] = a.values_[i] - b.values_[i];
        return out;
    }

    friend bool operator==(const ParamVector& a, const ParamVector& b) {
        return a.values_ == b.values_;
    }

private:
    std::vector<double> values_;
};

/// One token sequence; ids in [0, vocab_size).
using TokenSequence = std::vector<std::int32_t>;

/// A single training or evaluation example: either a real scalar
/// (Gaussian-mean task) or a token sequence (language-model task).
struct Example {
    std::variant<double, TokenSequence> payload;

    bool is_scalar() const { return std::holds_alternative<double>(payload); }
    double scalar() const { return std::get<double>(payload); }
    const TokenSequence& tokens() const { return std::get<TokenSequence>(payload); }

    static Example from_scalar(double x) { return Example{x}; }
    static Example from_tokens(TokenSequence t) { return Example{std::move(t)}; }
};

/// One client: id, its group, and its private train/eval splits.
struct ClientRecord {
    std::string client_id;
    std::string group_id;
    std::vector<Example> train_examples;
    std::vector<Example> eval_examples;
};

/// One client's round update: the delivered model minus the locally trained
/// model, plus the local example count used for weighted aggregation.
struct ModelDelta {
    std::string client_id;
    std::uint64_t round = 0;
    ParamVector delta;
    std::uint64_t num_examples = 1;
};

} // namespace fgsim
