#include "fgsim/bigram_lm.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "fgsim/errors.hpp"

namespace fgsim {

TinyBigramLM::TinyBigramLM(int vocab_size, int embed_dim, int hidden_dim)
    : V_(vocab_size), d_(embed_dim), h_(hidden_dim) {
    if (V_ < 2 || d_ < 1 || h_ < 1)
        throw ConfigError("TinyBigramLM: need vocab_size >= 2 and positive dims");
}

std::size_t TinyBigramLM::param_dim() const {
    return off_b2() + static_cast<std::size_t>(V_);
}

void TinyBigramLM::check_params(const ParamVector& params) const {
    if (params.dim() != param_dim())
        throw ContractViolation("TinyBigramLM: param dim " + std::to_string(params.dim()) +
                                " != expected " + std::to_string(param_dim()));
}

void TinyBigramLM::check_tokens(const Example& ex) const {
    if (ex.is_scalar()) throw ContractViolation("TinyBigramLM: expected token sequence example");
    for (std::int32_t t : ex.tokens()) {
        if (t < 0 || t >= V_)
            throw ContractViolation("TinyBigramLM: token id " + std::to_string(t) +
                                    " out of range [0, " + std::to_string(V_) + ")");
    }
}

void TinyBigramLM::forward(const double* p, int token, std::vector<double>& act,
                           std::vector<double>& logprob) const {
    const double* emb = p + static_cast<std::size_t>(token) * d_;
    const double* w1 = p + off_w1();
    const double* b1 = p + off_b1();
    const double* w2 = p + off_w2();
    const double* b2 = p + off_b2();

    act.assign(h_, 0.0);
    for (int i = 0; i < d_; ++i) {
        const double e = emb[i];
        const double* row = w1 + static_cast<std::size_t>(i) * h_;
        for (int j = 0; j < h_; ++j) act[j] += e * row[j];
    }
    for (int j = 0; j < h_; ++j) act[j] = std::tanh(act[j] + b1[j]);

    logprob.assign(V_, 0.0);
    for (int k = 0; k < V_; ++k) logprob[k] = b2[k];
    for (int j = 0; j < h_; ++j) {
        const double a = act[j];
        const double* row = w2 + static_cast<std::size_t>(j) * V_;
        for (int k = 0; k < V_; ++k) logprob[k] += a * row[k];
    }
    // log-softmax, stabilized by the max logit
    double mx = logprob[0];
    for (int k = 1; k < V_; ++k) mx = std::max(mx, logprob[k]);
    double sum = 0.0;
    for (int k = 0; k < V_; ++k) sum += std::exp(logprob[k] - mx);
    const double lse = mx + std::log(sum);
    for (int k = 0; k < V_; ++k) logprob[k] -= lse;
}

double TinyBigramLM::loss(const ParamVector& params, std::span<const Example> batch) const {
    check_params(params);
    const double* p = params.data();
    std::vector<double> act, logprob;
    double total = 0.0;
    std::size_t pairs = 0;
    for (const Example& ex : batch) {
        check_tokens(ex);
        const TokenSequence& toks = ex.tokens();
        for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
            forward(p, toks[i], act, logprob);
            total -= logprob[toks[i + 1]];
            ++pairs;
        }
    }
    return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

ParamVector TinyBigramLM::grad(const ParamVector& params, std::span<const Example> batch) const {
    check_params(params);
    const double* p = params.data();
    const double* w1 = p + off_w1();
    const double* w2 = p + off_w2();

    ParamVector grad(param_dim());
    double* g = grad.data();
    double* g_w1 = g + off_w1();
    double* g_b1 = g + off_b1();
    double* g_w2 = g + off_w2();
    double* g_b2 = g + off_b2();

    std::size_t pairs = 0;
    for (const Example& ex : batch) {
        check_tokens(ex);
        if (ex.tokens().size() >= 2) pairs += ex.tokens().size() - 1;
    }
    if (pairs == 0) return grad;
    const double scale = 1.0 / static_cast<double>(pairs);

    std::vector<double> act, logprob, dz2(V_), dz1(h_);
    for (const Example& ex : batch) {
        const TokenSequence& toks = ex.tokens();
        for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
            const int t = toks[i];
            const int u = toks[i + 1];
            forward(p, t, act, logprob);

            // dz2 = softmax - onehot(u), already scaled by 1/pairs
            for (int k = 0; k < V_; ++k) dz2[k] = std::exp(logprob[k]) * scale;
            dz2[u] -= scale;

            for (int k = 0; k < V_; ++k) g_b2[k] += dz2[k];
            for (int j = 0; j < h_; ++j) {
                const double a = act[j];
                double* grow = g_w2 + static_cast<std::size_t>(j) * V_;
                const double* wrow = w2 + static_cast<std::size_t>(j) * V_;
                double da = 0.0;
                for (int k = 0; k < V_; ++k) {
                    grow[k] += a * dz2[k];
                    da += wrow[k] * dz2[k];
                }
                dz1[j] = da * (1.0 - a * a); // tanh'
            }
            for (int j = 0; j < h_; ++j) g_b1[j] += dz1[j];

            const double* emb = p + static_cast<std::size_t>(t) * d_;
            double* g_emb = g + static_cast<std::size_t>(t) * d_;
            for (int i2 = 0; i2 < d_; ++i2) {
                const double e = emb[i2];
                double* grow = g_w1 + static_cast<std::size_t>(i2) * h_;
                const double* wrow = w1 + static_cast<std::size_t>(i2) * h_;
                double de = 0.0;
                for (int j = 0; j < h_; ++j) {
                    grow[j] += e * dz1[j];
                    de += wrow[j] * dz1[j];
                }
                g_emb[i2] += de;
            }
        }
    }
    return grad;
}

ParamVector TinyBigramLM::init_params(RngStream& rng) const {
    ParamVector p(param_dim());
    for (std::size_t i = 0; i < p.dim(); ++i) p[i] = rng.uniform(-0.08, 0.08);
    return p;
}

std::pair<double, std::size_t> TinyBigramLM::sequence_nll(const ParamVector& params,
                                                          const Example& sentence) const {
    check_params(params);
    check_tokens(sentence);
    const TokenSequence& toks = sentence.tokens();
    std::vector<double> act, logprob;
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        forward(params.data(), toks[i], act, logprob);
        total -= logprob[toks[i + 1]];
        ++count;
    }
    return {total, count};
}

} // namespace fgsim
