#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fgsim/bayes.hpp"
#include "fgsim/population.hpp"

namespace fgsim {

/// Synthetic Gaussian hierarchy: group means drawn around theta0, client
/// observations drawn around the group mean. Clients within a group differ
/// only in observation variance and sample count.
struct GaussianGenConfig {
    std::size_t M = 3;                   // groups
    std::vector<std::size_t> N;          // clients per group (shared_N used when empty)
    std::size_t shared_N = 4;
    double theta0 = 0.0;
    double sigma0_sq = 1.0;
    double sigma_mn_sq = 1.0;            // shared observation variance
    std::vector<std::vector<double>> sigma_mn_sq_per_client; // optional override
    std::size_t examples_per_client = 8;
    std::uint64_t seed = 0;

    std::vector<std::size_t> group_sizes() const;
    void validate() const;

    static GaussianGenConfig from_json(const std::string& text);
};

/// Returns the Population (train + fresh eval draws per client) and the
/// matching BayesHierarchy, whose x_mn is each client's train sample mean
/// with effective variance sigma_mn^2 / examples_per_client. Both views are
/// built from the same underlying draws.
std::pair<Population, BayesHierarchy> gen_gaussian_population(const GaussianGenConfig& cfg);

/// Synthetic grouped text: a global bigram table, per-group tables pulled
/// away from it by group_divergence, long-tailed per-client sentence counts.
struct TextGenConfig {
    int vocab_size = 64;
    std::size_t num_groups = 3;
    std::vector<std::size_t> clients_per_group; // shared value used when empty
    std::size_t shared_clients_per_group = 100;
    double global_bigram_concentration = 0.3; // symmetric Dirichlet parameter
    double group_divergence = 0.8;            // 0 = shared table, 1 = independent tables
    double client_size_tail = 1.5;            // power-law exponent over sentence counts
    std::size_t min_sentences = 4;
    std::size_t max_sentences = 200;
    std::size_t sentence_len_min = 6;
    std::size_t sentence_len_max = 16;
    double eval_fraction = 0.25;
    std::uint64_t seed = 0;

    std::vector<std::size_t> group_sizes() const;
    void validate() const;

    static TextGenConfig from_json(const std::string& text);
};

Population gen_text_population(const TextGenConfig& cfg);

/// The row-stochastic bigram tables behind gen_text_population, exposed for
/// distribution-distance checks. tables[g][row*V + col] = P(col | row) in
/// group g; the same draws gen_text_population rolls sentences from.
std::vector<std::vector<double>> text_group_tables(const TextGenConfig& cfg);

} // namespace fgsim
