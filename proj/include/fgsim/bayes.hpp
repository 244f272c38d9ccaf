#pragma once

#include <cstdint>
#include <vector>

#include "fgsim/rng.hpp"

namespace fgsim {

/// The Gaussian hierarchy constants and per-client observations. The
/// simplification theta_mn = theta_m is in force throughout: sigma_m_sq is
/// carried for symbol fidelity but must be zero for every posterior formula
/// (no formulas exist for the general case).
///
/// x[m][n] is the n-th client's sufficient statistic in group m; the target
/// client is always (group 0, client 0) in this indexing. Relabel inputs to
/// study another client.
struct BayesHierarchy {
    std::size_t M = 0;                          // number of groups
    std::vector<std::size_t> N;                 // group sizes
    double sigma0_sq = 1.0;                     // group-level prior variance
    std::vector<double> sigma_m_sq;             // within-group parameter variance (must be 0)
    std::vector<std::vector<double>> sigma_mn_sq; // per-client observation variances
    std::vector<std::vector<double>> x;         // per-client observations

    /// Throws on shape mismatches, non-positive variances, or sigma_m_sq > 0
    /// (NotImplementedError: the simplified hierarchy is the only one with
    /// posterior formulas).
    void validate() const;
};

struct Posterior {
    double mean = 0.0;
    double variance = 0.0;
};

/// Own data only: N(x_11, sigma_11^2).
Posterior posterior_no_sharing(const BayesHierarchy& h);

/// Own group's data: precision-weighted mean and inverse total precision
/// over the target group's clients.
Posterior posterior_group_sharing(const BayesHierarchy& h);

/// All groups' data: other groups' observations enter through their
/// theta_0-marginal, each carrying precision 1/(sigma_0^2 + sigma_mn^2);
/// that evidence is then combined with the target group's at prior-
/// equivalent precision 1/(sigma_0^2 + sigma_rest^2). Requires M >= 2.
Posterior posterior_global_sharing(const BayesHierarchy& h);

/// sigma_g1^2 / sigma_11^2 = 1 / (1 + sum_{n>=2} (sigma_11/sigma_1n)^2), in (0, 1];
/// equals 1 exactly when the target group has a single client.
double variance_ratio_group(const BayesHierarchy& h);

/// sigma_G1^2 / sigma_g1^2 < 1, requires M >= 2.
double variance_ratio_global(const BayesHierarchy& h);

enum class SharingRegime { none, group, global };

const char* regime_name(SharingRegime r);

struct McPosterior {
    double mean = 0.0;
    double variance = 0.0;
    double stderr_mean = 0.0;
    double effective_sample_size = 0.0;
};

/// Brute-force check of the closed forms: self-normalized importance
/// sampling over the latent parameters, weighting each sample by the joint
/// likelihood of the regime's conditioning set evaluated observation by
/// observation. Throws UnreliableEstimateError when the effective sample
/// size drops below 100.
McPosterior mc_posterior_oracle(const BayesHierarchy& h, SharingRegime regime,
                                std::size_t n_samples, RngStream& rng);

} // namespace fgsim
