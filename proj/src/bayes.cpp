#include "fgsim/bayes.hpp"

#include <cmath>
#include <string>

#include "fgsim/errors.hpp"

namespace fgsim {

void BayesHierarchy::validate() const {
    if (M == 0) throw ContractViolation("BayesHierarchy: M must be >= 1");
    if (N.size() != M || sigma_mn_sq.size() != M || x.size() != M)
        throw ContractViolation("BayesHierarchy: per-group shapes do not match M");
    if (!(sigma0_sq > 0.0)) throw ContractViolation("BayesHierarchy: sigma0_sq must be > 0");
    for (std::size_t m = 0; m < M; ++m) {
        if (N[m] == 0) throw ContractViolation("BayesHierarchy: empty group " + std::to_string(m));
        if (sigma_mn_sq[m].size() != N[m] || x[m].size() != N[m])
            throw ContractViolation("BayesHierarchy: group " + std::to_string(m) +
                                    " data does not match N");
        for (double s : sigma_mn_sq[m]) {
            if (!(s > 0.0))
                throw ContractViolation("BayesHierarchy: observation variances must be > 0");
        }
        for (double v : x[m]) {
            if (!std::isfinite(v))
                throw ContractViolation("BayesHierarchy: non-finite observation");
        }
    }
    if (!sigma_m_sq.empty()) {
        if (sigma_m_sq.size() != M)
            throw ContractViolation("BayesHierarchy: sigma_m_sq shape does not match M");
        for (double s : sigma_m_sq) {
            if (s < 0.0) throw ContractViolation("BayesHierarchy: sigma_m_sq must be >= 0");
            if (s > 0.0)
                throw NotImplementedError(
                    "BayesHierarchy: posterior formulas exist only for theta_mn = theta_m "
                    "(sigma_m_sq = 0)");
        }
    }
}

namespace {

// Group-0 evidence: total precision and precision-weighted sum.
void target_group_evidence(const BayesHierarchy& h, double& precision, double& weighted_sum) {
    precision = 0.0;
    weighted_sum = 0.0;
    for (std::size_t n = 0; n < h.N[0]; ++n) {
        const double p = 1.0 / h.sigma_mn_sq[0][n];
        precision += p;
        weighted_sum += p * h.x[0][n];
    }
}

// Other groups' evidence about theta_0, one precision term per observation.
void rest_evidence(const BayesHierarchy& h, double& mu_rest, double& var_rest) {
    double precision = 0.0;
    double weighted_sum = 0.0;
    for (std::size_t m = 1; m < h.M; ++m) {
        for (std::size_t n = 0; n < h.N[m]; ++n) {
            const double p = 1.0 / (h.sigma0_sq + h.sigma_mn_sq[m][n]);
            precision += p;
            weighted_sum += p * h.x[m][n];
        }
    }
    mu_rest = weighted_sum / precision;
    var_rest = 1.0 / precision;
}

} // namespace

Posterior posterior_no_sharing(const BayesHierarchy& h) {
    h.validate();
    return Posterior{h.x[0][0], h.sigma_mn_sq[0][0]};
}

Posterior posterior_group_sharing(const BayesHierarchy& h) {
    h.validate();
    double precision, weighted_sum;
    target_group_evidence(h, precision, weighted_sum);
    return Posterior{weighted_sum / precision, 1.0 / precision};
}

Posterior posterior_global_sharing(const BayesHierarchy& h) {
    h.validate();
    if (h.M < 2)
        throw ContractViolation(
            "posterior_global_sharing: needs M >= 2 (use posterior_group_sharing)");
    double precision, weighted_sum;
    target_group_evidence(h, precision, weighted_sum);
    double mu_rest, var_rest;
    rest_evidence(h, mu_rest, var_rest);
    const double prior_precision = 1.0 / (h.sigma0_sq + var_rest);
    const double total = precision + prior_precision;
    return Posterior{(weighted_sum + prior_precision * mu_rest) / total, 1.0 / total};
}

double variance_ratio_group(const BayesHierarchy& h) {
    h.validate();
    const double s11 = h.sigma_mn_sq[0][0];
    double acc = 0.0;
    for (std::size_t n = 1; n < h.N[0]; ++n) acc += s11 / h.sigma_mn_sq[0][n];
    return 1.0 / (1.0 + acc);
}

double variance_ratio_global(const BayesHierarchy& h) {
    h.validate();
    if (h.M < 2) throw ContractViolation("variance_ratio_global: needs M >= 2");
    double precision, weighted_sum;
    target_group_evidence(h, precision, weighted_sum);
    double mu_rest, var_rest;
    rest_evidence(h, mu_rest, var_rest);
    const double prior_precision = 1.0 / (h.sigma0_sq + var_rest);
    return 1.0 / (1.0 + prior_precision / precision);
}

const char* regime_name(SharingRegime r) {
    switch (r) {
        case SharingRegime::none: return "none";
        case SharingRegime::group: return "group";
        case SharingRegime::global: return "global";
    }
    return "?";
}

} // namespace fgsim
