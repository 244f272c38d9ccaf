#include <algorithm>
#include <cmath>
#include <vector>

#include "fgsim/bayes.hpp"
#include "fgsim/errors.hpp"

namespace fgsim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (d * d / var + std::log(kTwoPi * var));
}

double plain_mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double v : xs) s += v;
    return s / static_cast<double>(xs.size());
}

} // namespace

McPosterior mc_posterior_oracle(const BayesHierarchy& h, SharingRegime regime,
                                std::size_t n_samples, RngStream& rng) {
    h.validate();
    if (n_samples < 10000)
        throw ContractViolation("mc_posterior_oracle: n_samples must be >= 10^4");
    if (regime == SharingRegime::global && h.M < 2)
        throw ContractViolation("mc_posterior_oracle: global regime needs M >= 2");

    // Proposal for the target-group parameter: centered on the group's plain
    // data mean, wide enough to dominate any posterior the conditioning set
    // can produce.
    double group_precision = 0.0;
    for (std::size_t n = 0; n < h.N[0]; ++n) group_precision += 1.0 / h.sigma_mn_sq[0][n];
    const double c1 = regime == SharingRegime::none ? h.x[0][0] : plain_mean(h.x[0]);
    double spread1 = 0.0;
    for (double v : h.x[0]) spread1 = std::max(spread1, std::abs(v - c1));

    // Proposal for theta_0 (only sampled in the global regime).
    double c0 = c1;
    double s0 = 1.0;
    double rest_var = 0.0;
    if (regime == SharingRegime::global) {
        std::vector<double> rest;
        double rest_precision = 0.0;
        for (std::size_t m = 1; m < h.M; ++m) {
            for (std::size_t n = 0; n < h.N[m]; ++n) {
                rest.push_back(h.x[m][n]);
                rest_precision += 1.0 / (h.sigma0_sq + h.sigma_mn_sq[m][n]);
            }
        }
        rest_var = 1.0 / rest_precision;
        c0 = plain_mean(rest);
        double spread0 = 0.0;
        for (double v : rest) spread0 = std::max(spread0, std::abs(v - c0));
        s0 = 4.0 * std::sqrt(rest_var) + std::sqrt(h.sigma0_sq) + 0.5 * spread0 + 1e-3;
    }
    const double s1 = 4.0 * std::sqrt(1.0 / group_precision) + spread1 +
                      (regime == SharingRegime::global ? std::abs(c1 - c0) : 0.0) + 1e-3;

    std::vector<double> theta(n_samples);
    std::vector<double> logw(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double t1 = rng.normal(c1, s1);
        double lw = -log_normal_pdf(t1, c1, s1 * s1); // divide by the proposal density

        if (regime == SharingRegime::none) {
            lw += log_normal_pdf(h.x[0][0], t1, h.sigma_mn_sq[0][0]);
        } else {
            for (std::size_t n = 0; n < h.N[0]; ++n)
                lw += log_normal_pdf(h.x[0][n], t1, h.sigma_mn_sq[0][n]);
        }
        if (regime == SharingRegime::global) {
            const double t0 = rng.normal(c0, s0);
            lw -= log_normal_pdf(t0, c0, s0 * s0);
            lw += log_normal_pdf(t1, t0, h.sigma0_sq);
            for (std::size_t m = 1; m < h.M; ++m) {
                for (std::size_t n = 0; n < h.N[m]; ++n)
                    lw += log_normal_pdf(h.x[m][n], t0, h.sigma0_sq + h.sigma_mn_sq[m][n]);
            }
        }
        theta[i] = t1;
        logw[i] = lw;
    }

    const double max_lw = *std::max_element(logw.begin(), logw.end());
    if (!std::isfinite(max_lw))
        throw UnreliableEstimateError("mc_posterior_oracle: degenerate weights");

    double sum_w = 0.0, sum_w2 = 0.0, sum_wt = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double w = std::exp(logw[i] - max_lw);
        logw[i] = w; // reuse the buffer for the shifted weights
        sum_w += w;
        sum_w2 += w * w;
        sum_wt += w * theta[i];
    }
    const double ess = sum_w * sum_w / sum_w2;
    if (ess < 100.0)
        throw UnreliableEstimateError(
            "mc_posterior_oracle: effective sample size " + std::to_string(ess) +
            " < 100; widen the proposal or increase n_samples");

    McPosterior out;
    out.effective_sample_size = ess;
    out.mean = sum_wt / sum_w;
    double var = 0.0, se2 = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double wn = logw[i] / sum_w;
        const double d = theta[i] - out.mean;
        var += wn * d * d;
        se2 += wn * wn * d * d;
    }
    out.variance = var;
    out.stderr_mean = std::sqrt(se2);
    return out;
}

} // namespace fgsim
