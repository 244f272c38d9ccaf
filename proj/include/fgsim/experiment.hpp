#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fgsim/bayes.hpp"
#include "fgsim/cost.hpp"
#include "fgsim/datagen.hpp"
#include "fgsim/pipeline.hpp"

namespace fgsim {

inline constexpr const char* kCodeVersion = "fgsim 0.1.0";

struct DataSpec {
    enum class Kind { gaussian, text, file };
    Kind kind = Kind::text;
    GaussianGenConfig gaussian;
    TextGenConfig text;
    std::string path; // for Kind::file
};

struct ModelSpec {
    int embed_dim = 16;
    int hidden_dim = 32;
};

struct ExperimentSpec {
    DataSpec data;
    RunConfig run;
    std::vector<Method> methods{Method::FL, Method::PerFL, Method::GroupFL, Method::GroupPerFL};
    std::string output_dir = "out";
    int repeats = 1;
    std::vector<double> eta_il_grid; // empty: use run.eta_il as-is
    ModelSpec model;
    int threads = 1; // execution detail; never affects outputs

    void validate() const;
    std::string to_json() const; // canonical form, also the config-hash input
    static ExperimentSpec from_json(const std::string& text);
    static ExperimentSpec load(const std::string& path);

    std::string config_hash() const;
};

struct MethodResult {
    Method method = Method::FL;
    std::uint64_t seed = 0;
    double eta_il_used = 0.0; // 0 when the method does not personalize
    double overall_metric = 0.0;
    std::map<std::string, double> group_metric;
    std::map<std::string, double> client_metric;
    std::map<std::string, CostReport> client_costs;
    std::vector<RoundLog> logs; // exactly the stages this method ran
    std::string config_hash;
    std::string code_version;
};

/// Runs every requested method for `repeats` consecutive seeds, sharing
/// stage-1 and stage-2 models where methods overlap, and writes all result
/// files under output_dir. Nothing is written unless every stage succeeds.
std::vector<MethodResult> run_experiment(const ExperimentSpec& spec);

struct HistogramBucket {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

struct Histogram {
    std::vector<HistogramBucket> buckets;
    double negative_fraction = 0.0; // share of clients with metric_a < metric_b
    std::size_t clients = 0;
};

/// Per-client relative change (metric_a - metric_b) / metric_b, binned into
/// `bins` equal-width buckets over the observed range.
Histogram emit_histogram(const MethodResult& a, const MethodResult& b, int bins);

std::string histogram_to_csv(const Histogram& hist);

struct BayesReportRow {
    SharingRegime regime = SharingRegime::none;
    Posterior closed_form;
    McPosterior mc;
    bool mean_ok = false; // |closed mean - MC mean| <= 3 * stderr
    bool var_ok = false;  // relative variance gap <= 5%
};

struct BayesReport {
    std::vector<BayesReportRow> rows;
    double ratio_group = 0.0;
    double ratio_global = 0.0; // NaN when M < 2
    bool ratio_group_matches_quotient = false;
    bool ratio_global_matches_quotient = false;
    bool all_pass = false;
};

/// Closed forms, both variance ratios, and the MC oracle for every regime
/// the hierarchy supports, with pass/fail flags at the declared tolerances.
BayesReport bayes_report(const BayesHierarchy& h, std::size_t n_samples, std::uint64_t seed);

std::string bayes_report_to_csv(const BayesReport& report);

} // namespace fgsim
