#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fgsim/model.hpp"
#include "fgsim/optim.hpp"
#include "fgsim/population.hpp"
#include "fgsim/run_config.hpp"

namespace fgsim {

enum class Stage { global, group, personal };

const char* stage_name(Stage s);

/// Per-client record inside one round, feeding the round-log CSV.
struct ClientRoundStat {
    std::string client_id;
    double loss_before = 0.0; // eval loss under the delivered model
    double loss_after = 0.0;  // eval loss after local training
    std::uint64_t uploads = 0;
    std::uint64_t downloads = 0;
};

struct RoundLog {
    std::uint64_t round = 0;
    Stage stage = Stage::global;
    std::string group_id; // empty for the global stage
    std::vector<std::string> sampled_clients;
    std::optional<double> pre_update_eval; // mean eval loss of the cohort before training
    std::uint64_t uploads = 0;
    std::uint64_t downloads = 0;
    std::vector<ClientRoundStat> client_stats;
};

/// CSV columns: stage,round,group_id,client_id,loss_before,loss_after,uploads,downloads
/// One row per sampled client per round.
void write_round_log_csv(std::ostream& out, const std::vector<RoundLog>& logs);

struct StageResult {
    ParamVector model;
    std::vector<RoundLog> logs;
};

// RNG stream labels. Matched streams make stage trajectories comparable:
// group fine-tuning of group g with T_g rounds replays exactly as global
// training run with stream_prefix = group_stream_prefix(g).
std::string sample_stream_label(std::string_view prefix, std::uint64_t round);
std::string client_stream_label(std::string_view prefix, std::uint64_t round,
                                const std::string& client_id);
std::string personalization_stream_label(const std::string& client_id);
std::string group_stream_prefix(const std::string& group_id);

inline constexpr std::string_view kGlobalStreamPrefix = "stage1";

/// Uniform sample of min(cohort_size, |eligible|) distinct ids, without
/// replacement; a full-size sample is a permutation.
std::vector<std::string> sample_cohort(const std::vector<std::string>& eligible,
                                       std::uint64_t cohort_size, RngStream& rng);

/// Stage 1: T rounds of sampled-cohort local SGD + FedAdam on the pseudo-
/// gradient. `initial` defaults to model.init_params on the "init" stream.
StageResult run_global_training(const Population& pop, const TrainableModel& model,
                                const RunConfig& cfg,
                                std::optional<ParamVector> initial = std::nullopt,
                                std::string_view stream_prefix = kGlobalStreamPrefix,
                                int num_threads = 1);

/// Stage 2 for one group: T_g rounds restricted to the group's clients,
/// starting from seed_model with a fresh FedAdam state and eta_g.
StageResult finetune_group(const Population& pop, const std::string& group_id,
                           const ParamVector& seed_model, const TrainableModel& model,
                           const RunConfig& cfg, std::optional<std::string> stream_prefix = {},
                           int num_threads = 1);

/// Stage 2 for every group independently.
std::map<std::string, StageResult> run_group_finetuning(const Population& pop,
                                                        const ParamVector& seed_model,
                                                        const TrainableModel& model,
                                                        const RunConfig& cfg,
                                                        int num_threads = 1);

struct PersonalizationResult {
    std::map<std::string, ParamVector> client_models;
    std::vector<RoundLog> logs; // one personal-stage log per group
};

/// Stage 3: K_l epochs of local SGD at eta_il per client, seeded from its
/// group's model. PerFL is this same operation with every group mapped to
/// the global model.
PersonalizationResult run_personalization(const Population& pop,
                                          const std::map<std::string, ParamVector>& group_models,
                                          const TrainableModel& model, const RunConfig& cfg,
                                          int num_threads = 1);

} // namespace fgsim
