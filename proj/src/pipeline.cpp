#include "fgsim/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <functional>
#include <thread>

#include "fgsim/errors.hpp"

namespace fgsim {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Runs fn(i) for i in [0, n) across up to num_threads workers. Results are
/// keyed by index, so the outcome is identical for any thread count.
void parallel_for(std::size_t n, int num_threads, const std::function<void(std::size_t)>& fn) {
    if (num_threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(num_threads, n);
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
    }
}

double eval_loss(const TrainableModel& model, const ParamVector& params, const ClientRecord& c) {
    const std::vector<Example>& data = c.eval_examples.empty() ? c.train_examples : c.eval_examples;
    return model.loss(params, data);
}

struct ClientOutcome {
    ModelDelta delta;
    ClientRoundStat stat;
};

/// One FL round shared by the global and group stages.
void run_round(const Population& pop, const std::vector<std::string>& eligible,
               const TrainableModel& model, const RunConfig& cfg, std::string_view prefix,
               std::uint64_t round, Stage stage, const std::string& group_id, double server_eta,
               ParamVector& params, FedAdamState& state, std::vector<RoundLog>& logs,
               int num_threads) {
    RngStream sample_rng = seeded_rng(cfg.seed, sample_stream_label(prefix, round));
    const std::vector<std::string> cohort = sample_cohort(eligible, cfg.cohort_size, sample_rng);

    std::vector<ClientOutcome> outcomes(cohort.size());
    const SgdConfig sgd{cfg.eta_l, cfg.batch_size, cfg.K};
    parallel_for(cohort.size(), num_threads, [&](std::size_t i) {
        const ClientRecord& client = pop.client(cohort[i]);
        RngStream rng = seeded_rng(cfg.seed, client_stream_label(prefix, round, client.client_id));
        ClientOutcome& out = outcomes[i];
        out.stat.client_id = client.client_id;
        out.stat.uploads = 1;
        out.stat.downloads = 1;
        out.stat.loss_before = eval_loss(model, params, client);
        ParamVector trained;
        try {
            trained = local_sgd(params, client.train_examples, sgd, model, rng);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " [stage=" + stage_name(stage) +
                                  (group_id.empty() ? "" : ", group=" + group_id) +
                                  ", round=" + std::to_string(round) +
                                  ", client=" + client.client_id + "]");
        }
        out.stat.loss_after = eval_loss(model, trained, client);
        out.delta.client_id = client.client_id;
        out.delta.round = round;
        out.delta.delta = params - trained;
        out.delta.num_examples = client.train_examples.size();
    });

    // Reduce in sorted client order, independent of sampling order.
    std::sort(outcomes.begin(), outcomes.end(), [](const ClientOutcome& a, const ClientOutcome& b) {
        return a.delta.client_id < b.delta.client_id;
    });
    std::vector<ModelDelta> deltas;
    deltas.reserve(outcomes.size());
    for (ClientOutcome& o : outcomes) deltas.push_back(std::move(o.delta));

    const ParamVector pseudo_grad = aggregate_deltas(deltas, DeltaWeighting::by_examples);
    FedAdamResult updated;
    try {
        updated = fedadam_step(params, state, pseudo_grad, server_eta);
    } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " [stage=" + stage_name(stage) +
                              ", round=" + std::to_string(round) + "]");
    }
    params = std::move(updated.model);
    state = std::move(updated.state);

    RoundLog log;
    log.round = round;
    log.stage = stage;
    log.group_id = group_id;
    log.sampled_clients = cohort;
    std::sort(log.sampled_clients.begin(), log.sampled_clients.end());
    log.uploads = cohort.size();
    log.downloads = cohort.size();
    double pre = 0.0;
    for (const ClientOutcome& o : outcomes) {
        pre += o.stat.loss_before;
        log.client_stats.push_back(o.stat);
    }
    log.pre_update_eval = pre / static_cast<double>(outcomes.size());
    logs.push_back(std::move(log));
}

std::vector<std::string> sorted_client_ids(const Population& pop) {
    std::vector<std::string> ids;
    ids.reserve(pop.clients.size());
    for (const ClientRecord& c : pop.clients) ids.push_back(c.client_id);
    return ids;
}

} // namespace

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::global: return "global";
        case Stage::group: return "group";
        case Stage::personal: return "personal";
    }
    return "?";
}

std::string sample_stream_label(std::string_view prefix, std::uint64_t round) {
    return std::string(prefix) + "/round=" + std::to_string(round) + "/sample";
}

std::string client_stream_label(std::string_view prefix, std::uint64_t round,
                                const std::string& client_id) {
    return std::string(prefix) + "/round=" + std::to_string(round) + "/client=" + client_id;
}

std::string personalization_stream_label(const std::string& client_id) {
    return "stage3/client=" + client_id;
}

std::string group_stream_prefix(const std::string& group_id) {
    return "stage2/group=" + group_id;
}

void write_round_log_csv(std::ostream& out, const std::vector<RoundLog>& logs) {
    out << "stage,round,group_id,client_id,loss_before,loss_after,uploads,downloads\n";
    for (const RoundLog& log : logs) {
        for (const ClientRoundStat& s : log.client_stats) {
            out << stage_name(log.stage) << ',' << log.round << ',' << log.group_id << ','
                << s.client_id << ',' << format_double(s.loss_before) << ','
                << format_double(s.loss_after) << ',' << s.uploads << ',' << s.downloads << '\n';
        }
    }
}

std::vector<std::string> sample_cohort(const std::vector<std::string>& eligible,
                                       std::uint64_t cohort_size, RngStream& rng) {
    if (eligible.empty()) throw ContractViolation("sample_cohort: empty eligible set");
    const std::size_t take = std::min<std::size_t>(cohort_size, eligible.size());
    // Partial Fisher-Yates: the first `take` entries are a uniform sample
    // without replacement.
    std::vector<std::string> pool = eligible;
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    return pool;
}

StageResult run_global_training(const Population& pop, const TrainableModel& model,
                                const RunConfig& cfg, std::optional<ParamVector> initial,
                                std::string_view stream_prefix, int num_threads) {
    pop.validate();
    cfg.validate();
    ParamVector params;
    if (initial.has_value()) {
        if (initial->dim() != model.param_dim())
            throw ContractViolation("run_global_training: initial model dim mismatch");
        params = std::move(*initial);
    } else {
        RngStream init_rng = seeded_rng(cfg.seed, "init");
        params = model.init_params(init_rng);
    }

    const std::vector<std::string> eligible = sorted_client_ids(pop);
    FedAdamState state = FedAdamState::fresh(params.dim());
    StageResult result;
    for (std::uint64_t t = 1; t <= cfg.T; ++t) {
        run_round(pop, eligible, model, cfg, stream_prefix, t, Stage::global, "", cfg.eta_G,
                  params, state, result.logs, num_threads);
    }
    result.model = std::move(params);
    return result;
}

StageResult finetune_group(const Population& pop, const std::string& group_id,
                           const ParamVector& seed_model, const TrainableModel& model,
                           const RunConfig& cfg, std::optional<std::string> stream_prefix,
                           int num_threads) {
    auto it = pop.groups.find(group_id);
    if (it == pop.groups.end())
        throw ContractViolation("finetune_group: unknown group " + group_id);
    if (seed_model.dim() != model.param_dim())
        throw ContractViolation("finetune_group: seed model dim mismatch");
    const std::string prefix = stream_prefix.value_or(group_stream_prefix(group_id));

    ParamVector params = seed_model;
    FedAdamState state = FedAdamState::fresh(params.dim());
    StageResult result;
    for (std::uint64_t t = 1; t <= cfg.T_g; ++t) {
        try {
            run_round(pop, it->second, model, cfg, prefix, t, Stage::group, group_id, cfg.eta_g,
                      params, state, result.logs, num_threads);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " [group=" + group_id + "]");
        }
    }
    result.model = std::move(params);
    return result;
}

std::map<std::string, StageResult> run_group_finetuning(const Population& pop,
                                                        const ParamVector& seed_model,
                                                        const TrainableModel& model,
                                                        const RunConfig& cfg, int num_threads) {
    pop.validate();
    cfg.validate();
    std::map<std::string, StageResult> results;
    for (const auto& [gid, ids] : pop.groups) {
        results.emplace(gid, finetune_group(pop, gid, seed_model, model, cfg, {}, num_threads));
    }
    return results;
}

PersonalizationResult run_personalization(const Population& pop,
                                          const std::map<std::string, ParamVector>& group_models,
                                          const TrainableModel& model, const RunConfig& cfg,
                                          int num_threads) {
    pop.validate();
    for (const auto& [gid, ids] : pop.groups) {
        if (!group_models.count(gid))
            throw ContractViolation("run_personalization: no model for group " + gid);
    }

    const SgdConfig sgd{cfg.eta_il, cfg.batch_size, cfg.K_l};
    PersonalizationResult result;
    std::vector<const ClientRecord*> order;
    order.reserve(pop.clients.size());
    for (const ClientRecord& c : pop.clients) order.push_back(&c);

    std::vector<ParamVector> personalized(order.size());
    std::vector<ClientRoundStat> stats(order.size());
    parallel_for(order.size(), num_threads, [&](std::size_t i) {
        const ClientRecord& client = *order[i];
        const ParamVector& seed = group_models.at(client.group_id);
        RngStream rng = seeded_rng(cfg.seed, personalization_stream_label(client.client_id));
        ClientRoundStat& st = stats[i];
        st.client_id = client.client_id;
        st.loss_before = eval_loss(model, seed, client);
        try {
            personalized[i] = local_sgd(seed, client.train_examples, sgd, model, rng);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) +
                                  " [stage=personal, client=" + client.client_id + "]");
        }
        st.loss_after = eval_loss(model, personalized[i], client);
    });

    // One personal-stage log per group, clients sorted within.
    std::map<std::string, RoundLog> per_group;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const ClientRecord& client = *order[i];
        RoundLog& log = per_group[client.group_id];
        log.round = 1;
        log.stage = Stage::personal;
        log.group_id = client.group_id;
        log.sampled_clients.push_back(client.client_id);
        log.client_stats.push_back(stats[i]);
        result.client_models.emplace(client.client_id, std::move(personalized[i]));
    }
    for (auto& [gid, log] : per_group) result.logs.push_back(std::move(log));
    return result;
}

} // namespace fgsim
