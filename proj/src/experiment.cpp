#include "fgsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <memory>
#include <sstream>

#include "fgsim/bigram_lm.hpp"
#include "fgsim/errors.hpp"
#include "fgsim/gaussian_mean.hpp"

namespace fgsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json data_spec_to_json(const DataSpec& d) {
    json j;
    switch (d.kind) {
        case DataSpec::Kind::gaussian: {
            j["kind"] = "gaussian";
            j["M"] = d.gaussian.M;
            if (!d.gaussian.N.empty()) j["N"] = d.gaussian.N;
            j["shared_N"] = d.gaussian.shared_N;
            j["theta0"] = d.gaussian.theta0;
            j["sigma0_sq"] = d.gaussian.sigma0_sq;
            j["sigma_mn_sq"] = d.gaussian.sigma_mn_sq;
            j["examples_per_client"] = d.gaussian.examples_per_client;
            break;
        }
        case DataSpec::Kind::text: {
            j["kind"] = "text";
            j["vocab_size"] = d.text.vocab_size;
            j["num_groups"] = d.text.num_groups;
            if (!d.text.clients_per_group.empty()) j["clients_per_group"] = d.text.clients_per_group;
            j["shared_clients_per_group"] = d.text.shared_clients_per_group;
            j["global_bigram_concentration"] = d.text.global_bigram_concentration;
            j["group_divergence"] = d.text.group_divergence;
            j["client_size_tail"] = d.text.client_size_tail;
            j["min_sentences"] = d.text.min_sentences;
            j["max_sentences"] = d.text.max_sentences;
            j["sentence_len_min"] = d.text.sentence_len_min;
            j["sentence_len_max"] = d.text.sentence_len_max;
            j["eval_fraction"] = d.text.eval_fraction;
            break;
        }
        case DataSpec::Kind::file: {
            j["kind"] = "file";
            j["path"] = d.path;
            break;
        }
    }
    return j;
}

DataSpec data_spec_from_json(const json& j) {
    DataSpec d;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gaussian") {
        d.kind = DataSpec::Kind::gaussian;
        d.gaussian = GaussianGenConfig::from_json(j.dump());
    } else if (kind == "text") {
        d.kind = DataSpec::Kind::text;
        d.text = TextGenConfig::from_json(j.dump());
    } else if (kind == "file") {
        d.kind = DataSpec::Kind::file;
        d.path = j.at("path").get<std::string>();
        if (d.path.empty()) throw ConfigError("ExperimentSpec: data.path is empty");
    } else {
        throw ConfigError("ExperimentSpec: unknown data kind '" + kind + "'");
    }
    return d;
}

struct Metrics {
    double overall = 0.0;
    std::map<std::string, double> per_group;
    std::map<std::string, double> per_client;
};

/// Evaluates every client on its eval split under `params_for`: perplexity
/// for token data, mean squared error for scalar data. Group and overall
/// figures are token-/example-weighted, matching the per-client definition.
template <typename ParamsFor>
Metrics evaluate(const Population& pop, const TrainableModel& model, ParamsFor&& params_for) {
    const auto* lm = dynamic_cast<const LanguageModel*>(&model);
    Metrics out;
    std::map<std::string, std::pair<double, double>> group_acc; // group -> (num, weight)
    double total_num = 0.0, total_weight = 0.0;
    for (const ClientRecord& c : pop.clients) {
        const ParamVector& params = params_for(c);
        const std::vector<Example>& data = c.eval_examples.empty() ? c.train_examples : c.eval_examples;
        double num = 0.0, weight = 0.0;
        if (lm != nullptr) {
            for (const Example& ex : data) {
                auto [nll, count] = lm->sequence_nll(params, ex);
                num += nll;
                weight += static_cast<double>(count);
            }
            out.per_client[c.client_id] = std::exp(num / weight);
        } else {
            const double theta = params[0];
            for (const Example& ex : data) {
                const double d = ex.scalar() - theta;
                num += d * d;
            }
            weight = static_cast<double>(data.size());
            out.per_client[c.client_id] = num / weight;
        }
        auto& acc = group_acc[c.group_id];
        acc.first += num;
        acc.second += weight;
        total_num += num;
        total_weight += weight;
    }
    for (const auto& [gid, acc] : group_acc) {
        out.per_group[gid] =
            lm != nullptr ? std::exp(acc.first / acc.second) : acc.first / acc.second;
    }
    out.overall = lm != nullptr ? std::exp(total_num / total_weight) : total_num / total_weight;
    return out;
}

struct SeedRun {
    Population pop;
    std::unique_ptr<TrainableModel> model;
    StageResult stage1;
    std::map<std::string, StageResult> stage2; // populated when a group method runs
};

std::string client_csv(const Population& pop, const Metrics& m) {
    std::ostringstream out;
    out << "client_id,group_id,train_examples,eval_examples,metric\n";
    for (const ClientRecord& c : pop.clients) {
        out << c.client_id << ',' << c.group_id << ',' << c.train_examples.size() << ','
            << c.eval_examples.size() << ',' << format_double(m.per_client.at(c.client_id)) << '\n';
    }
    return out.str();
}

std::string cost_csv(const Population& pop, const std::map<std::string, CostReport>& costs) {
    std::ostringstream out;
    out << "client_id,communication,computation\n";
    for (const ClientRecord& c : pop.clients) {
        const CostReport& r = costs.at(c.client_id);
        out << c.client_id << ',' << r.communication << ',' << r.computation << '\n';
    }
    return out.str();
}

} // namespace

void ExperimentSpec::validate() const {
    run.validate();
    if (methods.empty()) throw ConfigError("ExperimentSpec: at least one method required");
    if (repeats < 1) throw ConfigError("ExperimentSpec: repeats must be >= 1");
    if (output_dir.empty()) throw ConfigError("ExperimentSpec: output_dir required");
    for (double eta : eta_il_grid) {
        if (eta < 0.0) throw ConfigError("ExperimentSpec: eta_il grid values must be >= 0");
    }
    if (model.embed_dim < 1 || model.hidden_dim < 1)
        throw ConfigError("ExperimentSpec: model dims must be positive");
    switch (data.kind) {
        case DataSpec::Kind::gaussian: data.gaussian.validate(); break;
        case DataSpec::Kind::text: data.text.validate(); break;
        case DataSpec::Kind::file:
            if (data.path.empty()) throw ConfigError("ExperimentSpec: data.path required");
            break;
    }
}

std::string ExperimentSpec::to_json() const {
    json j;
    j["data"] = data_spec_to_json(data);
    j["run"] = json::parse(run.to_json());
    json names = json::array();
    for (Method m : methods) names.push_back(method_name(m));
    j["methods"] = names;
    j["output_dir"] = output_dir;
    j["repeats"] = repeats;
    if (!eta_il_grid.empty()) j["eta_il_grid"] = eta_il_grid;
    j["model"] = {{"embed_dim", model.embed_dim}, {"hidden_dim", model.hidden_dim}};
    return j.dump(2);
}

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("ExperimentSpec: invalid JSON: ") + e.what());
    }
    ExperimentSpec spec;
    try {
        spec.data = data_spec_from_json(j.at("data"));
        if (j.contains("run")) spec.run = RunConfig::from_json(j.at("run").dump());
        if (j.contains("methods")) {
            spec.methods.clear();
            for (const auto& name : j.at("methods"))
                spec.methods.push_back(method_from_name(name.get<std::string>()));
        }
        if (j.contains("output_dir")) spec.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("repeats")) spec.repeats = j.at("repeats").get<int>();
        if (j.contains("eta_il_grid"))
            spec.eta_il_grid = j.at("eta_il_grid").get<std::vector<double>>();
        if (j.contains("model")) {
            const auto& m = j.at("model");
            if (m.contains("embed_dim")) spec.model.embed_dim = m.at("embed_dim").get<int>();
            if (m.contains("hidden_dim")) spec.model.hidden_dim = m.at("hidden_dim").get<int>();
        }
        if (j.contains("threads")) spec.threads = j.at("threads").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("ExperimentSpec: bad field: ") + e.what());
    }
    spec.validate();
    return spec;
}

ExperimentSpec ExperimentSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("ExperimentSpec: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

std::string ExperimentSpec::config_hash() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(to_json())));
    return buf;
}

std::vector<MethodResult> run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const std::string hash = spec.config_hash();

    const bool wants_group = std::any_of(spec.methods.begin(), spec.methods.end(),
                                         method_uses_group_stage);
    std::vector<double> grid = spec.eta_il_grid;
    if (grid.empty()) grid.push_back(spec.run.eta_il);

    // All artifacts are buffered and written only after every stage succeeds,
    // so a failing run leaves no partial outputs behind.
    std::vector<std::pair<std::string, std::string>> artifacts;
    std::vector<MethodResult> results;
    std::ostringstream summary, groups_csv;
    summary << "seed,method,eta_il,overall_metric,config_hash,code_version\n";
    groups_csv << "seed,method,group_id,metric\n";

    for (int rep = 0; rep < spec.repeats; ++rep) {
        RunConfig cfg = spec.run;
        cfg.seed = spec.run.seed + static_cast<std::uint64_t>(rep);

        SeedRun run;
        switch (spec.data.kind) {
            case DataSpec::Kind::gaussian: {
                GaussianGenConfig g = spec.data.gaussian;
                g.seed = cfg.seed;
                run.pop = gen_gaussian_population(g).first;
                break;
            }
            case DataSpec::Kind::text: {
                TextGenConfig t = spec.data.text;
                t.seed = cfg.seed;
                run.pop = gen_text_population(t);
                break;
            }
            case DataSpec::Kind::file: run.pop = load_population(spec.data.path); break;
        }
        const bool token_data = !run.pop.clients.front().train_examples.front().is_scalar();
        if (token_data) {
            run.model = std::make_unique<TinyBigramLM>(run.pop.vocab_size, spec.model.embed_dim,
                                                       spec.model.hidden_dim);
        } else {
            run.model = std::make_unique<GaussianMeanModel>();
        }

        try {
            run.stage1 = run_global_training(run.pop, *run.model, cfg, std::nullopt,
                                             kGlobalStreamPrefix, spec.threads);
            if (wants_group)
                run.stage2 = run_group_finetuning(run.pop, run.stage1.model, *run.model, cfg,
                                                  spec.threads);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " [experiment seed " +
                                  std::to_string(cfg.seed) + "]");
        }

        std::map<std::string, ParamVector> global_as_group_models;
        std::map<std::string, ParamVector> group_models;
        for (const auto& [gid, ids] : run.pop.groups) {
            global_as_group_models.emplace(gid, run.stage1.model);
            if (wants_group) group_models.emplace(gid, run.stage2.at(gid).model);
        }

        std::vector<RoundLog> group_logs;
        for (const auto& [gid, res] : run.stage2)
            group_logs.insert(group_logs.end(), res.logs.begin(), res.logs.end());

        std::map<Method, MethodResult> seed_results;
        for (Method method : spec.methods) {
            MethodResult mr;
            mr.method = method;
            mr.seed = cfg.seed;
            mr.config_hash = hash;
            mr.code_version = kCodeVersion;
            mr.logs = run.stage1.logs;
            if (method_uses_group_stage(method))
                mr.logs.insert(mr.logs.end(), group_logs.begin(), group_logs.end());

            Metrics metrics;
            if (!method_uses_personalization(method)) {
                if (method == Method::FL) {
                    metrics = evaluate(run.pop, *run.model,
                                       [&](const ClientRecord&) -> const ParamVector& {
                                           return run.stage1.model;
                                       });
                } else {
                    metrics = evaluate(run.pop, *run.model,
                                       [&](const ClientRecord& c) -> const ParamVector& {
                                           return group_models.at(c.group_id);
                                       });
                }
            } else {
                // PerFL personalizes from the global model, GroupPerFL from the
                // group models; same operation, different model map.
                const auto& seeds = method == Method::PerFL ? global_as_group_models : group_models;
                bool have_best = false;
                Metrics best_metrics;
                double best_eta = 0.0;
                PersonalizationResult best_personal;
                for (double eta : grid) {
                    RunConfig pcfg = cfg;
                    pcfg.eta_il = eta;
                    PersonalizationResult personal;
                    try {
                        personal = run_personalization(run.pop, seeds, *run.model, pcfg,
                                                       spec.threads);
                    } catch (const DivergenceError& e) {
                        throw DivergenceError(std::string(e.what()) + " [method=" +
                                              method_name(method) + ", eta_il=" +
                                              format_double(eta) + "]");
                    }
                    Metrics m = evaluate(run.pop, *run.model,
                                         [&](const ClientRecord& c) -> const ParamVector& {
                                             return personal.client_models.at(c.client_id);
                                         });
                    if (!have_best || m.overall < best_metrics.overall) {
                        have_best = true;
                        best_metrics = std::move(m);
                        best_eta = eta;
                        best_personal = std::move(personal);
                    }
                }
                metrics = std::move(best_metrics);
                mr.eta_il_used = best_eta;
                mr.logs.insert(mr.logs.end(), best_personal.logs.begin(),
                               best_personal.logs.end());
            }

            mr.overall_metric = metrics.overall;
            mr.group_metric = metrics.per_group;
            mr.client_metric = metrics.per_client;
            for (const ClientRecord& c : run.pop.clients) {
                mr.client_costs[c.client_id] =
                    cost_accounting(mr.logs, method, c.client_id, cfg, run.pop);
            }

            const std::string tag =
                std::string(method_name(method)) + "_seed" + std::to_string(rep);
            artifacts.emplace_back("clients_" + tag + ".csv", client_csv(run.pop, metrics));
            artifacts.emplace_back("costs_" + tag + ".csv", cost_csv(run.pop, mr.client_costs));
            {
                std::ostringstream rounds;
                write_round_log_csv(rounds, mr.logs);
                artifacts.emplace_back("rounds_" + tag + ".csv", rounds.str());
            }

            summary << cfg.seed << ',' << method_name(method) << ','
                    << format_double(mr.eta_il_used) << ',' << format_double(mr.overall_metric)
                    << ',' << hash << ',' << kCodeVersion << '\n';
            for (const auto& [gid, metric] : mr.group_metric)
                groups_csv << cfg.seed << ',' << method_name(method) << ',' << gid << ','
                           << format_double(metric) << '\n';

            seed_results.emplace(method, mr);
            results.push_back(std::move(mr));
        }

        if (seed_results.count(Method::GroupPerFL) && seed_results.count(Method::PerFL)) {
            const Histogram hist = emit_histogram(seed_results.at(Method::GroupPerFL),
                                                  seed_results.at(Method::PerFL), 20);
            artifacts.emplace_back("histogram_GroupPerFL_vs_PerFL_seed" + std::to_string(rep) +
                                       ".csv",
                                   histogram_to_csv(hist));
        }
    }

    artifacts.emplace_back("summary.csv", summary.str());
    artifacts.emplace_back("groups.csv", groups_csv.str());

    json manifest;
    manifest["code_version"] = kCodeVersion;
    manifest["config_hash"] = hash;
    manifest["spec"] = json::parse(spec.to_json());
    json files = json::array();
    for (const auto& [name, content] : artifacts) files.push_back(name);
    files.push_back("manifest.json");
    manifest["artifacts"] = files;

    fs::create_directories(spec.output_dir);
    for (const auto& [name, content] : artifacts) {
        std::ofstream out(fs::path(spec.output_dir) / name, std::ios::binary | std::ios::trunc);
        if (!out) throw PersistenceError("run_experiment: cannot write " + name);
        out << content;
    }
    std::ofstream mout(fs::path(spec.output_dir) / "manifest.json",
                       std::ios::binary | std::ios::trunc);
    mout << manifest.dump(2) << "\n";
    if (!mout) throw PersistenceError("run_experiment: cannot write manifest.json");
    return results;
}

Histogram emit_histogram(const MethodResult& a, const MethodResult& b, int bins) {
    if (bins < 1) throw ContractViolation("emit_histogram: bins must be >= 1");
    if (a.client_metric.size() != b.client_metric.size())
        throw ContractViolation("emit_histogram: client sets differ");
    std::vector<double> rel;
    rel.reserve(a.client_metric.size());
    for (const auto& [id, ma] : a.client_metric) {
        auto it = b.client_metric.find(id);
        if (it == b.client_metric.end())
            throw ContractViolation("emit_histogram: client " + id + " missing from b");
        rel.push_back((ma - it->second) / it->second);
    }

    Histogram hist;
    hist.clients = rel.size();
    double lo = *std::min_element(rel.begin(), rel.end());
    double hi = *std::max_element(rel.begin(), rel.end());
    if (lo == hi) { // degenerate range: pad so every value lands in one bucket
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / bins;
    hist.buckets.resize(bins);
    for (int i = 0; i < bins; ++i) {
        hist.buckets[i].lo = lo + i * width;
        hist.buckets[i].hi = lo + (i + 1) * width;
    }
    std::size_t negative = 0;
    for (double r : rel) {
        int idx = static_cast<int>((r - lo) / width);
        idx = std::clamp(idx, 0, bins - 1);
        ++hist.buckets[idx].count;
        if (r < 0.0) ++negative;
    }
    hist.negative_fraction = static_cast<double>(negative) / static_cast<double>(rel.size());
    return hist;
}

std::string histogram_to_csv(const Histogram& hist) {
    std::ostringstream out;
    out << "bucket_low,bucket_high,count\n";
    for (const HistogramBucket& b : hist.buckets)
        out << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << '\n';
    out << "# negative_fraction," << format_double(hist.negative_fraction) << '\n';
    return out.str();
}

BayesReport bayes_report(const BayesHierarchy& h, std::size_t n_samples, std::uint64_t seed) {
    h.validate();
    BayesReport report;

    auto check = [&](SharingRegime regime, const Posterior& cf) {
        RngStream rng = seeded_rng(seed, std::string("bayes/regime=") + regime_name(regime));
        BayesReportRow row;
        row.regime = regime;
        row.closed_form = cf;
        row.mc = mc_posterior_oracle(h, regime, n_samples, rng);
        row.mean_ok = std::abs(cf.mean - row.mc.mean) <= 3.0 * row.mc.stderr_mean;
        row.var_ok = std::abs(cf.variance - row.mc.variance) / cf.variance <= 0.05;
        report.rows.push_back(row);
    };

    check(SharingRegime::none, posterior_no_sharing(h));
    check(SharingRegime::group, posterior_group_sharing(h));
    const bool has_global = h.M >= 2;
    if (has_global) check(SharingRegime::global, posterior_global_sharing(h));

    const Posterior none = posterior_no_sharing(h);
    const Posterior group = posterior_group_sharing(h);
    report.ratio_group = variance_ratio_group(h);
    report.ratio_group_matches_quotient =
        std::abs(report.ratio_group - group.variance / none.variance) <= 1e-12;
    if (has_global) {
        const Posterior global = posterior_global_sharing(h);
        report.ratio_global = variance_ratio_global(h);
        report.ratio_global_matches_quotient =
            std::abs(report.ratio_global - global.variance / group.variance) <= 1e-12;
    } else {
        report.ratio_global = std::numeric_limits<double>::quiet_NaN();
        report.ratio_global_matches_quotient = true;
    }

    report.all_pass = report.ratio_group_matches_quotient && report.ratio_global_matches_quotient;
    for (const BayesReportRow& row : report.rows)
        report.all_pass = report.all_pass && row.mean_ok && row.var_ok;
    return report;
}

std::string bayes_report_to_csv(const BayesReport& report) {
    std::ostringstream out;
    out << "regime,closed_mean,closed_variance,mc_mean,mc_variance,mc_stderr,ess,mean_ok,var_ok\n";
    for (const BayesReportRow& row : report.rows) {
        out << regime_name(row.regime) << ',' << format_double(row.closed_form.mean) << ','
            << format_double(row.closed_form.variance) << ',' << format_double(row.mc.mean) << ','
            << format_double(row.mc.variance) << ',' << format_double(row.mc.stderr_mean) << ','
            << format_double(row.mc.effective_sample_size) << ',' << (row.mean_ok ? 1 : 0) << ','
            << (row.var_ok ? 1 : 0) << '\n';
    }
    out << "# ratio_group," << format_double(report.ratio_group) << ",matches_quotient,"
        << (report.ratio_group_matches_quotient ? 1 : 0) << '\n';
    out << "# ratio_global," << format_double(report.ratio_global) << ",matches_quotient,"
        << (report.ratio_global_matches_quotient ? 1 : 0) << '\n';
    out << "# all_pass," << (report.all_pass ? 1 : 0) << '\n';
    return out.str();
}

} // namespace fgsim
