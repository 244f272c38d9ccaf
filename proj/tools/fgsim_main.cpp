// fgsim command-line harness: generate data, run FL pipelines, compare the
// four methods, and verify the posterior formulas against the Monte-Carlo
// oracle. All outputs are CSV/JSON under an output directory.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "fgsim/bigram_lm.hpp"
#include "fgsim/checkpoint.hpp"
#include "fgsim/errors.hpp"
#include "fgsim/experiment.hpp"
#include "fgsim/gaussian_mean.hpp"

namespace fs = std::filesystem;
using namespace fgsim;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

BayesHierarchy hierarchy_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("hierarchy: invalid JSON: ") + e.what());
    }
    BayesHierarchy h;
    try {
        h.M = j.at("M").get<std::size_t>();
        h.N = j.at("N").get<std::vector<std::size_t>>();
        h.sigma0_sq = j.at("sigma0_sq").get<double>();
        h.sigma_mn_sq = j.at("sigma_mn_sq").get<std::vector<std::vector<double>>>();
        h.x = j.at("x").get<std::vector<std::vector<double>>>();
        if (j.contains("sigma_m_sq")) h.sigma_m_sq = j.at("sigma_m_sq").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("hierarchy: bad field: ") + e.what());
    }
    h.validate();
    return h;
}

// Reads the per-client metric column out of a clients_*.csv artifact.
std::map<std::string, double> load_client_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::map<std::string, double> metrics;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                cols.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (cols.size() < 5) throw ConfigError("bad clients CSV row in " + path);
        metrics[cols[0]] = std::stod(cols[4]);
    }
    if (metrics.empty()) throw ConfigError("no client rows in " + path);
    return metrics;
}

int run_datagen(const std::string& kind, const std::string& config_path, const std::string& out,
                const std::string& hierarchy_out, std::uint64_t seed, bool seed_set) {
    if (kind == "gaussian") {
        GaussianGenConfig cfg =
            config_path.empty() ? GaussianGenConfig{} : GaussianGenConfig::from_json(read_file(config_path));
        if (seed_set) cfg.seed = seed;
        auto [pop, hierarchy] = gen_gaussian_population(cfg);
        save_population(pop, out);
        if (!hierarchy_out.empty()) {
            nlohmann::json j;
            j["M"] = hierarchy.M;
            j["N"] = hierarchy.N;
            j["sigma0_sq"] = hierarchy.sigma0_sq;
            j["sigma_m_sq"] = hierarchy.sigma_m_sq;
            j["sigma_mn_sq"] = hierarchy.sigma_mn_sq;
            j["x"] = hierarchy.x;
            std::ofstream h(hierarchy_out);
            if (!h) throw PersistenceError("cannot write " + hierarchy_out);
            h << j.dump(2) << "\n";
        }
        std::cout << "wrote " << pop.clients.size() << " clients to " << out << "\n";
    } else if (kind == "text") {
        TextGenConfig cfg =
            config_path.empty() ? TextGenConfig{} : TextGenConfig::from_json(read_file(config_path));
        if (seed_set) cfg.seed = seed;
        Population pop = gen_text_population(cfg);
        save_population(pop, out);
        std::cout << "wrote " << pop.clients.size() << " clients to " << out << "\n";
    } else {
        throw ConfigError("datagen: kind must be 'gaussian' or 'text'");
    }
    return 0;
}

int run_train(const std::string& population_path, const std::string& run_path,
              const std::string& method_str, const std::string& out_dir, int threads,
              int embed_dim, int hidden_dim) {
    const Method method = method_from_name(method_str);
    const Population pop = load_population(population_path);
    RunConfig cfg = run_path.empty() ? RunConfig{} : RunConfig::load(run_path);

    std::unique_ptr<TrainableModel> model;
    if (pop.clients.front().train_examples.front().is_scalar()) {
        model = std::make_unique<GaussianMeanModel>();
    } else {
        model = std::make_unique<TinyBigramLM>(pop.vocab_size, embed_dim, hidden_dim);
    }

    fs::create_directories(out_dir);
    StageResult stage1 = run_global_training(pop, *model, cfg, std::nullopt, kGlobalStreamPrefix,
                                             threads);
    std::vector<RoundLog> logs = stage1.logs;
    save_checkpoint(stage1.model, (fs::path(out_dir) / "global.ckpt").string());

    std::map<std::string, ParamVector> seeds;
    if (method_uses_group_stage(method)) {
        auto stage2 = run_group_finetuning(pop, stage1.model, *model, cfg, threads);
        for (const auto& [gid, res] : stage2) {
            logs.insert(logs.end(), res.logs.begin(), res.logs.end());
            save_checkpoint(res.model, (fs::path(out_dir) / ("group_" + gid + ".ckpt")).string());
            seeds.emplace(gid, res.model);
        }
    } else {
        for (const auto& [gid, ids] : pop.groups) seeds.emplace(gid, stage1.model);
    }
    if (method_uses_personalization(method)) {
        PersonalizationResult personal = run_personalization(pop, seeds, *model, cfg, threads);
        logs.insert(logs.end(), personal.logs.begin(), personal.logs.end());
    }

    std::ofstream rounds(fs::path(out_dir) / "rounds.csv");
    write_round_log_csv(rounds, logs);
    std::ofstream costs(fs::path(out_dir) / "costs.csv");
    costs << "client_id,communication,computation\n";
    for (const ClientRecord& c : pop.clients) {
        const CostReport r = cost_accounting(logs, method, c.client_id, cfg, pop);
        costs << c.client_id << ',' << r.communication << ',' << r.computation << '\n';
    }
    std::cout << method_str << " training done; artifacts in " << out_dir << "\n";
    return 0;
}

int run_bayes_check(const std::string& hierarchy_path, std::size_t samples, std::uint64_t seed,
                    const std::string& out_path) {
    const BayesHierarchy h = hierarchy_from_json(read_file(hierarchy_path));
    const BayesReport report = bayes_report(h, samples, seed);
    const std::string csv = bayes_report_to_csv(report);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw PersistenceError("cannot write " + out_path);
        out << csv;
    }
    std::cout << csv;
    if (!report.all_pass) {
        std::cerr << "bayes-check: verification FAILED\n";
        return 3;
    }
    std::cout << "bayes-check: all checks passed\n";
    return 0;
}

int run_histogram(const std::string& a_path, const std::string& b_path, int bins,
                  const std::string& out_path) {
    MethodResult a, b;
    a.client_metric = load_client_metrics(a_path);
    b.client_metric = load_client_metrics(b_path);
    const Histogram hist = emit_histogram(a, b, bins);
    const std::string csv = histogram_to_csv(hist);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw PersistenceError("cannot write " + out_path);
        out << csv;
    }
    std::cout << csv;
    return 0;
}

// Rebuilds RoundLogs from a rounds.csv so costs can be recomputed offline.
std::vector<RoundLog> load_round_logs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::map<std::string, RoundLog> keyed; // stage|group|round -> log
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                cols.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (cols.size() != 8) throw ConfigError("bad rounds CSV row in " + path);
        const std::string key = cols[0] + "|" + cols[2] + "|" + cols[1];
        RoundLog& log = keyed[key];
        log.round = std::stoull(cols[1]);
        log.group_id = cols[2];
        if (cols[0] == "global") log.stage = Stage::global;
        else if (cols[0] == "group") log.stage = Stage::group;
        else if (cols[0] == "personal") log.stage = Stage::personal;
        else throw ConfigError("bad stage '" + cols[0] + "' in " + path);
        log.sampled_clients.push_back(cols[3]);
    }
    std::vector<RoundLog> logs;
    for (auto& [key, log] : keyed) {
        std::sort(log.sampled_clients.begin(), log.sampled_clients.end());
        log.uploads = log.stage == Stage::personal ? 0 : log.sampled_clients.size();
        log.downloads = log.uploads;
        logs.push_back(std::move(log));
    }
    return logs;
}

int run_cost_report(const std::string& rounds_path, const std::string& run_path,
                    const std::string& method_str, const std::string& population_path,
                    const std::string& out_path) {
    const Method method = method_from_name(method_str);
    const RunConfig cfg = run_path.empty() ? RunConfig{} : RunConfig::load(run_path);
    const Population pop = load_population(population_path);
    const std::vector<RoundLog> logs = load_round_logs(rounds_path);

    std::ostringstream csv;
    csv << "client_id,communication,computation\n";
    for (const ClientRecord& c : pop.clients) {
        const CostReport r = cost_accounting(logs, method, c.client_id, cfg, pop);
        csv << c.client_id << ',' << r.communication << ',' << r.computation << '\n';
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw PersistenceError("cannot write " + out_path);
        out << csv.str();
    }
    std::cout << csv.str();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fgsim: group-personalized federated learning simulator"};
    app.require_subcommand(1);

    // datagen
    auto* datagen = app.add_subcommand("datagen", "generate a synthetic population");
    std::string dg_kind = "text", dg_config, dg_out = "population.txt", dg_hierarchy;
    std::uint64_t dg_seed = 0;
    datagen->add_option("--kind", dg_kind, "gaussian or text");
    datagen->add_option("--config", dg_config, "generator config JSON file");
    datagen->add_option("--out", dg_out, "population output path");
    datagen->add_option("--hierarchy-out", dg_hierarchy, "hierarchy JSON output (gaussian only)");
    auto* dg_seed_opt = datagen->add_option("--seed", dg_seed, "override config seed");

    // train
    auto* train = app.add_subcommand("train", "run one method's pipeline on a population file");
    std::string tr_pop, tr_run, tr_method = "FL", tr_out = "train_out";
    int tr_threads = 1, tr_embed = 16, tr_hidden = 32;
    train->add_option("--population", tr_pop, "population file")->required();
    train->add_option("--run", tr_run, "RunConfig JSON file");
    train->add_option("--method", tr_method, "FL, PerFL, GroupFL or GroupPerFL");
    train->add_option("--out", tr_out, "output directory");
    train->add_option("--threads", tr_threads, "worker threads");
    train->add_option("--embed-dim", tr_embed, "LM embedding dim");
    train->add_option("--hidden-dim", tr_hidden, "LM hidden dim");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "run and compare methods across seeds");
    std::string ex_spec;
    int ex_threads = 0;
    experiment->add_option("--spec", ex_spec, "ExperimentSpec JSON file")->required();
    auto* ex_threads_opt = experiment->add_option("--threads", ex_threads, "worker threads");

    // histogram
    auto* histogram = app.add_subcommand("histogram", "relative metric change between two runs");
    std::string hi_a, hi_b, hi_out;
    int hi_bins = 20;
    histogram->add_option("--a", hi_a, "clients CSV for method A")->required();
    histogram->add_option("--b", hi_b, "clients CSV for method B (baseline)")->required();
    histogram->add_option("--bins", hi_bins, "bucket count");
    histogram->add_option("--out", hi_out, "output CSV path");

    // bayes-check
    auto* bayes = app.add_subcommand("bayes-check", "verify posterior formulas against the oracle");
    std::string by_hierarchy, by_out;
    std::size_t by_samples = 1000000;
    std::uint64_t by_seed = 0;
    bayes->add_option("--hierarchy", by_hierarchy, "hierarchy JSON file")->required();
    bayes->add_option("--samples", by_samples, "importance samples per regime");
    bayes->add_option("--seed", by_seed, "oracle seed");
    bayes->add_option("--out", by_out, "report CSV path");

    // cost-report
    auto* cost = app.add_subcommand("cost-report", "per-client costs from a rounds CSV");
    std::string co_rounds, co_run, co_method = "FL", co_pop, co_out;
    cost->add_option("--rounds", co_rounds, "rounds CSV")->required();
    cost->add_option("--run", co_run, "RunConfig JSON file");
    cost->add_option("--method", co_method, "method the logs belong to");
    cost->add_option("--population", co_pop, "population file")->required();
    cost->add_option("--out", co_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (datagen->parsed())
            return run_datagen(dg_kind, dg_config, dg_out, dg_hierarchy, dg_seed,
                               dg_seed_opt->count() > 0);
        if (train->parsed())
            return run_train(tr_pop, tr_run, tr_method, tr_out, tr_threads, tr_embed, tr_hidden);
        if (experiment->parsed()) {
            ExperimentSpec spec = ExperimentSpec::load(ex_spec);
            if (ex_threads_opt->count() > 0) spec.threads = ex_threads;
            const auto results = run_experiment(spec);
            std::cout << "experiment done: " << results.size() << " method results in "
                      << spec.output_dir << "\n";
            return 0;
        }
        if (histogram->parsed()) return run_histogram(hi_a, hi_b, hi_bins, hi_out);
        if (bayes->parsed()) return run_bayes_check(by_hierarchy, by_samples, by_seed, by_out);
        if (cost->parsed()) return run_cost_report(co_rounds, co_run, co_method, co_pop, co_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ContractViolation& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 2;
    } catch (const UnreliableEstimateError& e) {
        std::cerr << "verification error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
