#include "fgsim/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "fgsim/errors.hpp"

namespace fgsim {

using nlohmann::json;

namespace {

std::string group_label(std::size_t m) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "g%02zu", m);
    return buf;
}

std::string client_label(std::size_t m, std::size_t n) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "g%02zu_c%04zu", m, n);
    return buf;
}

} // namespace

std::vector<std::size_t> GaussianGenConfig::group_sizes() const {
    if (!N.empty()) return N;
    return std::vector<std::size_t>(M, shared_N);
}

void GaussianGenConfig::validate() const {
    if (M == 0) throw ConfigError("GaussianGenConfig: M must be >= 1");
    if (M > 99) throw ConfigError("GaussianGenConfig: M must be <= 99");
    const auto sizes = group_sizes();
    if (sizes.size() != M) throw ConfigError("GaussianGenConfig: N size does not match M");
    for (std::size_t n : sizes) {
        if (n == 0 || n > 9999) throw ConfigError("GaussianGenConfig: group sizes must be in [1, 9999]");
    }
    if (sigma0_sq < 0.0) throw ConfigError("GaussianGenConfig: sigma0_sq must be >= 0");
    if (sigma_mn_sq < 0.0) throw ConfigError("GaussianGenConfig: sigma_mn_sq must be >= 0");
    if (examples_per_client == 0) throw ConfigError("GaussianGenConfig: examples_per_client must be >= 1");
    if (!sigma_mn_sq_per_client.empty()) {
        if (sigma_mn_sq_per_client.size() != M)
            throw ConfigError("GaussianGenConfig: per-client variances do not match M");
        for (std::size_t m = 0; m < M; ++m) {
            if (sigma_mn_sq_per_client[m].size() != sizes[m])
                throw ConfigError("GaussianGenConfig: per-client variances do not match N");
        }
    }
}

GaussianGenConfig GaussianGenConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("GaussianGenConfig: invalid JSON: ") + e.what());
    }
    GaussianGenConfig cfg;
    try {
        if (j.contains("M")) cfg.M = j.at("M").get<std::size_t>();
        if (j.contains("N")) cfg.N = j.at("N").get<std::vector<std::size_t>>();
        if (j.contains("shared_N")) cfg.shared_N = j.at("shared_N").get<std::size_t>();
        if (j.contains("theta0")) cfg.theta0 = j.at("theta0").get<double>();
        if (j.contains("sigma0_sq")) cfg.sigma0_sq = j.at("sigma0_sq").get<double>();
        if (j.contains("sigma_mn_sq")) cfg.sigma_mn_sq = j.at("sigma_mn_sq").get<double>();
        if (j.contains("examples_per_client"))
            cfg.examples_per_client = j.at("examples_per_client").get<std::size_t>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("GaussianGenConfig: bad field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::pair<Population, BayesHierarchy> gen_gaussian_population(const GaussianGenConfig& cfg) {
    cfg.validate();
    const auto sizes = cfg.group_sizes();

    RngStream mean_rng = seeded_rng(cfg.seed, "datagen/gaussian/group_means");
    std::vector<double> group_means(cfg.M);
    for (std::size_t m = 0; m < cfg.M; ++m)
        group_means[m] = mean_rng.normal(cfg.theta0, std::sqrt(cfg.sigma0_sq));

    BayesHierarchy h;
    h.M = cfg.M;
    h.N = sizes;
    // The hierarchy describes each client by its sufficient statistic: the
    // train sample mean, observed at variance sigma_mn^2 / examples.
    h.sigma0_sq = cfg.sigma0_sq > 0.0 ? cfg.sigma0_sq : 1e-12;
    h.sigma_m_sq.assign(cfg.M, 0.0);
    h.sigma_mn_sq.resize(cfg.M);
    h.x.resize(cfg.M);

    std::vector<ClientRecord> clients;
    for (std::size_t m = 0; m < cfg.M; ++m) {
        h.sigma_mn_sq[m].resize(sizes[m]);
        h.x[m].resize(sizes[m]);
        for (std::size_t n = 0; n < sizes[m]; ++n) {
            const double obs_var = cfg.sigma_mn_sq_per_client.empty()
                                       ? cfg.sigma_mn_sq
                                       : cfg.sigma_mn_sq_per_client[m][n];
            const double obs_sd = std::sqrt(obs_var);
            ClientRecord rec;
            rec.client_id = client_label(m, n);
            rec.group_id = group_label(m);
            RngStream rng = seeded_rng(cfg.seed, "datagen/gaussian/client=" + rec.client_id);
            double sum = 0.0;
            for (std::size_t k = 0; k < cfg.examples_per_client; ++k) {
                const double v = rng.normal(group_means[m], obs_sd);
                sum += v;
                rec.train_examples.push_back(Example::from_scalar(v));
            }
            for (std::size_t k = 0; k < cfg.examples_per_client; ++k)
                rec.eval_examples.push_back(Example::from_scalar(rng.normal(group_means[m], obs_sd)));
            h.x[m][n] = sum / static_cast<double>(cfg.examples_per_client);
            h.sigma_mn_sq[m][n] =
                std::max(obs_var, 1e-12) / static_cast<double>(cfg.examples_per_client);
            clients.push_back(std::move(rec));
        }
    }
    return {Population::from_clients(std::move(clients)), std::move(h)};
}

std::vector<std::size_t> TextGenConfig::group_sizes() const {
    if (!clients_per_group.empty()) return clients_per_group;
    return std::vector<std::size_t>(num_groups, shared_clients_per_group);
}

void TextGenConfig::validate() const {
    if (vocab_size < 2) throw ConfigError("TextGenConfig: vocab_size must be >= 2");
    if (num_groups == 0 || num_groups > 99)
        throw ConfigError("TextGenConfig: num_groups must be in [1, 99]");
    const auto sizes = group_sizes();
    if (sizes.size() != num_groups)
        throw ConfigError("TextGenConfig: clients_per_group does not match num_groups");
    for (std::size_t n : sizes) {
        if (n == 0 || n > 9999) throw ConfigError("TextGenConfig: group sizes must be in [1, 9999]");
    }
    if (!(global_bigram_concentration > 0.0))
        throw ConfigError("TextGenConfig: concentration must be > 0");
    if (group_divergence < 0.0 || group_divergence > 1.0)
        throw ConfigError("TextGenConfig: group_divergence must be in [0, 1]");
    if (!(client_size_tail > 0.0)) throw ConfigError("TextGenConfig: client_size_tail must be > 0");
    if (min_sentences < 2) throw ConfigError("TextGenConfig: min_sentences must be >= 2");
    if (max_sentences < min_sentences)
        throw ConfigError("TextGenConfig: max_sentences must be >= min_sentences");
    if (sentence_len_min < 2) throw ConfigError("TextGenConfig: sentence_len_min must be >= 2");
    if (sentence_len_max < sentence_len_min)
        throw ConfigError("TextGenConfig: sentence_len_max must be >= sentence_len_min");
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
        throw ConfigError("TextGenConfig: eval_fraction must be in (0, 1)");
}

TextGenConfig TextGenConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("TextGenConfig: invalid JSON: ") + e.what());
    }
    TextGenConfig cfg;
    try {
        if (j.contains("vocab_size")) cfg.vocab_size = j.at("vocab_size").get<int>();
        if (j.contains("num_groups")) cfg.num_groups = j.at("num_groups").get<std::size_t>();
        if (j.contains("clients_per_group"))
            cfg.clients_per_group = j.at("clients_per_group").get<std::vector<std::size_t>>();
        if (j.contains("shared_clients_per_group"))
            cfg.shared_clients_per_group = j.at("shared_clients_per_group").get<std::size_t>();
        if (j.contains("global_bigram_concentration"))
            cfg.global_bigram_concentration = j.at("global_bigram_concentration").get<double>();
        if (j.contains("group_divergence"))
            cfg.group_divergence = j.at("group_divergence").get<double>();
        if (j.contains("client_size_tail"))
            cfg.client_size_tail = j.at("client_size_tail").get<double>();
        if (j.contains("min_sentences")) cfg.min_sentences = j.at("min_sentences").get<std::size_t>();
        if (j.contains("max_sentences")) cfg.max_sentences = j.at("max_sentences").get<std::size_t>();
        if (j.contains("sentence_len_min"))
            cfg.sentence_len_min = j.at("sentence_len_min").get<std::size_t>();
        if (j.contains("sentence_len_max"))
            cfg.sentence_len_max = j.at("sentence_len_max").get<std::size_t>();
        if (j.contains("eval_fraction")) cfg.eval_fraction = j.at("eval_fraction").get<double>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("TextGenConfig: bad field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

namespace {

// One Dirichlet(alpha) draw over V outcomes.
std::vector<double> dirichlet_row(RngStream& rng, int v, double alpha) {
    std::vector<double> row(v);
    double sum = 0.0;
    for (int k = 0; k < v; ++k) {
        row[k] = rng.gamma(alpha);
        sum += row[k];
    }
    for (int k = 0; k < v; ++k) row[k] /= sum;
    return row;
}

std::vector<double> global_table(const TextGenConfig& cfg) {
    RngStream rng = seeded_rng(cfg.seed, "datagen/text/global_table");
    std::vector<double> table;
    table.reserve(static_cast<std::size_t>(cfg.vocab_size) * cfg.vocab_size);
    for (int r = 0; r < cfg.vocab_size; ++r) {
        const auto row = dirichlet_row(rng, cfg.vocab_size, cfg.global_bigram_concentration);
        table.insert(table.end(), row.begin(), row.end());
    }
    return table;
}

std::vector<double> group_table(const TextGenConfig& cfg, const std::vector<double>& global,
                                std::size_t g) {
    RngStream rng = seeded_rng(cfg.seed, "datagen/text/group_table=" + group_label(g));
    std::vector<double> table(global.size());
    const double w = cfg.group_divergence;
    for (int r = 0; r < cfg.vocab_size; ++r) {
        const auto own = dirichlet_row(rng, cfg.vocab_size, cfg.global_bigram_concentration);
        for (int k = 0; k < cfg.vocab_size; ++k) {
            const std::size_t idx = static_cast<std::size_t>(r) * cfg.vocab_size + k;
            table[idx] = (1.0 - w) * global[idx] + w * own[k];
        }
    }
    return table;
}

std::size_t sample_power_law(RngStream& rng, std::size_t lo, std::size_t hi, double tail) {
    // Inverse-CDF over the discrete truncated power law p(k) proportional to k^-tail.
    double total = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) total += std::pow(static_cast<double>(k), -tail);
    double u = rng.uniform01() * total;
    for (std::size_t k = lo; k <= hi; ++k) {
        u -= std::pow(static_cast<double>(k), -tail);
        if (u <= 0.0) return k;
    }
    return hi;
}

int sample_categorical(RngStream& rng, const double* probs, int v) {
    double u = rng.uniform01();
    for (int k = 0; k < v; ++k) {
        u -= probs[k];
        if (u <= 0.0) return k;
    }
    return v - 1;
}

} // namespace

std::vector<std::vector<double>> text_group_tables(const TextGenConfig& cfg) {
    cfg.validate();
    const auto global = global_table(cfg);
    std::vector<std::vector<double>> tables;
    tables.reserve(cfg.num_groups);
    for (std::size_t g = 0; g < cfg.num_groups; ++g)
        tables.push_back(group_table(cfg, global, g));
    return tables;
}

Population gen_text_population(const TextGenConfig& cfg) {
    cfg.validate();
    const auto tables = text_group_tables(cfg);
    const auto sizes = cfg.group_sizes();
    const int v = cfg.vocab_size;

    std::vector<ClientRecord> clients;
    for (std::size_t g = 0; g < cfg.num_groups; ++g) {
        const std::vector<double>& table = tables[g];
        for (std::size_t n = 0; n < sizes[g]; ++n) {
            ClientRecord rec;
            rec.client_id = client_label(g, n);
            rec.group_id = group_label(g);
            RngStream rng = seeded_rng(cfg.seed, "datagen/text/client=" + rec.client_id);

            const std::size_t sentences =
                sample_power_law(rng, cfg.min_sentences, cfg.max_sentences, cfg.client_size_tail);
            std::vector<Example> all;
            all.reserve(sentences);
            for (std::size_t s = 0; s < sentences; ++s) {
                const std::size_t len =
                    cfg.sentence_len_min +
                    static_cast<std::size_t>(
                        rng.uniform_below(cfg.sentence_len_max - cfg.sentence_len_min + 1));
                TokenSequence toks;
                toks.reserve(len);
                int cur = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(v)));
                toks.push_back(cur);
                for (std::size_t i = 1; i < len; ++i) {
                    cur = sample_categorical(rng, table.data() + static_cast<std::size_t>(cur) * v, v);
                    toks.push_back(cur);
                }
                all.push_back(Example::from_tokens(std::move(toks)));
            }
            // Final sentences become the eval split: at least one on each side.
            std::size_t eval_count = static_cast<std::size_t>(
                std::llround(cfg.eval_fraction * static_cast<double>(sentences)));
            eval_count = std::clamp<std::size_t>(eval_count, 1, sentences - 1);
            rec.train_examples.assign(all.begin(), all.end() - eval_count);
            rec.eval_examples.assign(all.end() - eval_count, all.end());
            clients.push_back(std::move(rec));
        }
    }
    return Population::from_clients(std::move(clients), v);
}

} // namespace fgsim
