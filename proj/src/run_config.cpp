#include "fgsim/run_config.hpp"

#include <fstream>
#include <json.hpp>

#include "fgsim/errors.hpp"

namespace fgsim {

using nlohmann::json;

void RunConfig::validate() const {
    auto positive = [](std::uint64_t v, const char* name) {
        if (v == 0) throw ConfigError(std::string("RunConfig: ") + name + " must be positive");
    };
    positive(T, "T");
    positive(T_g, "T_g");
    positive(K, "K");
    positive(K_l, "K_l");
    positive(cohort_size, "cohort_size");
    positive(batch_size, "batch_size");
    auto positive_rate = [](double v, const char* name) {
        if (!(v > 0.0)) throw ConfigError(std::string("RunConfig: ") + name + " must be > 0");
    };
    positive_rate(eta_G, "eta_G");
    positive_rate(eta_g, "eta_g");
    positive_rate(eta_l, "eta_l");
    // eta_il = 0 is allowed: it collapses personalization to the seed model,
    // which the method-composition checks rely on.
    if (eta_il < 0.0) throw ConfigError("RunConfig: eta_il must be >= 0");
}

std::string RunConfig::to_json() const {
    json j;
    j["T"] = T;
    j["T_g"] = T_g;
    j["K"] = K;
    j["K_l"] = K_l;
    j["cohort_size"] = cohort_size;
    j["eta_G"] = eta_G;
    j["eta_g"] = eta_g;
    j["eta_l"] = eta_l;
    j["eta_il"] = eta_il;
    j["batch_size"] = batch_size;
    j["seed"] = seed;
    return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("RunConfig: invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
        if (j.contains("T")) cfg.T = j.at("T").get<std::uint64_t>();
        if (j.contains("T_g")) cfg.T_g = j.at("T_g").get<std::uint64_t>();
        if (j.contains("K")) cfg.K = j.at("K").get<std::uint64_t>();
        if (j.contains("K_l")) cfg.K_l = j.at("K_l").get<std::uint64_t>();
        if (j.contains("cohort_size")) cfg.cohort_size = j.at("cohort_size").get<std::uint64_t>();
        if (j.contains("eta_G")) cfg.eta_G = j.at("eta_G").get<double>();
        if (j.contains("eta_g")) cfg.eta_g = j.at("eta_g").get<double>();
        if (j.contains("eta_l")) cfg.eta_l = j.at("eta_l").get<double>();
        if (j.contains("eta_il")) cfg.eta_il = j.at("eta_il").get<double>();
        if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<std::uint64_t>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("RunConfig: bad field type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("RunConfig: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw PersistenceError("RunConfig: cannot write " + path);
    out << to_json() << "\n";
}

} // namespace fgsim
