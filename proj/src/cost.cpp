#include "fgsim/cost.hpp"

#include <algorithm>

#include "fgsim/errors.hpp"

namespace fgsim {

const char* method_name(Method m) {
    switch (m) {
        case Method::FL: return "FL";
        case Method::PerFL: return "PerFL";
        case Method::GroupFL: return "GroupFL";
        case Method::GroupPerFL: return "GroupPerFL";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "FL") return Method::FL;
    if (name == "PerFL") return Method::PerFL;
    if (name == "GroupFL") return Method::GroupFL;
    if (name == "GroupPerFL") return Method::GroupPerFL;
    throw ConfigError("unknown method '" + name + "' (expected FL, PerFL, GroupFL, GroupPerFL)");
}

bool method_uses_group_stage(Method m) {
    return m == Method::GroupFL || m == Method::GroupPerFL;
}

bool method_uses_personalization(Method m) {
    return m == Method::PerFL || m == Method::GroupPerFL;
}

CostReport cost_accounting(std::span<const RoundLog> logs, Method method,
                           const std::string& client_id, const RunConfig& cfg,
                           const Population& pop) {
    if (!pop.has_client(client_id))
        throw ContractViolation("cost_accounting: unknown client " + client_id);

    auto participated = [&](const RoundLog& log) {
        return std::binary_search(log.sampled_clients.begin(), log.sampled_clients.end(),
                                  client_id);
    };

    std::uint64_t global_rounds = 0;
    std::uint64_t group_rounds = 0;
    for (const RoundLog& log : logs) {
        if (log.stage == Stage::global && participated(log)) ++global_rounds;
        if (log.stage == Stage::group && participated(log)) ++group_rounds;
    }

    CostReport report;
    report.communication = 2 * global_rounds + 1; // per-round down+up, final global delivery
    report.computation = cfg.K * global_rounds;
    if (method_uses_group_stage(method)) {
        report.communication += 2 * group_rounds + 1; // plus the final group delivery
        report.computation += cfg.K * group_rounds;
    }
    if (method_uses_personalization(method)) report.computation += cfg.K_l;
    return report;
}

} // namespace fgsim
