#pragma once

#include <span>
#include <string>

#include "fgsim/pipeline.hpp"
#include "fgsim/population.hpp"
#include "fgsim/run_config.hpp"

namespace fgsim {

enum class Method { FL, PerFL, GroupFL, GroupPerFL };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

bool method_uses_group_stage(Method m);
bool method_uses_personalization(Method m);

/// Per-client totals. Communication is counted in model-size units (each
/// download and each upload is one unit); computation in local training
/// epochs.
struct CostReport {
    std::uint64_t communication = 0;
    std::uint64_t computation = 0;
};

/// Counts a client's cost under a method from the round logs:
///   communication = 2 per sampled FL round the method includes
///                   + 1 final-model download per FL stage the method runs;
///   computation   = K per global round participated
///                   + K per group round participated (group methods)
///                   + K_l (personalizing methods).
/// Unknown clients are a contract violation.
CostReport cost_accounting(std::span<const RoundLog> logs, Method method,
                           const std::string& client_id, const RunConfig& cfg,
                           const Population& pop);

} // namespace fgsim
