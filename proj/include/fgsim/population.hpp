#pragma once

#include <map>
#include <string>
#include <vector>

#include "fgsim/types.hpp"

namespace fgsim {

/// The client universe. Groups partition the clients; each client appears in
/// exactly one group. Clients are kept sorted by id so every traversal is
/// deterministic regardless of construction order.
struct Population {
    std::vector<ClientRecord> clients;                      // sorted by client_id
    std::map<std::string, std::vector<std::string>> groups; // group_id -> sorted client ids
    int vocab_size = 0;                                     // > 0 for token populations

    /// Builds the group index from client records, sorts everything, and
    /// checks the partition invariants.
    static Population from_clients(std::vector<ClientRecord> clients, int vocab_size = 0);

    const ClientRecord& client(const std::string& client_id) const;
    bool has_client(const std::string& client_id) const;

    /// Throws ContractViolation when ids collide, a group is empty, or a
    /// sampled-eligible client has no training data.
    void validate() const;
};

/// Text format: a header line, then one client per line:
///   client_id <TAB> group_id <TAB> scalar|tokens <TAB> train payload <TAB> eval payload
/// Token payloads are space-separated ids with -1 between sentences; scalar
/// payloads are space-separated decimals at full precision.
void save_population(const Population& pop, const std::string& path);
Population load_population(const std::string& path);

} // namespace fgsim
