#pragma once

#include <cstdint>
#include <string>

namespace fgsim {

/// Hyper-parameters of the three training stages. JSON config files carry
/// exactly these field names.
struct RunConfig {
    std::uint64_t T = 20;          // global FL rounds
    std::uint64_t T_g = 10;        // group fine-tuning rounds
    std::uint64_t K = 1;           // client epochs per FL round
    std::uint64_t K_l = 5;         // personalization epochs
    std::uint64_t cohort_size = 100;
    double eta_G = 0.001;          // server learning rate, global stage
    double eta_g = 0.001;          // server learning rate, group stage
    double eta_l = 1.0;            // client SGD learning rate
    double eta_il = 0.1;           // personalization learning rate
    std::uint64_t batch_size = 8;
    std::uint64_t seed = 0;

    /// Throws ConfigError when any count or rate is invalid.
    void validate() const;

    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;
};

} // namespace fgsim
