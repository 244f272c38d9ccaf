#pragma once

#include <stdexcept>
#include <string>

namespace fgsim {

// Bad or inconsistent configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint / population file I/O failure, always carries the path.
class PersistenceError : public std::runtime_error {
public:
    explicit PersistenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss, gradient or parameter during training (CLI exit code 2).
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller violated a documented precondition.
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& msg) : std::invalid_argument(msg) {}
};

// Monte-Carlo estimate with effective sample size too small to trust.
class UnreliableEstimateError : public std::runtime_error {
public:
    explicit UnreliableEstimateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested a model variant the formulas are not defined for.
class NotImplementedError : public std::runtime_error {
public:
    explicit NotImplementedError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace fgsim
