#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace clothsim {

class ClothError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid grid dimensions, degenerate obstacle geometry, bad parameters.
class ConstructionError : public ClothError {
public:
    using ClothError::ClothError;
};

class ConfigError : public ClothError {
public:
    using ClothError::ClothError;
};

class NumericalDivergenceError : public ClothError {
public:
    explicit NumericalDivergenceError(std::size_t node)
        : ClothError("numerical divergence: non-finite force at node " + std::to_string(node)),
          node_(node) {}
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

class BudgetExceededError : public ClothError {
public:
    BudgetExceededError(std::uint64_t pairs, std::uint64_t cap)
        : ClothError("collision pair budget exceeded: " + std::to_string(pairs) +
                     " triangle pairs per frame, cap is " + std::to_string(cap)),
          pairs_(pairs), cap_(cap) {}
    std::uint64_t pairs() const noexcept { return pairs_; }
    std::uint64_t cap() const noexcept { return cap_; }

private:
    std::uint64_t pairs_;
    std::uint64_t cap_;
};

// A buffer layout does not fit the device's binding ceiling.
class CapacityError : public ClothError {
public:
    CapacityError(const std::string& what, std::uint64_t max_nodes)
        : ClothError(what + " (largest square cloth that fits: " + std::to_string(max_nodes) +
                     " nodes)"),
          max_nodes_(max_nodes) {}
    std::uint64_t max_nodes() const noexcept { return max_nodes_; }

private:
    std::uint64_t max_nodes_;
};

class DeviceLostError : public ClothError {
public:
    using ClothError::ClothError;
};

class AdapterUnavailableError : public ClothError {
public:
    using ClothError::ClothError;
};

class ParseError : public ClothError {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : ClothError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public ClothError {
public:
    using ClothError::ClothError;
};

}  // namespace clothsim
