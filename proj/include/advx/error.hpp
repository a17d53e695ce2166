#pragma once

#include <stdexcept>
#include <string>

namespace advx {

// Precondition or configuration violations (shape mismatch, bad label, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or truncated input files.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Artifacts produced under different model suites or configs were mixed.
class FingerprintMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientPool : public std::runtime_error {
public:
    InsufficientPool(std::size_t pool, std::size_t requested)
        : std::runtime_error("evaluation pool has " + std::to_string(pool) +
                             " correctly classified examples, " + std::to_string(requested) +
                             " requested"),
          pool_size(pool) {}

    std::size_t pool_size;
};

}  // namespace advx
