#pragma once

#include <stdexcept>
#include <string>

namespace slowpolar {

// Caller-supplied value outside the documented domain (bad parameters,
// malformed input, out-of-range indices).
class domain_error : public std::invalid_argument {
public:
    explicit domain_error(const std::string& what) : std::invalid_argument(what) {}
};

// Violation of an operation-ordering or internal-state contract. Reaching
// one of these means a bug in the calling code, not bad user input.
class contract_error : public std::logic_error {
public:
    explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

// Work refused because it would exceed a configured budget.
class resource_error : public std::runtime_error {
public:
    explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace slowpolar
