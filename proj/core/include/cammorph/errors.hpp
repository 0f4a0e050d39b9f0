#pragma once

#include <stdexcept>
#include <string>

namespace cammorph {

/// Unreadable/malformed inputs: missing files, bad headers, size mismatches.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Computation failed: divergence, empty sets, invalid geometry.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cammorph
