#pragma once

#include <stdexcept>
#include <string>

namespace any3d {

// Violated operation precondition or type invariant (CLI exit code 1).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed file payload or header (CLI exit code 2).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem failure: missing, unreadable or unwritable path (CLI exit code 2).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw PreconditionError(what);
}

}  // namespace any3d
