#pragma once

#include <stdexcept>
#include <string>

namespace ssctm {

struct ValidationError : std::runtime_error {
    std::string field;
    ValidationError(std::string field_, const std::string& reason)
        : std::runtime_error(field_ + ": " + reason), field(std::move(field_)) {}
};

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

// Balance system of the mode chain is rank-deficient beyond the expected
// one-dimensional kernel.
struct SingularChain : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The piecewise-linear equation defining a queue-present density lower bound
// has no root in [0, n_jam]; the policy/config pairing is infeasible.
struct NoRoot : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inner maximization exceeds the exact-solver limit and no fallback
// tolerance was configured.
struct Unsupported : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exact design path rejected for this problem size.
struct TooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SubproblemInfeasible : std::runtime_error {
    int ramp;
    SubproblemInfeasible(int ramp_, const std::string& what)
        : std::runtime_error(what), ramp(ramp_) {}
};

}  // namespace ssctm
