#pragma once

#include <stdexcept>
#include <string>

namespace rauzy {

// Exit-code conventions shared with the CLI: 2 = configuration error,
// 3 = numerical degeneracy (ties, precision or budget exhaustion),
// 4 = insufficient data for a statistical estimate.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual int exit_code() const noexcept { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class DegeneracyError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

// Degenerate tie in Rauzy induction; carries the step index at which the
// saddle connection was hit.
class TieError : public DegeneracyError {
public:
    TieError(const std::string& what, std::size_t step)
        : DegeneracyError(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

} // namespace rauzy
