#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nldiff {

// Bad user-supplied parameters (grid shape, kernel radius, config values).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
    ConfigError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    // 0 when the error is not tied to a config file line.
    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

// Input data violating a structural requirement, e.g. an uneven kernel table.
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& what, std::vector<std::string> offending = {})
        : std::runtime_error(what), offending_(std::move(offending)) {}

    const std::vector<std::string>& offending() const { return offending_; }

private:
    std::vector<std::string> offending_;
};

// Caller passed objects that do not belong together (field on another grid).
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// A solve was started on data that fails the structural assumptions and the
// caller did not acknowledge it, or a study whose hypotheses are not met.
class RefusalError : public std::runtime_error {
public:
    explicit RefusalError(const std::string& what) : std::runtime_error(what) {}
};

class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nldiff
