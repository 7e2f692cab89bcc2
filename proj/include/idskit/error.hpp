#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace idskit {

// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed text input. Carries a 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// A nominal feature value outside the known encoding table.
class UnknownSymbolError : public Error {
public:
    UnknownSymbolError(const std::string& field, const std::string& symbol)
        : Error("unknown " + field + " symbol: \"" + symbol + "\""), symbol_(symbol) {}

    const std::string& symbol() const { return symbol_; }

private:
    std::string symbol_;
};

// Violated operation precondition (empty input, bad counts, bad hyperparameters).
class ContractError : public Error {
public:
    using Error::Error;
};

// Dimension mismatch between tensors/vectors.
class ShapeError : public ContractError {
public:
    using ContractError::ContractError;
};

// Malformed model document.
class FormatError : public Error {
public:
    using Error::Error;
};

// Filesystem failure.
class IoError : public Error {
public:
    using Error::Error;
};

// Invalid run configuration; maps to CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace idskit
