#pragma once

#include <stdexcept>
#include <string>

namespace evchain {

// One error type for the whole toolchain. The kind tells callers whether
// they are looking at malformed input, a model that does not conform, a
// failed evaluation, or an environment problem; the message carries the
// human-readable detail (position-annotated where the source is text).
enum class ErrorKind {
    Parse,        // unreadable input text (JSON, constraint, template syntax)
    Schema,       // readable but violates a documented file schema
    Conformance,  // instance model breaks a metamodel rule
    UnknownFeature,
    Eval,         // expression evaluation failure (absent value, type clash)
    Io,           // file system
    Backend,      // LLM backend transport / fixture miss
    Contract,     // behavior or stage broke its declared contract
    Config,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    Error(ErrorKind kind, std::string message, int line, int column)
        : std::runtime_error(message + " at " + std::to_string(line) + ":" +
                             std::to_string(column)),
          kind_(kind), line_(line), column_(column) {}

    ErrorKind kind() const noexcept { return kind_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    ErrorKind kind_;
    int line_ = 0;
    int column_ = 0;
};

} // namespace evchain
