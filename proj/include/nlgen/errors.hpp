#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlgen {

/// Malformed dialogue-act string; carries the byte offset of the offending
/// character so callers can point at it.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t position)
        : std::runtime_error(message + " (at position " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Bad input data: corpus/vocabulary mismatches, unreadable files,
/// inconsistent model bundles.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A delexicalised token whose slot has no value in the dialogue act, so the
/// utterance cannot be rendered.
class DanglingSlotError : public DataError {
public:
    DanglingSlotError(const std::string& message, int count)
        : DataError(message), count_(count) {}

    int count() const noexcept { return count_; }

private:
    int count_;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nlgen
