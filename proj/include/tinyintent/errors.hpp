#pragma once

#include <stdexcept>
#include <string>

namespace tinyintent {

// Base for everything this library throws. exit_code() is what the CLI
// returns when the error escapes: 2 for usage/data problems, 1 for
// runtime failures.
class Error : public std::runtime_error {
public:
    Error(std::string msg, int exit_code) : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

// Buffer/dimension mismatch inside a kernel or layer.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg, 1) {}
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg, 1) {}
};

// Index out of range (labels, vocab ids).
struct IndexError : Error {
    explicit IndexError(const std::string& msg) : Error(msg, 1) {}
};

// API misuse, e.g. adam_step before the step counter was advanced.
struct ProtocolError : Error {
    explicit ProtocolError(const std::string& msg) : Error(msg, 1) {}
};

// Bad user-supplied input (empty utterance, malformed flag value).
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(msg, 2) {}
};

// Dataset-level problems: empty split, line-count mismatch, missing rows.
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg, 2) {}
};

// Filesystem-level problems: missing file, unreadable path.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg, 2) {}
};

// Structurally bad text input (embedding file with wrong arity, etc.).
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg, 2) {}
};

// Model file problems, each distinct so callers can tell them apart.
struct ModelFileError : Error {
    ModelFileError(const std::string& msg, int code = 2) : Error(msg, code) {}
};
struct BadMagicError : ModelFileError {
    explicit BadMagicError(const std::string& msg) : ModelFileError(msg) {}
};
struct BadVersionError : ModelFileError {
    explicit BadVersionError(const std::string& msg) : ModelFileError(msg) {}
};
struct ChecksumError : ModelFileError {
    explicit ChecksumError(const std::string& msg) : ModelFileError(msg) {}
};
struct TruncatedError : ModelFileError {
    explicit TruncatedError(const std::string& msg) : ModelFileError(msg) {}
};

// Loaded model whose pieces do not fit together.
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg, 2) {}
};

// Loss went non-finite mid-run.
struct TrainingDivergedError : Error {
    explicit TrainingDivergedError(const std::string& msg) : Error(msg, 1) {}
};

// Benchmark harness failure (clock misbehaving).
struct BenchError : Error {
    explicit BenchError(const std::string& msg) : Error(msg, 1) {}
};

}  // namespace tinyintent
