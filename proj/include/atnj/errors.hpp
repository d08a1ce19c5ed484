#pragma once

#include <stdexcept>
#include <string>

namespace atnj {

// Base for every error thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

struct NonFinite : Error {
    explicit NonFinite(const std::string& msg) : Error(msg) {}
};

struct InvalidSchedule : Error {
    explicit InvalidSchedule(const std::string& msg) : Error(msg) {}
};

struct InvalidConfig : Error {
    explicit InvalidConfig(const std::string& msg) : Error(msg) {}
};

struct EmptyPrompt : Error {
    explicit EmptyPrompt(const std::string& msg) : Error(msg) {}
};

struct EmptyList : Error {
    explicit EmptyList(const std::string& msg) : Error(msg) {}
};

struct EmptyDataset : Error {
    explicit EmptyDataset(const std::string& msg) : Error(msg) {}
};

struct EmptySweep : Error {
    explicit EmptySweep(const std::string& msg) : Error(msg) {}
};

struct MaskNotReady : Error {
    explicit MaskNotReady(const std::string& msg) : Error(msg) {}
};

struct AlreadyFrozen : Error {
    explicit AlreadyFrozen(const std::string& msg) : Error(msg) {}
};

struct InvalidStep : Error {
    explicit InvalidStep(const std::string& msg) : Error(msg) {}
};

struct TrajectoryMismatch : Error {
    explicit TrajectoryMismatch(const std::string& msg) : Error(msg) {}
};

struct TokenIndexOutOfRange : Error {
    explicit TokenIndexOutOfRange(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed file contents (bad magic, truncation, bad header fields).
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

struct MissingInput : Error {
    explicit MissingInput(const std::string& msg) : Error(msg) {}
};

}  // namespace atnj
