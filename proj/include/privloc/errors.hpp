#pragma once

#include <stdexcept>
#include <string>

namespace privloc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    int line;
    int col;
    ParseError(int line_, int col_, const std::string& message)
        : Error("parse error at " + std::to_string(line_) + ":" + std::to_string(col_) + ": " + message),
          line(line_), col(col_) {}
};

struct EmptyInput : Error {
    EmptyInput() : Error("empty input") {}
};

struct PathTooLong : Error {
    explicit PathTooLong(std::size_t n)
        : Error("AST path has " + std::to_string(n) + " non-terminals (max 8)") {}
};

struct FormatError : Error {
    std::size_t line_no;
    FormatError(std::size_t line_no_, const std::string& reason)
        : Error("format error on line " + std::to_string(line_no_) + ": " + reason), line_no(line_no_) {}
};

struct TooFewSamples : Error {
    explicit TooFewSamples(std::size_t n)
        : Error("need at least 10 samples to split, got " + std::to_string(n)) {}
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct NonScalarOutput : Error {
    NonScalarOutput() : Error("gradient check requires a scalar output") {}
};

struct UnknownExperiment : Error {
    explicit UnknownExperiment(const std::string& name) : Error("unknown experiment: " + name) {}
};

struct UnknownMode : Error {
    explicit UnknownMode(const std::string& name) : Error("unknown head mode: " + name) {}
};

struct UnknownFormat : Error {
    explicit UnknownFormat(const std::string& name) : Error("unknown report format: " + name) {}
};

struct EmptySplit : Error {
    explicit EmptySplit(const std::string& which) : Error("empty split: " + which) {}
};

struct NoSourcesFound : Error {
    explicit NoSourcesFound(const std::string& dir) : Error("no .java sources found under " + dir) {}
};

struct IncompleteMatrix : Error {
    IncompleteMatrix() : Error("Fleiss kappa requires a complete rating matrix") {}
};

struct NoVariation : Error {
    NoVariation() : Error("all ratings fall in one category; alpha is undefined (expected disagreement is zero)") {}
};

struct NonBinaryCategories : Error {
    explicit NonBinaryCategories(const std::string& label)
        : Error("agreement cases need binary yes/no ratings, got '" + label + "'") {}
};

struct ModelShapeMismatch : Error {
    using Error::Error;
};

}  // namespace privloc
