#pragma once

#include <stdexcept>
#include <string>

namespace lcd {

// Exit-code classes used by the CLI: 2 config, 3 data, 4 numerical.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : NumericalError {
    explicit DomainError(const std::string& msg) : NumericalError(msg) {}
};

struct MissingColumn : DataError {
    explicit MissingColumn(const std::string& col)
        : DataError("missing column: " + col), column(col) {}
    std::string column;
};

struct MalformedRow : DataError {
    MalformedRow(const std::string& msg, std::size_t row)
        : DataError("row " + std::to_string(row) + ": " + msg), row_index(row) {}
    std::size_t row_index;
};

struct InconsistentFrames : DataError {
    explicit InconsistentFrames(const std::string& msg) : DataError(msg) {}
};

struct EmptyRecording : DataError {
    explicit EmptyRecording(const std::string& msg) : DataError(msg) {}
};

struct EmptySelection : DataError {
    explicit EmptySelection(const std::string& msg) : DataError(msg) {}
};

struct SchemaMismatch : DataError {
    explicit SchemaMismatch(const std::string& msg) : DataError(msg) {}
};

struct IoError : DataError {
    explicit IoError(const std::string& msg) : DataError(msg) {}
};

struct NoLaneBoundaries : DataError {
    explicit NoLaneBoundaries(const std::string& msg) : DataError(msg) {}
};

struct DegenerateSample : NumericalError {
    explicit DegenerateSample(const std::string& msg) : NumericalError(msg) {}
};

struct NonIdentifiable : NumericalError {
    explicit NonIdentifiable(const std::string& msg) : NumericalError(msg) {}
};

struct CollinearCovariates : NumericalError {
    explicit CollinearCovariates(const std::string& msg) : NumericalError(msg) {}
};

struct UnknownCovariate : DataError {
    explicit UnknownCovariate(const std::string& msg) : DataError(msg) {}
};

}  // namespace lcd
