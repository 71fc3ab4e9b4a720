#pragma once

#include <stdexcept>
#include <string>

namespace cpflux {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ingestion errors.
struct EmptyInputError : Error {
    using Error::Error;
};

struct ParseError : Error {
    ParseError(int row, int column, const std::string& what)
        : Error("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
          row(row),
          column(column) {}
    int row;
    int column;
};

struct ColumnNotFoundError : Error {
    using Error::Error;
};

// Analysis preconditions.
struct DegenerateSeriesError : Error {
    using Error::Error;
};

struct InvalidSigmaError : Error {
    using Error::Error;
};

struct IndexOutOfRangeError : Error {
    using Error::Error;
};

struct TooShortError : Error {
    using Error::Error;
};

struct TooLargeError : Error {
    using Error::Error;
};

struct InvalidChangepointsError : Error {
    using Error::Error;
};

struct LengthMismatchError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace cpflux
