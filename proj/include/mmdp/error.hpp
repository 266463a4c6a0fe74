#pragma once

#include <stdexcept>
#include <string>

namespace mmdp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong shapes, unknown ids, broken invariants.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A linear solve or eigen decomposition could not be trusted.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class NoCutFound : public Error {
public:
    using Error::Error;
};

class NoCorrespondence : public Error {
public:
    using Error::Error;
};

} // namespace mmdp
