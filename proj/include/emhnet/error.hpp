#pragma once

#include <stdexcept>
#include <string>

namespace emhnet {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Value outside the domain of a transform (e.g. log of a non-positive price).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Tensor or parameter dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid argument to a pure function (lag count, index, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Inconsistent configuration: mixed frequencies, empty partitions, bad manifests.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// CSV header or JSON document is missing a required field.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Well-formed file containing invalid values.
class DataError : public Error {
public:
    using Error::Error;
};

/// No usable series survived corpus loading.
class CorpusError : public Error {
public:
    using Error::Error;
};

/// Optimization produced a non-finite loss or gradient.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// A bootstrap replication (or the initial fit) aborted.
class BootstrapError : public Error {
public:
    using Error::Error;
};

/// Invalid synthetic generator specification.
class SpecError : public Error {
public:
    using Error::Error;
};

}  // namespace emhnet
