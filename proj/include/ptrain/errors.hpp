#pragma once

#include <stdexcept>
#include <string>

namespace ptrain {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or parameter shapes do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A caller-supplied argument violates an operation's precondition.
class InputError : public Error {
public:
    using Error::Error;
};

/// A computation produced NaN or Inf.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Two objects that must describe the same thing disagree (trace vs net, image vs label counts).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Malformed bytes in an on-disk format.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Raised by the config parser; the message carries the offending line number when there is one.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// SAM/ASAM direction is undefined because the (scaled) gradient vanishes.
class DegenerateDirectionError : public Error {
public:
    using Error::Error;
};

/// Corruption error is undefined because the baseline never errs.
class DegenerateBaselineError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace ptrain
