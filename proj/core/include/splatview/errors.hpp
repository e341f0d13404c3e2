// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace splatview {

/// Precondition violated by a caller-supplied argument.
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A point that must lie in front of a camera does not.
class BehindCamera : public InvalidInput {
  public:
    using InvalidInput::InvalidInput;
};

/// Malformed or unreadable file. The message names the file and, where known, the byte offset.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class UnsupportedFormat : public ParseError {
  public:
    using ParseError::ParseError;
};

/// Non-finite value reached the optimizer.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace splatview
