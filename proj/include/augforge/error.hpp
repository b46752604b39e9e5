// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace augforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (files, labels, arguments).
class InputError : public Error {
public:
    using Error::Error;
};

/// A caller violated an operation's precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Not enough synthetic examples to satisfy an augmentation quota.
class SupplyError : public Error {
public:
    SupplyError(const std::string& cell, std::size_t required, std::size_t available);

    std::size_t required() const { return required_; }
    std::size_t available() const { return available_; }

private:
    std::size_t required_;
    std::size_t available_;
};

/// Manifest validation failure carrying every problem found.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> problems);

    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Wire-protocol violation by an external backend.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

class VersionError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

/// Error message sent back by a backend, passed through verbatim.
class BackendError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

}  // namespace augforge
