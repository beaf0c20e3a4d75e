/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/core/errors.hpp
 *
 * Copyright 2026 The morphtrack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef MORPHTRACK_CORE_ERRORS_HPP
#define MORPHTRACK_CORE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morphtrack {

/**
 * Coarse error classes. The command-line tool maps these onto its exit codes
 * (config = 1, data = 2, numerical = 3).
 */
enum class ErrorKind { config, data, numerical };

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Invalid or inconsistent configuration values.
class ConfigError : public Error
{
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// File system failures (missing input, unwritable output).
class IoError : public Error
{
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/**
 * Malformed input file. Carries the byte offset at which decoding failed
 * (or the line number for text formats, see `offset_is_line`).
 */
class ParseError : public Error
{
public:
    ParseError(const std::string& what, std::size_t offset, bool offset_is_line = false)
        : Error(ErrorKind::data, what + (offset_is_line ? " (line " : " (byte offset ") +
                                     std::to_string(offset) + ")"),
          offset_(offset)
    {
    }

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// A value violates a documented invariant. `field()` names the offending field.
class ValidationError : public Error
{
public:
    ValidationError(const std::string& field, const std::string& what)
        : Error(ErrorKind::data, field + ": " + what), field_(field)
    {
    }

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Operands whose sizes do not agree.
class DimensionError : public Error
{
public:
    explicit DimensionError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Geometrically degenerate input (collinear points, zero-extent shapes, ...).
class DegenerateError : public Error
{
public:
    explicit DegenerateError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

} /* namespace morphtrack */

#endif /* MORPHTRACK_CORE_ERRORS_HPP */
