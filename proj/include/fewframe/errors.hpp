/*******************************************************************************
* Copyright 2026 The fewframe Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fewframe {

// Shape mismatch between operands.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the admissible domain of an operation.
class ArgumentError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Bad run configuration: unknown key, unparsable value, inconsistent settings.
class ConfigError : public ArgumentError {
  public:
    using ArgumentError::ArgumentError;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// File missing, unreadable, or not writable.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed on-disk data. Carries the byte offset at which parsing failed.
class FormatError : public std::runtime_error {
  public:
    FormatError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

  private:
    std::uint64_t offset_;
};

}  // namespace fewframe
