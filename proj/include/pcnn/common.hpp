/*
 * Copyright 2026 The PCNN Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pcnn {

/// Coarse error classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind { kConfig, kData, kRuntime };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};
/// A required capability (e.g. a transformer encoder delegate) is not available.
struct CapabilityError : Error {
  explicit CapabilityError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};
/// A record violates the file schema. `line()` is 1-based, 0 when unknown.
struct SchemaError : DataError {
  SchemaError(std::size_t line, const std::string& what)
      : DataError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};
struct EmptyInputError : DataError {
  using DataError::DataError;
};
struct InfeasibleSampleError : DataError {
  using DataError::DataError;
};
struct SingleClassError : DataError {
  using DataError::DataError;
};
struct CorruptCheckpointError : DataError {
  using DataError::DataError;
};
struct UnsupportedVersionError : DataError {
  using DataError::DataError;
};

struct RuntimeFailure : Error {
  explicit RuntimeFailure(const std::string& what) : Error(ErrorKind::kRuntime, what) {}
};
struct DimensionError : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};
struct NonFiniteError : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};

/// 64-bit FNV-1a. Used wherever a hash must be stable across platforms.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Per-stage seed: mix64(master ^ fnv1a64(stage)). Distinct stage names give
/// independent streams from one master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) noexcept {
  return mix64(master ^ fnv1a64(stage));
}

/// Mutable view of one parameter tensor (column-major, Eigen layout).
struct ParamRef {
  std::string name;
  std::span<double> values;
  std::ptrdiff_t rows = 0;
  std::ptrdiff_t cols = 0;
};

using ParamList = std::vector<ParamRef>;

}  // namespace pcnn
