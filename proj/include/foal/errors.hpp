#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace foal {

/// Base of every error thrown by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape disagreement between inputs (block lengths, batch widths, label counts).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-facing configuration (gamma <= 0, zero dimensions, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input or a factorization that failed numerically.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary file. Carries the byte offset where decoding failed and,
/// when the failure is inside the payload, the zero-based sample index.
class FormatError : public Error {
 public:
  FormatError(const std::string& path, std::uint64_t offset, std::optional<std::uint64_t> sample,
              const std::string& what)
      : Error(compose(path, offset, sample, what)), path_(path), offset_(offset), sample_(sample) {}

  const std::string& path() const noexcept { return path_; }
  std::uint64_t offset() const noexcept { return offset_; }
  std::optional<std::uint64_t> sample() const noexcept { return sample_; }

 private:
  static std::string compose(const std::string& path, std::uint64_t offset,
                             std::optional<std::uint64_t> sample, const std::string& what) {
    std::string msg = path + ": " + what + " (byte offset " + std::to_string(offset);
    if (sample) msg += ", sample " + std::to_string(*sample);
    return msg + ")";
  }

  std::string path_;
  std::uint64_t offset_;
  std::optional<std::uint64_t> sample_;
};

/// Failure opening, reading or writing a file.
class IoError : public Error {
 public:
  using Error::Error;
};

enum class ManifestViolation {
  kSchema,
  kDisjointClasses,
  kTaskIndices,
  kMissingFile,
  kDimensionMismatch,
  kUnlabeledFile,
  kLabelOutsideTask,
};

const char* to_string(ManifestViolation v) noexcept;

class ManifestError : public Error {
 public:
  ManifestError(ManifestViolation kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ManifestViolation kind() const noexcept { return kind_; }

 private:
  ManifestViolation kind_;
};

}  // namespace foal
