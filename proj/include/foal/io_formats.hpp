#pragma once

// Persistence: FOAL feature files, stream manifests, results documents and
// classifier state files. Binary layouts are documented in docs/formats.md.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>

#include "foal/analytic_classifier.hpp"
#include "foal/feature_pipeline.hpp"
#include "foal/metrics.hpp"
#include "foal/stream_types.hpp"

namespace foal {

inline constexpr char kFeatureMagic[4] = {'F', 'O', 'A', 'L'};
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::uint64_t kFeatureHeaderBytes = 32;
inline constexpr const char* kResultsSchema = "foal-results/1";
inline constexpr const char* kManifestSchema = "foal-manifest/1";

struct FeatureHeader {
  std::uint64_t sample_count = 0;
  std::uint32_t block_count = 0;
  std::uint32_t block_dim = 0;
  bool labeled = true;

  std::uint64_t record_bytes() const noexcept {
    return (labeled ? 4u : 0u) + 4ull * block_count * block_dim;
  }
  std::uint64_t file_bytes() const noexcept { return kFeatureHeaderBytes + sample_count * record_bytes(); }

  friend bool operator==(const FeatureHeader&, const FeatureHeader&) = default;
};

struct LabeledSample {
  ClassId label = 0;
  BlockFeatureSet features;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// Sequential writer; the sample count in the header is patched on finish().
class FeatureWriter {
 public:
  FeatureWriter(const std::filesystem::path& path, std::uint32_t block_count, std::uint32_t block_dim,
                bool labeled = true);
  ~FeatureWriter();

  FeatureWriter(const FeatureWriter&) = delete;
  FeatureWriter& operator=(const FeatureWriter&) = delete;

  void write(ClassId label, const BlockFeatureSet& sample);
  /// Flushes and closes. Called by the destructor if omitted (errors swallowed there).
  void finish();

  std::uint64_t written() const noexcept { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  FeatureHeader header_;
  std::uint64_t count_ = 0;
  bool finished_ = false;
};

void write_features(const std::filesystem::path& path, std::span<const LabeledSample> samples,
                    std::uint32_t block_count, std::uint32_t block_dim, bool labeled = true);

/// Streaming reader holding at most one sample in memory. The header and the
/// exact payload length are validated on open; finiteness per sample on read.
class FeatureReader {
 public:
  explicit FeatureReader(const std::filesystem::path& path);

  const FeatureHeader& header() const noexcept { return header_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  /// Index of the next sample to be returned.
  std::uint64_t position() const noexcept { return next_; }

  /// Reads the next sample; std::nullopt at end of file.
  std::optional<LabeledSample> next();

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  FeatureHeader header_;
  std::uint64_t next_ = 0;
  std::vector<char> buffer_;
};

/// Header only; same validation as FeatureReader's constructor.
FeatureHeader read_feature_header(const std::filesystem::path& path);

/// Parses and validates a manifest. Relative file paths resolve against the
/// manifest's directory.
StreamManifest parse_manifest(const std::filesystem::path& path);

/// Validates an in-memory manifest against its invariants and the headers of
/// the referenced files.
void validate_manifest(const StreamManifest& manifest);

/// Writes paths relative to the manifest directory when they are inside it.
void write_manifest(const StreamManifest& manifest, const std::filesystem::path& path);

struct ResultsDocument {
  MetricsReport report;
  AccuracyMatrix accuracy;

  friend bool operator==(const ResultsDocument&, const ResultsDocument&) = default;
};

std::string serialize_results(const ResultsDocument& doc);
ResultsDocument parse_results(const std::string& text);
void write_results(const ResultsDocument& doc, const std::filesystem::path& path);
ResultsDocument read_results(const std::filesystem::path& path);

/// Binary classifier snapshot ("FOST", version 1).
void save_classifier(const AnalyticClassifier& classifier, const std::filesystem::path& path);
AnalyticClassifier load_classifier(const std::filesystem::path& path);

}  // namespace foal
