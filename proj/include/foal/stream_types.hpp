#pragma once

// Plain data shared by the stream harness and the persistence layer.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "foal/analytic_classifier.hpp"
#include "foal/metrics.hpp"

namespace foal {

struct TaskSpec {
  std::uint32_t index = 0;  // 1-based k
  std::vector<ClassId> classes;
  std::filesystem::path train;
  std::filesystem::path test;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct StreamManifest {
  std::string dataset;
  std::uint32_t block_count = 0;  // n
  std::uint32_t block_dim = 0;    // E
  std::map<std::string, std::string> metadata;
  std::vector<TaskSpec> tasks;

  friend bool operator==(const StreamManifest&, const StreamManifest&) = default;
};

struct RunConfig {
  double gamma = 1.0;
  std::uint32_t projection_dim = 1000;
  std::uint64_t seed = 0;
  std::uint32_t batch_size = 10;
  bool fusion_enabled = true;
  bool smooth_projection_enabled = true;
  /// Evaluate the seen test sets after every batch (diagnostic trace only).
  bool eval_every_batch = false;
  /// Record per-batch wall time. Off by default so reports stay byte-reproducible.
  bool record_timing = false;

  /// Throws ConfigError on non-positive gamma, projection size or batch size.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct BatchEvaluation {
  std::uint32_t task = 0;
  std::uint32_t batch = 0;  // 1-based within the task
  double accuracy = 0.0;    // pooled over test sets 1..task

  friend bool operator==(const BatchEvaluation&, const BatchEvaluation&) = default;
};

struct MetricsReport {
  std::string dataset;
  std::vector<double> average_accuracy;           // A_i, i = 1..m
  double a_avg = 0.0;                             // mean of A_i
  double a_last = 0.0;                            // A_m
  std::vector<std::optional<double>> forgetting;  // F_i, empty for i = 1
  std::optional<double> f_final;                  // F_m, absent when m = 1
  std::vector<ClassNorm> weight_norms;
  double weight_norm_cv = 0.0;
  std::vector<std::uint64_t> samples_per_task;
  std::vector<double> batch_seconds;  // only with RunConfig::record_timing
  std::vector<BatchEvaluation> batch_trace;  // only with RunConfig::eval_every_batch
  RunConfig config;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

}  // namespace foal
