#pragma once

// One-pass online class-incremental protocol: tasks arrive in order, each
// task's training file is streamed once in mini-batches, and every seen test
// set is evaluated after each task.

#include <cstdint>
#include <functional>
#include <span>

#include "foal/analytic_classifier.hpp"
#include "foal/feature_pipeline.hpp"
#include "foal/io_formats.hpp"
#include "foal/metrics.hpp"
#include "foal/stream_types.hpp"

namespace foal {

/// Called once per training sample as it is handed to the classifier.
/// Arguments: task index k (1-based) and the sample's index in its file.
using SampleObserver = std::function<void(std::uint32_t task, std::uint64_t sample)>;

struct ExperimentResult {
  MetricsReport report;
  AccuracyMatrix accuracy;
  AnalyticClassifier classifier;
};

/// Builds the frozen encoder for a manifest/config pair.
EncoderConfig make_encoder(const RunConfig& config, std::uint32_t block_dim);

ExperimentResult run_experiment(const StreamManifest& manifest, const RunConfig& config,
                                const SampleObserver& observer = {});

/// Fraction of rows whose prediction matches the label.
double evaluate(const AnalyticClassifier& classifier, const ActivationBatch& features,
                std::span<const ClassId> labels);

/// Streams a test file through the encoder and classifier.
double evaluate_file(const AnalyticClassifier& classifier, const EncoderConfig& encoder,
                     const std::filesystem::path& test_file);

}  // namespace foal
