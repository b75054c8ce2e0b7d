#include "foal/stream_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "foal/errors.hpp"

namespace foal {

namespace {

constexpr std::size_t kEvalChunk = 256;

struct Tally {
  std::uint64_t correct = 0;
  std::uint64_t total = 0;
};

void check_label(ClassId label, const std::unordered_set<ClassId>& allowed, const TaskSpec& task,
                 const std::filesystem::path& file, std::uint64_t sample) {
  if (!allowed.contains(label)) {
    throw ManifestError(ManifestViolation::kLabelOutsideTask,
                        file.string() + " sample " + std::to_string(sample) + " has label " +
                            std::to_string(label) + ", not declared for task " + std::to_string(task.index));
  }
}

Tally tally_file(const AnalyticClassifier& classifier, const EncoderConfig& encoder, const TaskSpec* task,
                 const std::filesystem::path& file) {
  std::unordered_set<ClassId> allowed;
  if (task) allowed.insert(task->classes.begin(), task->classes.end());
  FeatureReader reader(file);
  Tally t;
  std::vector<BlockFeatureSet> chunk;
  std::vector<ClassId> labels;
  const auto flush = [&] {
    if (chunk.empty()) return;
    const auto pred = classifier.predict(encode_batch(chunk, encoder));
    for (std::size_t i = 0; i < labels.size(); ++i) t.correct += pred.labels[i] == labels[i] ? 1 : 0;
    t.total += labels.size();
    chunk.clear();
    labels.clear();
  };
  while (auto s = reader.next()) {
    if (task) check_label(s->label, allowed, *task, file, reader.position() - 1);
    labels.push_back(s->label);
    chunk.push_back(std::move(s->features));
    if (chunk.size() == kEvalChunk) flush();
  }
  flush();
  if (t.total == 0) throw ConfigError(file.string() + ": empty test set");
  return t;
}

double ratio(const Tally& t) { return static_cast<double>(t.correct) / static_cast<double>(t.total); }

}  // namespace

void RunConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    std::ostringstream os;
    os << "gamma must be positive (got " << gamma << ")";
    throw ConfigError(os.str());
  }
  if (projection_dim == 0) throw ConfigError("projection dimension must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
}

EncoderConfig make_encoder(const RunConfig& config, std::uint32_t block_dim) {
  EncoderConfig enc;
  enc.fusion_enabled = config.fusion_enabled;
  enc.smooth_projection_enabled = config.smooth_projection_enabled;
  if (config.smooth_projection_enabled) {
    enc.projection = std::make_shared<const ProjectionSpec>(
        init_projection(config.seed, block_dim, config.projection_dim));
  }
  return enc;
}

double evaluate(const AnalyticClassifier& classifier, const ActivationBatch& features,
                std::span<const ClassId> labels) {
  if (labels.empty()) throw ConfigError("empty test set");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw DimensionError("feature rows and label count differ");
  const auto pred = classifier.predict(features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += pred.labels[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double evaluate_file(const AnalyticClassifier& classifier, const EncoderConfig& encoder,
                     const std::filesystem::path& test_file) {
  return ratio(tally_file(classifier, encoder, nullptr, test_file));
}

ExperimentResult run_experiment(const StreamManifest& manifest, const RunConfig& config,
                                const SampleObserver& observer) {
  config.validate();
  validate_manifest(manifest);

  const EncoderConfig encoder = make_encoder(config, manifest.block_dim);
  const auto m = manifest.tasks.size();
  ExperimentResult res{MetricsReport{}, AccuracyMatrix(m),
                       AnalyticClassifier(encoder.activation_dim(manifest.block_dim), config.gamma)};
  auto& report = res.report;
  auto& classifier = res.classifier;
  report.dataset = manifest.dataset;
  report.config = config;

  using Clock = std::chrono::steady_clock;
  for (const auto& task : manifest.tasks) {
    const std::unordered_set<ClassId> allowed(task.classes.begin(), task.classes.end());
    FeatureReader reader(task.train);
    std::vector<BlockFeatureSet> batch;
    std::vector<ClassId> labels;
    std::vector<std::uint64_t> indices;
    batch.reserve(config.batch_size);
    std::uint32_t batch_no = 0;

    const auto step = [&] {
      if (batch.empty()) return;
      const auto t0 = Clock::now();
      classifier.update(encode_batch(batch, encoder), labels);
      if (config.record_timing)
        report.batch_seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      if (observer) {
        for (const auto idx : indices) observer(task.index, idx);
      }
      ++batch_no;
      if (config.eval_every_batch) {
        Tally pooled;
        for (std::size_t j = 0; j < task.index; ++j) {
          const auto t = tally_file(classifier, encoder, &manifest.tasks[j], manifest.tasks[j].test);
          pooled.correct += t.correct;
          pooled.total += t.total;
        }
        report.batch_trace.push_back({task.index, batch_no, ratio(pooled)});
      }
      batch.clear();
      labels.clear();
      indices.clear();
    };

    while (auto s = reader.next()) {
      const auto idx = reader.position() - 1;
      check_label(s->label, allowed, task, task.train, idx);
      labels.push_back(s->label);
      indices.push_back(idx);
      batch.push_back(std::move(s->features));
      if (batch.size() == config.batch_size) step();
    }
    step();  // partial final batch
    report.samples_per_task.push_back(reader.position());

    for (std::size_t j = 1; j <= task.index; ++j) {
      const auto& tj = manifest.tasks[j - 1];
      res.accuracy.set(task.index, j, ratio(tally_file(classifier, encoder, &tj, tj.test)));
    }
  }

  for (std::size_t i = 1; i <= m; ++i) {
    report.average_accuracy.push_back(average_accuracy(res.accuracy, i));
    report.forgetting.push_back(i >= 2 ? std::optional<double>(forgetting(res.accuracy, i).mean) : std::nullopt);
  }
  report.a_avg = std::accumulate(report.average_accuracy.begin(), report.average_accuracy.end(), 0.0) /
                 static_cast<double>(m);
  report.a_last = report.average_accuracy.back();
  report.f_final = report.forgetting.back();
  report.weight_norms = classifier.weight_column_norms();
  report.weight_norm_cv = coefficient_of_variation(report.weight_norms);
  return res;
}

}  // namespace foal
