#include "foal/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "foal/analytic_classifier.hpp"
#include "foal/errors.hpp"
#include "foal/io_formats.hpp"
#include "foal/philox.hpp"
#include "foal/stream_harness.hpp"
#include "foal/synthetic.hpp"

namespace foal::cli {

namespace {

constexpr double kVerifyTolerance = 1e-8;
constexpr double kBenchMaxRatio = 2.0;

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// FNV-1a over canonical weights printed at 6 significant digits, so that
/// partitions agreeing to ~1e-12 produce the same digest.
std::string weight_digest(const Eigen::MatrixXd& w) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[32];
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const int len = std::snprintf(buf, sizeof(buf), "%.5e;", w.data()[i] == 0.0 ? 0.0 : w.data()[i]);
    for (int k = 0; k < len; ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ull;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

struct RunFlags {
  std::string manifest;
  std::string output;
  std::string save_state;
  RunConfig config;
  bool no_fusion = false;
  bool no_smooth_projection = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--gamma", f.config.gamma, "ridge regularization term")->capture_default_str();
  cmd->add_option("--proj-dim", f.config.projection_dim, "smooth projection size D")->capture_default_str();
  cmd->add_option("--seed", f.config.seed, "projection seed")->capture_default_str();
  cmd->add_option("--batch-size", f.config.batch_size, "mini-batch size S")->capture_default_str();
  cmd->add_flag("--no-fusion", f.no_fusion, "use the last block only");
  cmd->add_flag("--no-smooth-projection", f.no_smooth_projection, "bypass projection and sigmoid");
  cmd->add_flag("--eval-every-batch", f.config.eval_every_batch, "record a per-batch accuracy trace");
  cmd->add_flag("--timing", f.config.record_timing, "record per-batch update latency");
}

RunConfig resolve(const RunFlags& f) {
  RunConfig c = f.config;
  c.fusion_enabled = !f.no_fusion;
  c.smooth_projection_enabled = !f.no_smooth_projection;
  c.validate();
  return c;
}

int cmd_run(const RunFlags& f, std::ostream& out) {
  const RunConfig config = resolve(f);
  const StreamManifest manifest = parse_manifest(f.manifest);
  const auto result = run_experiment(manifest, config);
  const ResultsDocument doc{result.report, result.accuracy};
  write_results(doc, f.output);
  if (!f.save_state.empty()) save_classifier(result.classifier, f.save_state);
  out << "A_avg: " << fmt17(doc.report.a_avg) << '\n';
  out << "A_last: " << fmt17(doc.report.a_last) << '\n';
  out << "F_final: " << (doc.report.f_final ? fmt17(*doc.report.f_final) : std::string("n/a")) << '\n';
  return kSuccess;
}

struct VerifyFlags {
  std::uint32_t dim = 64;
  std::uint32_t tasks = 5;
  std::uint32_t batches = 10;
  std::uint32_t batch_size = 8;
  std::uint32_t classes_per_task = 4;
  std::uint64_t seed = 0;
  double gamma = 1.0;
};

int cmd_verify(const VerifyFlags& f, std::ostream& out, std::ostream& err) {
  if (f.dim == 0 || f.tasks == 0 || f.batches == 0 || f.batch_size == 0 || f.classes_per_task == 0)
    throw ConfigError("verify sizes must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const auto stream = make_activation_stream(f.dim, f.tasks, f.batches * f.batch_size, f.classes_per_task, f.seed);
  AnalyticClassifier classifier(f.dim, f.gamma);
  const auto total = stream.activations.rows();
  for (Eigen::Index begin = 0; begin < total; begin += f.batch_size) {
    const Eigen::Index rows = std::min<Eigen::Index>(f.batch_size, total - begin);
    classifier.update(stream.activations.middleRows(begin, rows),
                      std::span(stream.labels).subspan(static_cast<std::size_t>(begin), static_cast<std::size_t>(rows)));
  }
  const Eigen::MatrixXd y = one_hot(stream.labels, classifier.class_ids());
  const Eigen::MatrixXd oracle = closed_form(stream.activations, y, f.gamma);
  const double error = relative_frobenius_error(classifier.weights(), oracle);

  Eigen::MatrixXd gram = stream.activations.transpose() * stream.activations;
  gram.diagonal().array() += f.gamma;
  const double r_dev = (classifier.autocorrelation() * gram - Eigen::MatrixXd::Identity(f.dim, f.dim)).cwiseAbs().maxCoeff();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  out << "samples: " << total << '\n';
  out << "classes: " << classifier.class_count() << '\n';
  out << "relative_frobenius_error: " << fmt17(error) << '\n';
  out << "r_consistency_max_abs: " << fmt17(r_dev) << '\n';
  out << "w_digest: " << weight_digest(classifier.canonical_weights()) << '\n';
  out << "seconds: " << seconds << '\n';
  if (!(error <= kVerifyTolerance)) {
    err << "verify failed: relative Frobenius error " << fmt17(error) << " exceeds " << kVerifyTolerance << '\n';
    return kToleranceFailure;
  }
  out << "verify: PASS\n";
  return kSuccess;
}

struct BenchFlags {
  std::uint32_t dim = 1000;
  std::uint32_t batch_size = 10;
  std::uint32_t updates = 1000;
  std::uint32_t classes = 10;
  std::uint64_t seed = 0;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_bench(const BenchFlags& f, std::ostream& out, std::ostream& err) {
  if (f.dim == 0 || f.batch_size == 0 || f.updates == 0 || f.classes == 0)
    throw ConfigError("bench sizes must be positive");
  AnalyticClassifier classifier(f.dim, 1.0);
  const NormalStream rng(f.seed);
  Eigen::MatrixXd x(f.batch_size, f.dim);
  std::vector<ClassId> labels(f.batch_size);
  std::vector<double> ms;
  ms.reserve(f.updates);
  std::uint64_t counter = 0;
  for (std::uint32_t u = 0; u < f.updates; ++u) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 1.0 / (1.0 + std::exp(-rng.at(counter++)));
    for (std::uint32_t i = 0; i < f.batch_size; ++i) labels[i] = (u * f.batch_size + i) % f.classes;
    const auto t0 = std::chrono::steady_clock::now();
    classifier.update(x, labels);
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  const std::size_t decile = std::max<std::size_t>(1, ms.size() / 10);
  const double first = median({ms.begin(), ms.begin() + static_cast<std::ptrdiff_t>(decile)});
  const double last = median({ms.end() - static_cast<std::ptrdiff_t>(decile), ms.end()});
  const double ratio = first > 0.0 ? last / first : 1.0;
  out << "dim: " << f.dim << "\nbatch_size: " << f.batch_size << "\nupdates: " << f.updates << '\n';
  out << "first_decile_median_ms: " << first << '\n';
  out << "last_decile_median_ms: " << last << '\n';
  out << "ratio: " << ratio << '\n';
  if (ratio > kBenchMaxRatio) {
    err << "bench failed: last-decile median is " << ratio << "x the first-decile median\n";
    return kToleranceFailure;
  }
  out << "bench: PASS\n";
  return kSuccess;
}

int cmd_norms(const std::string& state, const RunFlags& f, std::ostream& out) {
  std::optional<AnalyticClassifier> classifier;
  if (!state.empty()) {
    classifier = load_classifier(state);
  } else {
    if (f.manifest.empty()) throw ConfigError("norms needs --state or --manifest");
    classifier = run_experiment(parse_manifest(f.manifest), resolve(f)).classifier;
  }
  if (classifier->class_count() == 0 || classifier->samples_seen() == 0)
    throw ConfigError("classifier is untrained");
  auto norms = classifier->weight_column_norms();
  std::ranges::sort(norms, {}, &ClassNorm::class_id);
  out << "class_id,l2_norm\n";
  for (const auto& n : norms) out << n.class_id << ',' << fmt17(n.norm) << '\n';
  out << "coefficient_of_variation," << fmt17(coefficient_of_variation(norms)) << '\n';
  return kSuccess;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Forward-only online analytic learning engine", "foal"};
  app.require_subcommand(1);

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "train on a manifest stream and write a results document");
  run_cmd->add_option("--manifest", run.manifest, "stream manifest (JSON)")->required();
  run_cmd->add_option("--output", run.output, "results document path")->required();
  run_cmd->add_option("--save-state", run.save_state, "also write the trained classifier state");
  add_run_flags(run_cmd, run);

  VerifyFlags verify;
  auto* verify_cmd = app.add_subcommand("verify", "check recursive updates against the closed-form solution");
  verify_cmd->add_option("--dim", verify.dim)->capture_default_str();
  verify_cmd->add_option("--tasks", verify.tasks)->capture_default_str();
  verify_cmd->add_option("--batches", verify.batches, "batches per task")->capture_default_str();
  verify_cmd->add_option("--batch-size", verify.batch_size)->capture_default_str();
  verify_cmd->add_option("--classes-per-task", verify.classes_per_task)->capture_default_str();
  verify_cmd->add_option("--seed", verify.seed)->capture_default_str();
  verify_cmd->add_option("--gamma", verify.gamma)->capture_default_str();

  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "time repeated updates and check constant per-batch cost");
  bench_cmd->add_option("--dim", bench.dim)->capture_default_str();
  bench_cmd->add_option("--batch-size", bench.batch_size)->capture_default_str();
  bench_cmd->add_option("--updates", bench.updates)->capture_default_str();
  bench_cmd->add_option("--classes", bench.classes)->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();

  std::string state_path;
  RunFlags norms;
  auto* norms_cmd = app.add_subcommand("norms", "print per-class weight column norms");
  auto* state_opt = norms_cmd->add_option("--state", state_path, "classifier state file");
  auto* manifest_opt = norms_cmd->add_option("--manifest", norms.manifest, "train from a manifest first");
  state_opt->excludes(manifest_opt);
  add_run_flags(norms_cmd, norms);

  SyntheticSpec synth;
  std::string out_dir;
  auto* synth_cmd = app.add_subcommand("make-synthetic", "write a separable synthetic stream");
  synth_cmd->add_option("--tasks", synth.tasks)->capture_default_str();
  synth_cmd->add_option("--classes-per-task", synth.classes_per_task)->capture_default_str();
  synth_cmd->add_option("--samples-per-class", synth.samples_per_class)->capture_default_str();
  synth_cmd->add_option("--test-samples-per-class", synth.test_samples_per_class)->capture_default_str();
  synth_cmd->add_option("--block-count", synth.block_count)->capture_default_str();
  synth_cmd->add_option("--block-dim", synth.block_dim)->capture_default_str();
  synth_cmd->add_option("--prototype-scale", synth.prototype_scale)->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--out-dir", out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }

  try {
    if (*run_cmd) return cmd_run(run, out);
    if (*verify_cmd) return cmd_verify(verify, out, err);
    if (*bench_cmd) return cmd_bench(bench, out, err);
    if (*norms_cmd) return cmd_norms(state_path, norms, out);
    if (*synth_cmd) {
      const auto m = make_synthetic(synth, out_dir);
      out << "wrote " << m.tasks.size() << " tasks to " << out_dir << '\n';
      return kSuccess;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }
  return kValidationError;
}

}  // namespace foal::cli
