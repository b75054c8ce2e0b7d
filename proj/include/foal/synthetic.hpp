#pragma once

// Deterministic synthetic data: Gaussian class blobs split across backbone
// blocks (feature files + manifest), and raw activation streams for checking
// the recursive solver against the closed form.

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "foal/analytic_classifier.hpp"
#include "foal/stream_types.hpp"

namespace foal {

struct SyntheticSpec {
  std::uint32_t tasks = 5;
  std::uint32_t classes_per_task = 4;
  std::uint32_t samples_per_class = 50;
  std::uint32_t test_samples_per_class = 20;
  std::uint32_t block_count = 4;
  std::uint32_t block_dim = 32;
  std::uint64_t seed = 0;
  double prototype_scale = 2.0;  // expected norm of a block prototype
  double noise = 0.25;           // expected norm of per-block sample noise

  void validate() const;
};

/// Each class gets a code digit per block; only the combination of digits over
/// all blocks identifies the class, so the block average separates classes that
/// any single block confuses. Writes task_<k>_{train,test}.foal and
/// manifest.json into out_dir and returns the manifest.
StreamManifest make_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

struct ActivationStream {
  Eigen::MatrixXd activations;           // V x D, entries in (0, 1)
  std::vector<ClassId> labels;           // V
  std::vector<std::size_t> task_begin;   // m + 1 offsets into the rows
};

/// Sigmoid of standard normals; labels uniform over each task's classes.
/// Row i depends only on (seed, i), never on how the stream is later batched.
ActivationStream make_activation_stream(Eigen::Index dim, std::uint32_t tasks,
                                        std::uint32_t samples_per_task,
                                        std::uint32_t classes_per_task, std::uint64_t seed);

}  // namespace foal
