#pragma once

// Frozen encoder: feature fusion over per-block backbone outputs followed by
// a smooth projection (fixed Gaussian linear map + sigmoid).

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace foal {

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// S x D_eff activations, one row per sample.
using ActivationBatch = RowMatrixF;

/// Per-block feature vectors of one sample: row j holds the output of block j.
class BlockFeatureSet {
 public:
  BlockFeatureSet() = default;

  /// Takes an n x E matrix. Throws on n == 0, E == 0 or non-finite entries.
  explicit BlockFeatureSet(RowMatrixF blocks);

  /// Builds from ragged input; a length mismatch names the offending block.
  static BlockFeatureSet from_blocks(const std::vector<std::vector<float>>& blocks);

  Eigen::Index block_count() const noexcept { return blocks_.rows(); }
  Eigen::Index block_dim() const noexcept { return blocks_.cols(); }
  const RowMatrixF& blocks() const noexcept { return blocks_; }

  friend bool operator==(const BlockFeatureSet& a, const BlockFeatureSet& b) {
    return a.blocks_.rows() == b.blocks_.rows() && a.blocks_.cols() == b.blocks_.cols() &&
           a.blocks_ == b.blocks_;
  }

 private:
  RowMatrixF blocks_;
};

/// Frozen E x D projection weights, fully determined by (seed, E, D).
class ProjectionSpec {
 public:
  std::uint64_t seed() const noexcept { return seed_; }
  Eigen::Index input_dim() const noexcept { return weights_.rows(); }
  Eigen::Index output_dim() const noexcept { return weights_.cols(); }
  const RowMatrixF& weights() const noexcept { return weights_; }

  /// Wraps explicit weights (tests and hand-built encoders). Seed is informational.
  static ProjectionSpec from_weights(RowMatrixF weights, std::uint64_t seed = 0);

 private:
  friend ProjectionSpec init_projection(std::uint64_t, Eigen::Index, Eigen::Index);
  ProjectionSpec(std::uint64_t seed, RowMatrixF weights) : seed_(seed), weights_(std::move(weights)) {}

  std::uint64_t seed_ = 0;
  RowMatrixF weights_;
};

struct EncoderConfig {
  bool fusion_enabled = true;
  bool smooth_projection_enabled = true;
  std::shared_ptr<const ProjectionSpec> projection;

  /// Throws ConfigError when smooth projection is on without a projection.
  void validate() const;
  /// D when smooth projection is enabled, otherwise the block dimension E.
  Eigen::Index activation_dim(Eigen::Index block_dim) const;
};

/// Mean of all blocks when fusion is enabled, otherwise the last block.
Eigen::VectorXf fuse_blocks(const BlockFeatureSet& sample, const EncoderConfig& config);

/// Standard normal E x D matrix from the philox4x32-10/box-muller/v1 stream.
ProjectionSpec init_projection(std::uint64_t seed, Eigen::Index input_dim, Eigen::Index output_dim);

/// sigmoid(fused^T W) when enabled, else a copy of fused. Outputs lie strictly
/// inside (0, 1): values that round to 0 or 1 in float are clamped to the
/// nearest representable interior value.
Eigen::VectorXf smooth_project(const Eigen::Ref<const Eigen::VectorXf>& fused,
                               const ProjectionSpec* spec, bool enabled);

/// Row i is smooth_project(fuse_blocks(samples[i])).
ActivationBatch encode_batch(std::span<const BlockFeatureSet> samples, const EncoderConfig& config);

}  // namespace foal
