#include "foal/feature_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "foal/errors.hpp"
#include "foal/philox.hpp"

namespace foal {

namespace {

constexpr float kSigmoidFloor = std::numeric_limits<float>::min();
constexpr float kSigmoidCeil = 1.0f - 0x1p-24f;

float sigmoid(float z) {
  const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(z)));
  return std::clamp(static_cast<float>(s), kSigmoidFloor, kSigmoidCeil);
}

}  // namespace

BlockFeatureSet::BlockFeatureSet(RowMatrixF blocks) : blocks_(std::move(blocks)) {
  if (blocks_.rows() < 1) throw DimensionError("block feature set needs at least one block");
  if (blocks_.cols() < 1) throw DimensionError("block feature vectors must be non-empty");
  for (Eigen::Index j = 0; j < blocks_.rows(); ++j) {
    if (!blocks_.row(j).allFinite())
      throw NumericalError("block " + std::to_string(j) + " contains a non-finite value");
  }
}

BlockFeatureSet BlockFeatureSet::from_blocks(const std::vector<std::vector<float>>& blocks) {
  if (blocks.empty()) throw DimensionError("block feature set needs at least one block");
  const auto dim = blocks.front().size();
  RowMatrixF m(static_cast<Eigen::Index>(blocks.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (blocks[j].size() != dim) {
      throw DimensionError("block " + std::to_string(j) + " has length " +
                           std::to_string(blocks[j].size()) + ", expected " + std::to_string(dim));
    }
    for (std::size_t e = 0; e < dim; ++e)
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(e)) = blocks[j][e];
  }
  return BlockFeatureSet(std::move(m));
}

ProjectionSpec ProjectionSpec::from_weights(RowMatrixF weights, std::uint64_t seed) {
  if (weights.rows() < 1 || weights.cols() < 1)
    throw ConfigError("projection dimensions must be positive");
  if (!weights.allFinite()) throw NumericalError("projection weights must be finite");
  return ProjectionSpec(seed, std::move(weights));
}

ProjectionSpec init_projection(std::uint64_t seed, Eigen::Index input_dim, Eigen::Index output_dim) {
  if (input_dim < 1 || output_dim < 1)
    throw ConfigError("projection dimensions must be positive (got " + std::to_string(input_dim) +
                      " x " + std::to_string(output_dim) + ")");
  const NormalStream normals(seed);
  RowMatrixF w(input_dim, output_dim);
  const auto total = static_cast<std::uint64_t>(input_dim) * static_cast<std::uint64_t>(output_dim);
  float* data = w.data();  // row-major: flat index r*D + c
  for (std::uint64_t p = 0; 2 * p < total; ++p) {
    const auto z = normals.pair(p);
    data[2 * p] = static_cast<float>(z[0]);
    if (2 * p + 1 < total) data[2 * p + 1] = static_cast<float>(z[1]);
  }
  return ProjectionSpec(seed, std::move(w));
}

void EncoderConfig::validate() const {
  if (smooth_projection_enabled && !projection)
    throw ConfigError("smooth projection enabled but no projection supplied");
}

Eigen::Index EncoderConfig::activation_dim(Eigen::Index block_dim) const {
  validate();
  return smooth_projection_enabled ? projection->output_dim() : block_dim;
}

Eigen::VectorXf fuse_blocks(const BlockFeatureSet& sample, const EncoderConfig& config) {
  const auto& b = sample.blocks();
  if (!config.fusion_enabled) return b.row(b.rows() - 1).transpose();
  Eigen::VectorXf sum = Eigen::VectorXf::Zero(b.cols());
  for (Eigen::Index j = 0; j < b.rows(); ++j) sum += b.row(j).transpose();
  return sum / static_cast<float>(b.rows());
}

Eigen::VectorXf smooth_project(const Eigen::Ref<const Eigen::VectorXf>& fused,
                               const ProjectionSpec* spec, bool enabled) {
  if (!enabled) return fused;
  if (spec == nullptr) throw ConfigError("smooth projection enabled but no projection supplied");
  if (fused.size() != spec->input_dim()) {
    throw DimensionError("fused feature has length " + std::to_string(fused.size()) +
                         ", projection expects " + std::to_string(spec->input_dim()));
  }
  Eigen::VectorXf z = spec->weights().transpose() * fused;
  return z.unaryExpr([](float v) { return sigmoid(v); });
}

ActivationBatch encode_batch(std::span<const BlockFeatureSet> samples, const EncoderConfig& config) {
  if (samples.empty()) throw DimensionError("cannot encode an empty batch");
  config.validate();
  const auto n = samples.front().block_count();
  const auto e = samples.front().block_dim();
  ActivationBatch out(static_cast<Eigen::Index>(samples.size()), config.activation_dim(e));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.block_count() != n || s.block_dim() != e) {
      throw DimensionError("sample " + std::to_string(i) + " has shape " +
                           std::to_string(s.block_count()) + "x" + std::to_string(s.block_dim()) +
                           ", batch shape is " + std::to_string(n) + "x" + std::to_string(e));
    }
    out.row(static_cast<Eigen::Index>(i)) =
        smooth_project(fuse_blocks(s, config), config.projection.get(),
                       config.smooth_projection_enabled)
            .transpose();
  }
  return out;
}

}  // namespace foal
