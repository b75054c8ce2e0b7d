#pragma once

// Analytic classifier trained by recursive least squares.
//
// State is the ridge solution over every sample seen so far:
//   R = (sum X^T X + gamma I)^-1        (D x D, symmetric positive definite)
//   W = R sum X^T Y                      (D x C, logits = X W)
// Each mini-batch X (S x D) with one-hot targets Y updates
//   R <- R - R X^T (I + X R X^T)^-1 X R
//   W <- W + R X^T (Y - X W)             (using the updated R)
// so that only an S x S system is factorized per batch.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "foal/feature_pipeline.hpp"

namespace foal {

using ClassId = std::uint32_t;

struct ClassNorm {
  ClassId class_id;
  double norm;

  friend bool operator==(const ClassNorm&, const ClassNorm&) = default;
};

struct Prediction {
  std::vector<ClassId> labels;
  Eigen::MatrixXd logits;  // S x C
};

class AnalyticClassifier {
 public:
  /// R = I / gamma, no classes. Throws ConfigError on dim < 1 or gamma <= 0.
  AnalyticClassifier(Eigen::Index dim, double gamma);

  /// Restores a persisted state; validates shapes and class id uniqueness.
  static AnalyticClassifier from_state(double gamma, std::vector<ClassId> class_ids,
                                       Eigen::MatrixXd weights, Eigen::MatrixXd autocorrelation,
                                       std::uint64_t samples_seen);

  /// Appends one zero weight column per id, in the given order.
  void expand_classes(std::span<const ClassId> new_ids);

  /// One recursive step. Unknown labels are added as new classes first, in
  /// order of first appearance within the batch.
  void update(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const ClassId> labels);
  void update(const Eigen::Ref<const RowMatrixF>& x, std::span<const ClassId> labels);

  Prediction predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  Prediction predict(const Eigen::Ref<const RowMatrixF>& x) const;

  /// L2 norm of each weight column, in class order.
  std::vector<ClassNorm> weight_column_norms() const;

  Eigen::Index dim() const noexcept { return r_.rows(); }
  Eigen::Index class_count() const noexcept { return w_.cols(); }
  double gamma() const noexcept { return gamma_; }
  std::uint64_t samples_seen() const noexcept { return samples_seen_; }
  const std::vector<ClassId>& class_ids() const noexcept { return class_ids_; }
  const Eigen::MatrixXd& weights() const noexcept { return w_; }
  const Eigen::MatrixXd& autocorrelation() const noexcept { return r_; }

  /// Column index of a class id, or -1 when unknown.
  Eigen::Index column_of(ClassId id) const noexcept;

  /// Weights with columns reordered by ascending class id.
  Eigen::MatrixXd canonical_weights() const;

 private:
  AnalyticClassifier() = default;

  double gamma_ = 1.0;
  std::vector<ClassId> class_ids_;
  Eigen::MatrixXd w_;
  Eigen::MatrixXd r_;
  std::uint64_t samples_seen_ = 0;
};

/// One-hot rows for labels against a column order. Throws on unknown labels.
Eigen::MatrixXd one_hot(std::span<const ClassId> labels, std::span<const ClassId> class_ids);

/// Direct ridge solution (X^T X + gamma I)^-1 X^T Y via an SPD factorization.
Eigen::MatrixXd closed_form(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const Eigen::Ref<const Eigen::MatrixXd>& y, double gamma);

/// ||a - b||_F / max(||b||_F, tiny).
double relative_frobenius_error(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                const Eigen::Ref<const Eigen::MatrixXd>& b);

/// Population coefficient of variation (stddev / mean); 0 for empty input or zero mean.
double coefficient_of_variation(std::span<const ClassNorm> norms);

}  // namespace foal
