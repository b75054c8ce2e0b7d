#include "foal/analytic_classifier.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_set>

#include "foal/errors.hpp"

namespace foal {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    std::ostringstream os;
    os << "gamma must be positive (got " << gamma << ")";
    throw ConfigError(os.str());
  }
}

// Ratio of extreme pivots of the Cholesky factor, squared: a cheap lower
// bound on the 2-norm condition number.
double pivot_condition(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::VectorXd d = llt.matrixLLT().diagonal().cwiseAbs();
  const double lo = d.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  const double ratio = d.maxCoeff() / lo;
  return ratio * ratio;
}

}  // namespace

AnalyticClassifier::AnalyticClassifier(Eigen::Index dim, double gamma) : gamma_(gamma) {
  if (dim < 1) throw ConfigError("classifier dimension must be positive");
  check_gamma(gamma);
  w_.resize(dim, 0);
  r_ = Eigen::MatrixXd::Identity(dim, dim) / gamma;
}

AnalyticClassifier AnalyticClassifier::from_state(double gamma, std::vector<ClassId> class_ids,
                                                  Eigen::MatrixXd weights,
                                                  Eigen::MatrixXd autocorrelation,
                                                  std::uint64_t samples_seen) {
  check_gamma(gamma);
  if (autocorrelation.rows() < 1 || autocorrelation.rows() != autocorrelation.cols())
    throw DimensionError("autocorrelation matrix must be square and non-empty");
  if (weights.rows() != autocorrelation.rows() ||
      weights.cols() != static_cast<Eigen::Index>(class_ids.size()))
    throw DimensionError("weight matrix shape does not match dimension and class count");
  std::unordered_set<ClassId> seen;
  for (const auto id : class_ids) {
    if (!seen.insert(id).second) throw ConfigError("duplicate class id " + std::to_string(id));
  }
  AnalyticClassifier c;
  c.gamma_ = gamma;
  c.class_ids_ = std::move(class_ids);
  c.w_ = std::move(weights);
  c.r_ = std::move(autocorrelation);
  c.samples_seen_ = samples_seen;
  return c;
}

Eigen::Index AnalyticClassifier::column_of(ClassId id) const noexcept {
  const auto it = std::find(class_ids_.begin(), class_ids_.end(), id);
  return it == class_ids_.end() ? -1 : static_cast<Eigen::Index>(it - class_ids_.begin());
}

void AnalyticClassifier::expand_classes(std::span<const ClassId> new_ids) {
  if (new_ids.empty()) return;
  std::unordered_set<ClassId> known(class_ids_.begin(), class_ids_.end());
  for (const auto id : new_ids) {
    if (!known.insert(id).second) throw ConfigError("class id " + std::to_string(id) + " already present");
  }
  const Eigen::Index old_cols = w_.cols();
  w_.conservativeResize(Eigen::NoChange, old_cols + static_cast<Eigen::Index>(new_ids.size()));
  w_.rightCols(static_cast<Eigen::Index>(new_ids.size())).setZero();
  class_ids_.insert(class_ids_.end(), new_ids.begin(), new_ids.end());
}

void AnalyticClassifier::update(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                std::span<const ClassId> labels) {
  const Eigen::Index s = x.rows();
  if (s == 0) throw DimensionError("empty batch");
  if (static_cast<std::size_t>(s) != labels.size()) {
    throw DimensionError("batch has " + std::to_string(s) + " rows but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (x.cols() != dim()) {
    throw DimensionError("batch width " + std::to_string(x.cols()) + " does not match classifier dimension " +
                         std::to_string(dim()));
  }
  if (!x.allFinite()) throw NumericalError("batch contains non-finite activations");

  std::vector<ClassId> fresh;
  for (const auto id : labels) {
    if (column_of(id) < 0 && std::find(fresh.begin(), fresh.end(), id) == fresh.end())
      fresh.push_back(id);
  }
  expand_classes(fresh);

  // K = X R (S x D); R is symmetric so R X^T = K^T.
  const Eigen::MatrixXd k = x * r_;
  Eigen::MatrixXd gram = k * x.transpose();
  gram.diagonal().array() += 1.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "batch system I + X R X^T is not numerically positive definite (pivot condition estimate "
       << pivot_condition(llt) << ")";
    throw NumericalError(os.str());
  }
  r_.noalias() -= k.transpose() * llt.solve(k);
  r_ = 0.5 * (r_ + r_.transpose()).eval();

  const Eigen::MatrixXd residual = one_hot(labels, class_ids_) - x * w_;
  w_.noalias() += r_ * (x.transpose() * residual);
  samples_seen_ += static_cast<std::uint64_t>(s);
}

void AnalyticClassifier::update(const Eigen::Ref<const RowMatrixF>& x, std::span<const ClassId> labels) {
  update(Eigen::MatrixXd(x.cast<double>()), labels);
}

Prediction AnalyticClassifier::predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (class_count() == 0) throw ConfigError("no classes learned");
  if (x.cols() != dim()) {
    throw DimensionError("batch width " + std::to_string(x.cols()) + " does not match classifier dimension " +
                         std::to_string(dim()));
  }
  Prediction p;
  p.logits = x * w_;
  p.labels.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < p.logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < p.logits.cols(); ++c) {
      if (p.logits(i, c) > p.logits(i, best)) best = c;  // strict: ties keep the lower column
    }
    p.labels.push_back(class_ids_[static_cast<std::size_t>(best)]);
  }
  return p;
}

Prediction AnalyticClassifier::predict(const Eigen::Ref<const RowMatrixF>& x) const {
  return predict(Eigen::MatrixXd(x.cast<double>()));
}

std::vector<ClassNorm> AnalyticClassifier::weight_column_norms() const {
  std::vector<ClassNorm> out;
  out.reserve(class_ids_.size());
  for (Eigen::Index c = 0; c < w_.cols(); ++c)
    out.push_back({class_ids_[static_cast<std::size_t>(c)], w_.col(c).norm()});
  return out;
}

Eigen::MatrixXd AnalyticClassifier::canonical_weights() const {
  std::vector<Eigen::Index> order(class_ids_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return class_ids_[static_cast<std::size_t>(a)] < class_ids_[static_cast<std::size_t>(b)];
  });
  Eigen::MatrixXd out(w_.rows(), w_.cols());
  for (std::size_t i = 0; i < order.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = w_.col(order[i]);
  return out;
}

Eigen::MatrixXd one_hot(std::span<const ClassId> labels, std::span<const ClassId> class_ids) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()),
                                            static_cast<Eigen::Index>(class_ids.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::find(class_ids.begin(), class_ids.end(), labels[i]);
    if (it == class_ids.end()) throw ConfigError("unknown class id " + std::to_string(labels[i]));
    y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(it - class_ids.begin())) = 1.0;
  }
  return y;
}

Eigen::MatrixXd closed_form(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const Eigen::Ref<const Eigen::MatrixXd>& y, double gamma) {
  check_gamma(gamma);
  if (x.rows() != y.rows()) {
    throw DimensionError("activation rows (" + std::to_string(x.rows()) + ") and label rows (" +
                         std::to_string(y.rows()) + ") differ");
  }
  if (x.cols() < 1) throw DimensionError("activation dimension must be positive");
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(x.cols(), x.cols()) * gamma;
  a.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  const Eigen::LLT<Eigen::MatrixXd> llt(a.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success) throw NumericalError("ridge system is not positive definite");
  return llt.solve(x.transpose() * y);
}

double relative_frobenius_error(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                const Eigen::Ref<const Eigen::MatrixXd>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("matrix shapes differ");
  const double denom = std::max(b.norm(), std::numeric_limits<double>::min());
  return (a - b).norm() / denom;
}

double coefficient_of_variation(std::span<const ClassNorm> norms) {
  if (norms.empty()) return 0.0;
  double mean = 0.0;
  for (const auto& n : norms) mean += n.norm;
  mean /= static_cast<double>(norms.size());
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (const auto& n : norms) var += (n.norm - mean) * (n.norm - mean);
  var /= static_cast<double>(norms.size());
  return std::sqrt(var) / mean;
}

}  // namespace foal
