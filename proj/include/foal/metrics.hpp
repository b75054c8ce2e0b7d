#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace foal {

/// Lower-triangular a(i, j): accuracy on the test set of task j after
/// training through task i. Task indices are 1-based, j <= i.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  explicit AccuracyMatrix(std::size_t tasks);

  std::size_t tasks() const noexcept { return tasks_; }

  void set(std::size_t i, std::size_t j, double value);
  double at(std::size_t i, std::size_t j) const;
  bool defined(std::size_t i, std::size_t j) const;
  bool row_populated(std::size_t i) const;

  /// Row i as a vector of length i.
  std::vector<double> row(std::size_t i) const;

  friend bool operator==(const AccuracyMatrix&, const AccuracyMatrix&) = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const;

  std::size_t tasks_ = 0;
  std::vector<std::optional<double>> cells_;
};

/// A_i: mean of a(i, 1..i).
double average_accuracy(const AccuracyMatrix& acc, std::size_t i);

struct Forgetting {
  double mean;                    // F_i
  std::vector<double> per_task;   // f(i, j) for j = 1..i-1
};

/// f(i, j) = max_{l = j..i-1} a(l, j) - a(i, j), unclamped; F_i is their mean.
Forgetting forgetting(const AccuracyMatrix& acc, std::size_t i);

}  // namespace foal
