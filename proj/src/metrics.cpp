#include "foal/metrics.hpp"

#include <algorithm>
#include <string>

#include "foal/errors.hpp"

namespace foal {

AccuracyMatrix::AccuracyMatrix(std::size_t tasks) : tasks_(tasks), cells_(tasks * (tasks + 1) / 2) {}

std::size_t AccuracyMatrix::index(std::size_t i, std::size_t j) const {
  if (i < 1 || i > tasks_ || j < 1 || j > i) {
    throw DimensionError("accuracy cell (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") outside the lower triangle of a " + std::to_string(tasks_) + "-task matrix");
  }
  return (i - 1) * i / 2 + (j - 1);
}

void AccuracyMatrix::set(std::size_t i, std::size_t j, double value) {
  if (!(value >= 0.0 && value <= 1.0))
    throw ConfigError("accuracy " + std::to_string(value) + " outside [0, 1]");
  cells_[index(i, j)] = value;
}

double AccuracyMatrix::at(std::size_t i, std::size_t j) const {
  const auto& c = cells_[index(i, j)];
  if (!c) throw ConfigError("accuracy cell (" + std::to_string(i) + ", " + std::to_string(j) + ") not populated");
  return *c;
}

bool AccuracyMatrix::defined(std::size_t i, std::size_t j) const {
  return i >= 1 && i <= tasks_ && j >= 1 && j <= i && cells_[index(i, j)].has_value();
}

bool AccuracyMatrix::row_populated(std::size_t i) const {
  if (i < 1 || i > tasks_) return false;
  for (std::size_t j = 1; j <= i; ++j) {
    if (!cells_[index(i, j)]) return false;
  }
  return true;
}

std::vector<double> AccuracyMatrix::row(std::size_t i) const {
  std::vector<double> out;
  out.reserve(i);
  for (std::size_t j = 1; j <= i; ++j) out.push_back(at(i, j));
  return out;
}

double average_accuracy(const AccuracyMatrix& acc, std::size_t i) {
  if (!acc.row_populated(i)) throw ConfigError("accuracy row " + std::to_string(i) + " is not populated");
  double sum = 0.0;
  for (std::size_t j = 1; j <= i; ++j) sum += acc.at(i, j);
  return sum / static_cast<double>(i);
}

Forgetting forgetting(const AccuracyMatrix& acc, std::size_t i) {
  if (i < 2) throw ConfigError("forgetting is defined from task 2 onward (got " + std::to_string(i) + ")");
  for (std::size_t l = 1; l <= i; ++l) {
    if (!acc.row_populated(l)) throw ConfigError("accuracy row " + std::to_string(l) + " is not populated");
  }
  Forgetting f{0.0, {}};
  f.per_task.reserve(i - 1);
  for (std::size_t j = 1; j < i; ++j) {
    double best = acc.at(j, j);
    for (std::size_t l = j + 1; l < i; ++l) best = std::max(best, acc.at(l, j));
    f.per_task.push_back(best - acc.at(i, j));
  }
  double sum = 0.0;
  for (const double v : f.per_task) sum += v;
  f.mean = sum / static_cast<double>(i - 1);
  return f;
}

}  // namespace foal
