#pragma once

// Confusion matrices, macro-averaged metrics and hyperparameter grid search.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qadaa/classical.hpp"

namespace qadaa::eval {

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t k = 0) : k_(k), counts_(k * k, 0) {}

  std::size_t classes() const noexcept { return k_; }
  /// Rows are true classes, columns predictions.
  std::size_t at(std::size_t truth, std::size_t pred) const { return counts_.at(truth * k_ + pred); }
  void add(std::size_t truth, std::size_t pred);
  std::size_t total() const noexcept;
  std::size_t trace() const noexcept;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::size_t> counts_;
};

/// Throws on length mismatch or a label >= k.
ConfusionMatrix confusion(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                          std::size_t k);

struct ClassMetrics {
  double precision = 0.0;  // fractions in [0, 1]
  double recall = 0.0;
  double f1 = 0.0;
};

/// Percentages. Undefined per-class values count as 0.
struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
};

/// Macro averages over all k classes. Warns once per call when some
/// precision or recall is undefined. Throws on an empty matrix.
MetricsReport macro_metrics(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Grid search

struct GridPoint {
  classical::KernelKind kernel = classical::KernelKind::rbf;
  double c = 1.0;
  double gamma = 0.1;  // rbf only
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

std::string describe(const GridPoint& p, classical::Family family);

using GridSpec = std::vector<GridPoint>;

/// Canonical order: linear kernel over C, then rbf over C x gamma, with
/// C in {0.1, 1, 10, 100} and gamma in {0.001, 0.01, 0.1, 1}.
GridSpec default_svm_grid();
/// C in {0.1, 1, 10, 100}; mapped to l2 = 1 / (C * n_train).
GridSpec default_logreg_grid();

/// The one-vs-rest settings a grid point stands for.
classical::OvrSpec apply_point(classical::Family family, const GridPoint& point,
                               classical::OvrSpec base, std::size_t n_train);

struct Dataset {
  classical::Rows x;
  std::vector<std::size_t> y;
};

struct GridResult {
  std::size_t best_index = 0;
  GridPoint best;
  std::vector<double> scores;  // validation accuracy per point, grid order
};

/// Trains one model per point (seed derived from `seed` and the point's
/// index), scores validation accuracy and keeps the maximum, ties to the
/// earliest point. Points run on up to `threads` workers (0 = hardware
/// concurrency); the result does not depend on scheduling.
GridResult grid_search(classical::Family family, const GridSpec& grid, const Dataset& train,
                       const Dataset& valid, std::size_t n_classes, std::uint64_t seed,
                       const classical::OvrSpec& base = {}, std::size_t threads = 0);

}  // namespace qadaa::eval
