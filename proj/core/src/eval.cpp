#include "qadaa/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "qadaa/error.hpp"

namespace qadaa::eval {

void ConfusionMatrix::add(std::size_t truth, std::size_t pred) {
  if (truth >= k_ || pred >= k_) data_error("confusion: label out of range");
  ++counts_[truth * k_ + pred];
}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t t = 0;
  for (std::size_t i = 0; i < k_; ++i) t += counts_[i * k_ + i];
  return t;
}

ConfusionMatrix confusion(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                          std::size_t k) {
  if (y_true.size() != y_pred.size()) {
    data_error(fmt::format("confusion: {} true labels but {} predictions", y_true.size(),
                           y_pred.size()));
  }
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < y_true.size(); ++i) cm.add(y_true[i], y_pred[i]);
  return cm;
}

MetricsReport macro_metrics(const ConfusionMatrix& cm) {
  const std::size_t k = cm.classes();
  if (k == 0 || cm.total() == 0) data_error("metrics: empty confusion matrix");
  MetricsReport r;
  bool undefined = false;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0;
    std::size_t actual = 0;
    for (std::size_t o = 0; o < k; ++o) {
      predicted += cm.at(o, c);
      actual += cm.at(c, o);
    }
    const double tp = static_cast<double>(cm.at(c, c));
    ClassMetrics m;
    if (predicted > 0) m.precision = tp / static_cast<double>(predicted); else undefined = true;
    if (actual > 0) m.recall = tp / static_cast<double>(actual); else undefined = true;
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    r.precision += m.precision;
    r.recall += m.recall;
    r.f1 += m.f1;
    r.per_class.push_back(m);
  }
  if (undefined) warn("metrics: some class has no predictions or no instances; its precision or recall is taken as 0");
  const double scale = 100.0 / static_cast<double>(k);
  r.precision *= scale;
  r.recall *= scale;
  r.f1 *= scale;
  r.accuracy = 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
  return r;
}

std::string describe(const GridPoint& p, classical::Family family) {
  if (family == classical::Family::logreg) return fmt::format("C={}", p.c);
  if (p.kernel == classical::KernelKind::linear) return fmt::format("kernel=linear C={}", p.c);
  return fmt::format("kernel=rbf C={} gamma={}", p.c, p.gamma);
}

namespace {
constexpr double kCs[] = {0.1, 1.0, 10.0, 100.0};
constexpr double kGammas[] = {0.001, 0.01, 0.1, 1.0};
}  // namespace

GridSpec default_svm_grid() {
  GridSpec g;
  for (double c : kCs) g.push_back({classical::KernelKind::linear, c, 1.0});
  for (double c : kCs) {
    for (double gamma : kGammas) g.push_back({classical::KernelKind::rbf, c, gamma});
  }
  return g;
}

GridSpec default_logreg_grid() {
  GridSpec g;
  for (double c : kCs) g.push_back({classical::KernelKind::linear, c, 1.0});
  return g;
}

classical::OvrSpec apply_point(classical::Family family, const GridPoint& point,
                               classical::OvrSpec base, std::size_t n_train) {
  if (!(point.c > 0.0)) usage_error("grid point: C must be positive");
  if (family == classical::Family::svm) {
    base.kernel.kind = point.kernel;
    base.kernel.c = point.c;
    base.kernel.gamma = point.gamma;
  } else {
    base.logreg.l2 = 1.0 / (point.c * static_cast<double>(std::max<std::size_t>(1, n_train)));
  }
  return base;
}

GridResult grid_search(classical::Family family, const GridSpec& grid, const Dataset& train,
                       const Dataset& valid, std::size_t n_classes, std::uint64_t seed,
                       const classical::OvrSpec& base, std::size_t threads) {
  if (grid.empty()) usage_error("grid search: empty grid");
  if (valid.x.empty()) data_error("grid search: empty validation set");

  GridResult result;
  result.scores.assign(grid.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        auto spec = apply_point(family, grid[i], base, train.x.size());
        spec.smo.seed = numkit::derive_seed(seed, i);
        spec.logreg.seed = numkit::derive_seed(seed, i);
        const auto model = classical::ovr_train(train.x, train.y, n_classes, family, spec);
        std::size_t hits = 0;
        for (std::size_t r = 0; r < valid.x.size(); ++r) {
          hits += classical::ovr_predict(model, valid.x[r]).label == valid.y[r];
        }
        result.scores[i] = static_cast<double>(hits) / static_cast<double>(valid.x.size());
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  std::size_t n_threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, grid.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (result.scores[i] > result.scores[result.best_index]) result.best_index = i;
  }
  result.best = grid[result.best_index];
  return result;
}

}  // namespace qadaa::eval
