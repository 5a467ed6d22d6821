#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "qadaa/classical.hpp"
#include "qadaa/error.hpp"

namespace qadaa::classical {

namespace {

std::size_t check_rows(const Rows& x, std::span<const std::size_t> y, std::size_t n_classes) {
  if (x.empty()) data_error("logistic regression: empty training set");
  if (x.size() != y.size()) data_error("logistic regression: row and label counts differ");
  const std::size_t dim = x.front().size();
  for (const auto& row : x) {
    if (row.size() != dim) data_error("logistic regression: rows have different dimensions");
  }
  for (auto label : y) {
    if (label >= n_classes) data_error("logistic regression: label out of range");
  }
  return dim;
}

}  // namespace

LogRegModel zero_logreg(std::size_t classes, std::size_t dim, double l2) {
  return LogRegModel{Matrix(classes, dim), Matrix(classes, 1), l2};
}

Vector logreg_scores(const LogRegModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) data_error("logistic regression: feature dimension mismatch");
  Vector scores(model.bias.values().begin(), model.bias.values().end());
  numkit::gemv_acc(model.weights, x, scores);
  return scores;
}

Vector logreg_predict_proba(const LogRegModel& model, std::span<const double> x) {
  return numkit::softmax(logreg_scores(model, x));
}

LogRegGradient logreg_loss_and_grad(const LogRegModel& model, const Rows& x,
                                    std::span<const std::size_t> y,
                                    std::span<const std::size_t> rows) {
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(x.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  LogRegGradient g{0.0, Matrix(model.classes(), model.dim()), Matrix(model.classes(), 1)};
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    Vector p = logreg_predict_proba(model, x[r]);
    g.loss -= std::log(std::max(p[y[r]], 1e-300)) * inv_n;
    p[y[r]] -= 1.0;
    for (double& v : p) v *= inv_n;
    numkit::outer_acc(g.weights, p, x[r]);
    for (std::size_t k = 0; k < p.size(); ++k) g.bias(k, 0) += p[k];
  }
  if (model.l2 > 0.0) {
    g.loss += 0.5 * model.l2 * numkit::squared_norm(model.weights.values());
    auto gw = g.weights.values();
    auto w = model.weights.values();
    for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += model.l2 * w[i];
  }
  return g;
}

LogRegModel train_logreg(const Rows& x, std::span<const std::size_t> y, std::size_t n_classes,
                         const LogRegConfig& config) {
  if (n_classes < 2) data_error("logistic regression: need at least two classes");
  const std::size_t dim = check_rows(x, y, n_classes);
  if (std::set<std::size_t>(y.begin(), y.end()).size() < 2) {
    data_error("logistic regression: training labels contain a single class");
  }
  if (config.batch_size < 1) usage_error("logistic regression: batch size must be positive");

  LogRegModel model = zero_logreg(n_classes, dim, config.l2);
  numkit::Rng rng(config.seed);
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      const LogRegGradient g = logreg_loss_and_grad(model, x, y, batch);
      auto w = model.weights.values();
      auto gw = g.weights.values();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.lr * gw[i];
      auto b = model.bias.values();
      auto gb = g.bias.values();
      for (std::size_t i = 0; i < b.size(); ++i) b[i] -= config.lr * gb[i];
    }
  }
  return model;
}

}  // namespace qadaa::classical
