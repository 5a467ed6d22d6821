#include "qadaa/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qadaa/error.hpp"

namespace qadaa::numkit {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    data_error("matrix storage length does not match shape");
  }
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void gemv_acc(const Matrix& m, std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out[r] += dot(m.row(r), x);
  }
}

void gemv_t_acc(const Matrix& m, std::span<const double> y, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += yr * row[c];
  }
}

void outer_acc(Matrix& m, std::span<const double> y, std::span<const double> x) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += yr * x[c];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::index(std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
  // Box-Muller; u1 is kept away from zero.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Vector softmax(std::span<const double> logits) {
  Vector out(logits.size());
  if (logits.empty()) return out;
  double max_v = -std::numeric_limits<double>::infinity();
  for (double v : logits) {
    if (std::isnan(v)) data_error("softmax: NaN logit");
    max_v = std::max(max_v, v);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_v);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

SigmoidBce sigmoid_bce(double logit, int target) {
  const double p = sigmoid(logit);
  // -[t log p + (1-t) log(1-p)] = softplus(logit) - t * logit
  const double softplus = logit > 0.0 ? logit + std::log1p(std::exp(-logit))
                                       : std::log1p(std::exp(logit));
  const double loss = softplus - static_cast<double>(target) * logit;
  return {p, loss, p - static_cast<double>(target)};
}

}  // namespace qadaa::numkit
