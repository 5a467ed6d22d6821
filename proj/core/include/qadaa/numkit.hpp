#pragma once

// Small deterministic numeric kernel shared by the classical and neural
// learners: dense row-major matrices, a cross-platform seeded RNG and the
// activation/loss primitives.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace qadaa::numkit {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  void fill(double v);
  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// out += M * x
void gemv_acc(const Matrix& m, std::span<const double> x, std::span<double> out);
/// out += M^T * y
void gemv_t_acc(const Matrix& m, std::span<const double> y, std::span<double> out);
/// M += y * x^T
void outer_acc(Matrix& m, std::span<const double> y, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

/// Seeded generator with a fixed algorithm (mt19937_64, whose output
/// sequence is pinned by the C++ standard) and hand-written distributions,
/// so draws are identical on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform in [0, n), unbiased.
  std::size_t index(std::size_t n);
  double normal();

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Mixes a base seed with a stream id (splitmix64 finalizer) to give
/// independent per-task seeds: grid points, OvR sub-problems, epochs.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// Max-subtracted softmax. Throws on NaN input.
Vector softmax(std::span<const double> logits);

struct SigmoidBce {
  double probability;
  double loss;
  double grad;  // d loss / d logit
};

double sigmoid(double x) noexcept;
SigmoidBce sigmoid_bce(double logit, int target);

}  // namespace qadaa::numkit
