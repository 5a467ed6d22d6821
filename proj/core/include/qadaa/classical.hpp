#pragma once

// Classical learners over dense feature rows: multinomial logistic
// regression (cross-entropy, mini-batch gradient descent) and a kernel SVM
// trained by SMO, lifted to multiclass by one-vs-rest.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qadaa/numkit.hpp"

namespace qadaa::classical {

using numkit::Matrix;
using numkit::Vector;
using Rows = std::vector<Vector>;

// ---------------------------------------------------------------------------
// Logistic regression

struct LogRegConfig {
  double lr = 0.1;
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  double l2 = 1e-4;
  std::uint64_t seed = 42;
};

struct LogRegModel {
  Matrix weights;  // K x D
  Matrix bias;     // K x 1
  double l2 = 0.0;

  std::size_t classes() const noexcept { return weights.rows(); }
  std::size_t dim() const noexcept { return weights.cols(); }
  friend bool operator==(const LogRegModel&, const LogRegModel&) = default;
};

LogRegModel zero_logreg(std::size_t classes, std::size_t dim, double l2 = 0.0);

/// Throws on fewer than two distinct labels, ragged rows, or a label >= K.
LogRegModel train_logreg(const Rows& x, std::span<const std::size_t> y, std::size_t n_classes,
                         const LogRegConfig& config);

Vector logreg_scores(const LogRegModel& model, std::span<const double> x);
/// softmax(Wx + b).
Vector logreg_predict_proba(const LogRegModel& model, std::span<const double> x);

struct LogRegGradient {
  double loss = 0.0;
  Matrix weights;
  Matrix bias;
};

/// Mean cross-entropy over the selected rows plus (l2/2)*||W||^2 (bias
/// unregularized), with its exact gradient. Empty `rows` means all rows.
LogRegGradient logreg_loss_and_grad(const LogRegModel& model, const Rows& x,
                                    std::span<const std::size_t> y,
                                    std::span<const std::size_t> rows = {});

// ---------------------------------------------------------------------------
// Kernel SVM

enum class KernelKind { linear, rbf };

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double gamma = 0.1;
  double c = 1.0;

  /// Throws unless C > 0 and (for rbf) gamma > 0.
  void validate() const;
  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

double kernel(const KernelSpec& spec, std::span<const double> a, std::span<const double> b);

struct SmoConfig {
  double tol = 1e-3;
  /// Work bound: at most max_passes * n^2 pair updates.
  std::size_t max_passes = 20;
  std::uint64_t seed = 42;
};

struct SvmBinaryModel {
  KernelSpec spec;
  std::vector<std::size_t> support_indices;  // into the training rows
  std::vector<double> alphas;                // 0 < alpha <= C
  std::vector<int> labels;                   // +1 / -1
  Rows support_vectors;
  double bias = 0.0;
  bool converged = false;
  std::size_t iterations = 0;

  /// f(x) = sum_i alpha_i y_i K(x_i, x) + b
  double decision(std::span<const double> x) const;
  friend bool operator==(const SvmBinaryModel&, const SvmBinaryModel&) = default;
};

/// SMO on the dual with maximal-violating-pair selection. Stops once the
/// KKT gap is within tol. Throws on single-class data or fewer than two rows.
SvmBinaryModel smo_train_binary(const Rows& x, std::span<const int> y, const KernelSpec& spec,
                                const SmoConfig& config = {});

/// Dense alpha vector (zeros for non-support rows).
std::vector<double> full_alphas(const SvmBinaryModel& model, std::size_t n);

/// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K(x_i, x_j)
double svm_dual_objective(const Rows& x, std::span<const int> y, std::span<const double> alpha,
                          const KernelSpec& spec);

/// Largest KKT violation of y_i f(x_i) against its alpha's bound state.
double svm_max_kkt_residual(const SvmBinaryModel& model, const Rows& x, std::span<const int> y);

// ---------------------------------------------------------------------------
// One-vs-rest

enum class Family { svm, logreg };

struct OvrSpec {
  KernelSpec kernel;
  SmoConfig smo;
  LogRegConfig logreg;
};

struct OvrModel {
  Family family = Family::svm;
  std::size_t n_classes = 0;
  std::vector<SvmBinaryModel> svms;        // family == svm
  std::vector<LogRegModel> binary_logregs;  // family == logreg, K = 2 each
  friend bool operator==(const OvrModel&, const OvrModel&) = default;
};

struct OvrPrediction {
  std::size_t label = 0;
  Vector scores;
  Vector probabilities;
};

/// One binary problem per class; each class must appear in `y`.
OvrModel ovr_train(const Rows& x, std::span<const std::size_t> y, std::size_t n_classes,
                   Family family, const OvrSpec& spec);

/// Argmax of scores, ties to the lowest class. SVM margins map through a
/// fixed sigmoid; logistic scores through softmax.
OvrPrediction ovr_predict(const OvrModel& model, std::span<const double> x);

std::size_t argmax(std::span<const double> values);

}  // namespace qadaa::classical
