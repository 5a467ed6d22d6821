#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qadaa/classical.hpp"
#include "qadaa/error.hpp"

namespace qadaa::classical {

void KernelSpec::validate() const {
  if (!(c > 0.0)) usage_error("SVM: C must be positive");
  if (kind == KernelKind::rbf && !(gamma > 0.0)) usage_error("SVM: gamma must be positive for the rbf kernel");
}

double kernel(const KernelSpec& spec, std::span<const double> a, std::span<const double> b) {
  if (spec.kind == KernelKind::linear) return numkit::dot(a, b);
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::exp(-spec.gamma * sq);
}

double SvmBinaryModel::decision(std::span<const double> x) const {
  double f = bias;
  for (std::size_t s = 0; s < support_vectors.size(); ++s) {
    f += alphas[s] * labels[s] * kernel(spec, support_vectors[s], x);
  }
  return f;
}

namespace {

// Solver state over the full training set. Works with the gradient of the
// minimization form  1/2 a'Qa - e'a,  G = Qa - e,  Q_ij = y_i y_j K_ij.
class SmoSolver {
 public:
  SmoSolver(const Rows& x, std::span<const int> y, const KernelSpec& spec, const SmoConfig& config)
      : x_(x), y_(y), spec_(spec), config_(config), n_(x.size()),
        k_(n_ * n_), alpha_(n_, 0.0), grad_(n_, -1.0), order_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i; j < n_; ++j) {
        const double v = kernel(spec_, x_[i], x_[j]);
        k_[i * n_ + j] = v;
        k_[j * n_ + i] = v;
      }
    }
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    numkit::Rng rng(config_.seed);
    rng.shuffle(order_);
  }

  void run() {
    const std::size_t cap = std::max<std::size_t>(1, config_.max_passes) * n_ * n_;
    for (iterations_ = 0; iterations_ < cap; ++iterations_) {
      std::size_t i = 0;
      std::size_t j = 0;
      if (!select_pair(i, j)) {
        refresh_gradient();
        if (!select_pair(i, j)) {
          converged_ = true;
          return;
        }
      }
      update_pair(i, j);
    }
    refresh_gradient();
    std::size_t i = 0;
    std::size_t j = 0;
    converged_ = !select_pair(i, j);
  }

  SvmBinaryModel model() const {
    SvmBinaryModel m;
    m.spec = spec_;
    m.bias = bias();
    m.converged = converged_;
    m.iterations = iterations_;
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] > 0.0) {
        m.support_indices.push_back(i);
        m.alphas.push_back(alpha_[i]);
        m.labels.push_back(y_[i]);
        m.support_vectors.push_back(x_[i]);
      }
    }
    return m;
  }

 private:
  double q(std::size_t i, std::size_t j) const {
    return static_cast<double>(y_[i] * y_[j]) * k_[i * n_ + j];
  }
  bool in_up(std::size_t t) const {
    return (y_[t] == 1 && alpha_[t] < spec_.c) || (y_[t] == -1 && alpha_[t] > 0.0);
  }
  bool in_low(std::size_t t) const {
    return (y_[t] == -1 && alpha_[t] < spec_.c) || (y_[t] == 1 && alpha_[t] > 0.0);
  }
  double score(std::size_t t) const { return -static_cast<double>(y_[t]) * grad_[t]; }

  // Maximal violating pair: i maximizes -yG over I_up, j minimizes it over
  // I_low. Returns false once the gap m - M is within tol.
  bool select_pair(std::size_t& i, std::size_t& j) const {
    double m = -std::numeric_limits<double>::infinity();
    double big_m = std::numeric_limits<double>::infinity();
    bool have_i = false;
    bool have_j = false;
    for (std::size_t t : order_) {
      const double s = score(t);
      if (in_up(t) && s > m) {
        m = s;
        i = t;
        have_i = true;
      }
      if (in_low(t) && s < big_m) {
        big_m = s;
        j = t;
        have_j = true;
      }
    }
    return have_i && have_j && m - big_m > config_.tol;
  }

  void update_pair(std::size_t i, std::size_t j) {
    constexpr double kTau = 1e-12;
    const double c = spec_.c;
    const double old_i = alpha_[i];
    const double old_j = alpha_[j];
    double ai = old_i;
    double aj = old_j;
    if (y_[i] != y_[j]) {
      const double quad = std::max(q(i, i) + q(j, j) + 2.0 * q(i, j), kTau);
      const double delta = (-grad_[i] - grad_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) { aj = 0.0; ai = diff; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = -diff; }
      }
      if (diff > 0.0) {
        if (ai > c) { ai = c; aj = c - diff; }
      } else {
        if (aj > c) { aj = c; ai = c + diff; }
      }
    } else {
      const double quad = std::max(q(i, i) + q(j, j) - 2.0 * q(i, j), kTau);
      const double delta = (grad_[i] - grad_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) { ai = c; aj = sum - c; }
      } else {
        if (aj < 0.0) { aj = 0.0; ai = sum; }
      }
      if (sum > c) {
        if (aj > c) { aj = c; ai = sum - c; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = sum; }
      }
    }
    alpha_[i] = snap(ai);
    alpha_[j] = snap(aj);
    const double di = alpha_[i] - old_i;
    const double dj = alpha_[j] - old_j;
    for (std::size_t t = 0; t < n_; ++t) grad_[t] += q(t, i) * di + q(t, j) * dj;
  }

  // Pins values within rounding of a bound onto the bound so the index-set
  // tests stay exact.
  double snap(double a) const {
    const double eps = 1e-12 * spec_.c;
    if (a <= eps) return 0.0;
    if (a >= spec_.c - eps) return spec_.c;
    return a;
  }

  void refresh_gradient() {
    for (std::size_t t = 0; t < n_; ++t) {
      double g = -1.0;
      for (std::size_t s = 0; s < n_; ++s) {
        if (alpha_[s] != 0.0) g += q(t, s) * alpha_[s];
      }
      grad_[t] = g;
    }
  }

  // b = mean of -yG over free vectors, else the midpoint of the feasible
  // interval [M, m].
  double bias() const {
    double sum = 0.0;
    std::size_t free = 0;
    double m = -std::numeric_limits<double>::infinity();
    double big_m = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n_; ++t) {
      const double s = score(t);
      if (alpha_[t] > 0.0 && alpha_[t] < spec_.c) {
        sum += s;
        ++free;
      }
      if (in_up(t)) m = std::max(m, s);
      if (in_low(t)) big_m = std::min(big_m, s);
    }
    if (free > 0) return sum / static_cast<double>(free);
    return 0.5 * (m + big_m);
  }

  const Rows& x_;
  std::span<const int> y_;
  KernelSpec spec_;
  SmoConfig config_;
  std::size_t n_;
  std::vector<double> k_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
  std::vector<std::size_t> order_;
  std::size_t iterations_ = 0;
  bool converged_ = false;
};

}  // namespace

SvmBinaryModel smo_train_binary(const Rows& x, std::span<const int> y, const KernelSpec& spec,
                                const SmoConfig& config) {
  spec.validate();
  if (x.size() < 2) data_error("SVM: need at least two training rows");
  if (x.size() != y.size()) data_error("SVM: row and label counts differ");
  const std::size_t dim = x.front().size();
  bool pos = false;
  bool neg = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != dim) data_error("SVM: rows have different dimensions");
    if (y[i] == 1) pos = true;
    else if (y[i] == -1) neg = true;
    else data_error("SVM: labels must be +1 or -1");
  }
  if (!pos || !neg) data_error("SVM: training labels contain a single class");

  SmoSolver solver(x, y, spec, config);
  solver.run();
  return solver.model();
}

std::vector<double> full_alphas(const SvmBinaryModel& model, std::size_t n) {
  std::vector<double> a(n, 0.0);
  for (std::size_t s = 0; s < model.support_indices.size(); ++s) {
    a.at(model.support_indices[s]) = model.alphas[s];
  }
  return a;
}

double svm_dual_objective(const Rows& x, std::span<const int> y, std::span<const double> alpha,
                          const KernelSpec& spec) {
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    linear += alpha[i];
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (alpha[j] == 0.0) continue;
      quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel(spec, x[i], x[j]);
    }
  }
  return linear - 0.5 * quad;
}

double svm_max_kkt_residual(const SvmBinaryModel& model, const Rows& x, std::span<const int> y) {
  const auto alpha = full_alphas(model, x.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double margin = y[i] * model.decision(x[i]);
    double r = 0.0;
    if (alpha[i] <= 0.0) {
      r = std::max(0.0, 1.0 - margin);
    } else if (alpha[i] >= model.spec.c) {
      r = std::max(0.0, margin - 1.0);
    } else {
      r = std::abs(margin - 1.0);
    }
    worst = std::max(worst, r);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// One-vs-rest

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

OvrModel ovr_train(const Rows& x, std::span<const std::size_t> y, std::size_t n_classes,
                   Family family, const OvrSpec& spec) {
  if (n_classes < 2) data_error("one-vs-rest: need at least two classes");
  if (x.size() != y.size()) data_error("one-vs-rest: row and label counts differ");
  std::vector<std::size_t> counts(n_classes, 0);
  for (auto label : y) {
    if (label >= n_classes) data_error("one-vs-rest: label out of range");
    ++counts[label];
  }
  for (std::size_t k = 0; k < n_classes; ++k) {
    if (counts[k] == 0) data_error("one-vs-rest: class " + std::to_string(k) + " is absent from the training data");
  }

  OvrModel model;
  model.family = family;
  model.n_classes = n_classes;
  for (std::size_t k = 0; k < n_classes; ++k) {
    if (family == Family::svm) {
      std::vector<int> yk(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) yk[i] = y[i] == k ? 1 : -1;
      SmoConfig smo = spec.smo;
      smo.seed = numkit::derive_seed(spec.smo.seed, k);
      model.svms.push_back(smo_train_binary(x, yk, spec.kernel, smo));
    } else {
      std::vector<std::size_t> yk(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) yk[i] = y[i] == k ? 1 : 0;
      LogRegConfig lr = spec.logreg;
      lr.seed = numkit::derive_seed(spec.logreg.seed, k);
      model.binary_logregs.push_back(train_logreg(x, yk, 2, lr));
    }
  }
  return model;
}

OvrPrediction ovr_predict(const OvrModel& model, std::span<const double> x) {
  OvrPrediction out;
  out.scores.resize(model.n_classes);
  if (model.family == Family::svm) {
    out.probabilities.resize(model.n_classes);
    for (std::size_t k = 0; k < model.n_classes; ++k) {
      out.scores[k] = model.svms.at(k).decision(x);
      out.probabilities[k] = numkit::sigmoid(out.scores[k]);
    }
  } else {
    for (std::size_t k = 0; k < model.n_classes; ++k) {
      const Vector s = logreg_scores(model.binary_logregs.at(k), x);
      out.scores[k] = s[1] - s[0];
    }
    out.probabilities = numkit::softmax(out.scores);
  }
  out.label = argmax(out.scores);
  return out;
}

}  // namespace qadaa::classical
