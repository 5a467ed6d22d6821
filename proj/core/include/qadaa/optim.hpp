#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qadaa/numkit.hpp"

namespace qadaa::numkit {

enum class UpdateRule { sgd, adam };

struct OptimizerHyper {
  UpdateRule rule = UpdateRule::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam moments, one pair per parameter tensor. Sized lazily on the first
/// step; later steps must present the same shapes.
struct OptimizerState {
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

void optimizer_step(std::span<Matrix* const> params,
                    std::span<const Matrix* const> grads,
                    OptimizerState& state, const OptimizerHyper& hyper);

/// Scales all gradients so their joint L2 norm is at most max_norm.
/// Returns the pre-clipping norm.
double clip_global_norm(std::span<Matrix* const> grads, double max_norm);

/// A parameter tensor under gradient check. `coords` restricts the check to
/// the given flat indices (e.g. embedding rows touched by the batch); empty
/// means every coordinate, subject to GradCheckOptions::max_coords.
struct CheckedTensor {
  std::string name;
  Matrix* value = nullptr;
  const Matrix* analytic = nullptr;
  std::vector<std::size_t> coords;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-4;
  std::size_t max_coords = 0;  // per tensor; 0 = no subsampling
  std::uint64_t seed = 0;
};

struct TensorCheck {
  std::string name;
  std::size_t coords_checked = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  bool pass = false;
};

double relative_error(double analytic, double numeric) noexcept;

/// Central differences of `loss` against analytic gradients. Parameters are
/// perturbed in place and restored bit-exactly after each probe.
GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  std::span<CheckedTensor> tensors,
                                  const GradCheckOptions& options = {});

}  // namespace qadaa::numkit
