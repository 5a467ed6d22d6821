#include "qadaa/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qadaa/error.hpp"

namespace qadaa::numkit {

void optimizer_step(std::span<Matrix* const> params,
                    std::span<const Matrix* const> grads,
                    OptimizerState& state, const OptimizerHyper& hyper) {
  if (params.size() != grads.size()) {
    data_error("optimizer_step: parameter and gradient counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i])) {
      data_error("optimizer_step: shape mismatch at tensor " + std::to_string(i));
    }
  }

  if (hyper.rule == UpdateRule::sgd) {
    ++state.step;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->values();
      auto g = grads[i]->values();
      for (std::size_t k = 0; k < p.size(); ++k) p[k] -= hyper.lr * g[k];
    }
    return;
  }

  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.emplace_back(p->rows(), p->cols());
      state.second_moment.emplace_back(p->rows(), p->cols());
    }
  } else if (state.first_moment.size() != params.size()) {
    data_error("optimizer_step: optimizer state tracks a different parameter set");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    auto g = grads[i]->values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    if (m.size() != p.size()) {
      data_error("optimizer_step: moment shape mismatch at tensor " + std::to_string(i));
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * g[k];
      v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
  }
}

double clip_global_norm(std::span<Matrix* const> grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix* g : grads) sq += squared_norm(g->values());
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Matrix* g : grads) {
      for (double& v : g->values()) v *= scale;
    }
  }
  return norm;
}

double relative_error(double analytic, double numeric) noexcept {
  return std::abs(analytic - numeric) /
         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  std::span<CheckedTensor> tensors,
                                  const GradCheckOptions& options) {
  GradCheckReport report;
  Rng rng(options.seed);
  for (CheckedTensor& t : tensors) {
    if (!t.value || !t.analytic || !t.value->same_shape(*t.analytic)) {
      data_error("finite_diff_check: tensor '" + t.name + "' has no matching gradient");
    }
    std::vector<std::size_t> coords = t.coords;
    if (coords.empty()) {
      coords.resize(t.value->size());
      std::iota(coords.begin(), coords.end(), std::size_t{0});
    }
    if (options.max_coords > 0 && coords.size() > options.max_coords) {
      rng.shuffle(coords);
      coords.resize(options.max_coords);
      std::sort(coords.begin(), coords.end());
    }

    TensorCheck check{t.name, 0, 0.0};
    auto values = t.value->values();
    auto analytic = t.analytic->values();
    for (std::size_t idx : coords) {
      const double saved = values[idx];
      values[idx] = saved + options.eps;
      const double up = loss();
      values[idx] = saved - options.eps;
      const double down = loss();
      values[idx] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        data_error("finite_diff_check: non-finite loss while probing '" + t.name + "'");
      }
      const double numeric = (up - down) / (2.0 * options.eps);
      check.max_rel_error = std::max(check.max_rel_error, relative_error(analytic[idx], numeric));
      ++check.coords_checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.tensors.push_back(std::move(check));
  }
  report.pass = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace qadaa::numkit
