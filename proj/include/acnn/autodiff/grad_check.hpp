#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "acnn/autodiff/tape.hpp"
#include "acnn/core/random.hpp"

namespace acnn::ad {

struct GradCheckOptions {
  std::size_t coords_per_param = 20;  // all coordinates when the parameter is smaller
  double epsilon = 0.0;               // <= 0: 1e-3 in float, 1e-6 in double; scaled by max(1, |theta|)
  // Denominator floors, as fractions of the largest sampled analytic gradient
  // of the same parameter and of all parameters.
  double floor_fraction = 1e-2;
  double global_floor_fraction = 1e-4;
  // A coordinate above `tolerance` is re-measured with steps shrunk by 10x up
  // to this many times; the smallest error is kept. A step that straddles a
  // ReLU or max-out switch stops straddling it once small enough.
  std::size_t refinements = 2;
  double tolerance = 0.0;  // <= 0: 1e-3 in float, 1e-5 in double
  std::uint64_t seed = 0;
};

struct ParamCheck {
  std::string name;
  std::size_t coords = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  // ||a - n|| / max(||a||, ||n||) over the sampled coordinates
  double norm_rel_error = 0.0;
};

struct GradCheckResult {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  double max_norm_rel_error = 0.0;
};

/// Compares analytic parameter gradients against central differences.
///
/// `loss(true)` must rebuild the graph from the current parameter values,
/// run the reverse sweep so Parameter::grad holds dL/dtheta, and return the
/// loss. `loss(false)` only evaluates the loss; it may do so at higher
/// precision than T. The loss must not depend on state the forward pass mutates.
template <class T>
GradCheckResult grad_check(ParameterStore<T>& params, const std::function<double(bool)>& loss,
                           GradCheckOptions opt = {}) {
  constexpr bool single = std::is_same_v<T, float>;
  const double eps0 = opt.epsilon > 0 ? opt.epsilon : (single ? 1e-3 : 1e-6);
  const double tol = opt.tolerance > 0 ? opt.tolerance : (single ? 1e-3 : 1e-5);
  params.zero_grad();
  const double base = loss(true);
  require(std::isfinite(base), ErrorCategory::numeric, "grad_check: non-finite loss");
  std::vector<Tensor<T>> analytic;
  double global = 0.0;
  for (const auto& p : params) {
    analytic.push_back(p.grad);
    if (p.trainable)
      for (T g : p.grad.storage()) global = std::max(global, std::abs(static_cast<double>(g)));
  }

  auto central = [&](Parameter<T>& p, std::size_t i, double eps) {
    const T saved = p.value[i];
    p.value[i] = static_cast<T>(static_cast<double>(saved) + eps);
    const double hi = static_cast<double>(p.value[i]);
    const double lp = loss(false);
    p.value[i] = static_cast<T>(static_cast<double>(saved) - eps);
    const double lo = static_cast<double>(p.value[i]);
    const double lm = loss(false);
    p.value[i] = saved;
    require(std::isfinite(lp) && std::isfinite(lm), ErrorCategory::numeric,
            "grad_check: non-finite loss while perturbing " + p.name);
    return (lp - lm) / (hi - lo);  // the step actually representable in T
  };

  Rng rng(opt.seed);
  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    if (!p.trainable) continue;
    const std::size_t n = p.value.numel();
    std::vector<std::size_t> coords(n);
    for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    if (n > opt.coords_per_param) {
      rng.shuffle(coords);
      coords.resize(opt.coords_per_param);
    }
    double scale = 0.0;
    for (auto i : coords) scale = std::max(scale, std::abs(static_cast<double>(analytic[k][i])));
    const double floor = std::max({opt.floor_fraction * scale, opt.global_floor_fraction * global,
                                   std::numeric_limits<double>::min()});
    ParamCheck pc{p.name, coords.size(), 0.0, 0, 0.0, 0.0, 0.0};
    double diff2 = 0.0, a2 = 0.0, n2sum = 0.0;
    for (std::size_t j = 0; j < coords.size(); ++j) {
      const std::size_t i = coords[j];
      const double a = static_cast<double>(analytic[k][i]);
      double eps = eps0 * std::max(1.0, std::abs(static_cast<double>(p.value[i])));
      double num = central(p, i, eps);
      double rel = std::abs(a - num) / std::max({std::abs(a), std::abs(num), floor});
      for (std::size_t r = 0; r < opt.refinements && rel > tol; ++r) {
        eps /= 10.0;
        const double n2 = central(p, i, eps);
        const double r2 = std::abs(a - n2) / std::max({std::abs(a), std::abs(n2), floor});
        if (r2 < rel) {
          rel = r2;
          num = n2;
        }
      }
      diff2 += (a - num) * (a - num);
      a2 += a * a;
      n2sum += num * num;
      if (rel > pc.max_rel_error || j == 0) {
        pc.max_rel_error = rel;
        pc.worst_index = i;
        pc.analytic = a;
        pc.numeric = num;
      }
    }
    const double den = std::sqrt(std::max(a2, n2sum));
    pc.norm_rel_error = den > 0.0 ? std::sqrt(diff2) / den : 0.0;
    result.max_rel_error = std::max(result.max_rel_error, pc.max_rel_error);
    result.max_norm_rel_error = std::max(result.max_norm_rel_error, pc.norm_rel_error);
    result.params.push_back(pc);
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k].grad = analytic[k];
  (void)base;
  return result;
}

}  // namespace acnn::ad
