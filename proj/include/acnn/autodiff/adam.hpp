#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "acnn/autodiff/tape.hpp"

namespace acnn::ad {

/// Adam with coupled L2 weight decay: g <- g + lambda * theta before the moment updates.
template <class T>
struct AdamState {
  std::size_t step = 0;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-4;
};

/// One optimizer step over every trainable parameter.
/// A non-finite gradient aborts before any parameter or moment is touched.
template <class T>
void adam_step(AdamState<T>& st, ParameterStore<T>& params) {
  for (const auto& p : params) {
    if (!p.trainable) continue;
    require(p.grad.all_finite(), ErrorCategory::training_diverged,
            "adam_step: non-finite gradient in parameter " + p.name);
  }
  if (st.first_moment.size() != params.size()) {
    st.first_moment.clear();
    st.second_moment.clear();
    for (const auto& p : params) {
      st.first_moment.emplace_back(p.value.shape());
      st.second_moment.emplace_back(p.value.shape());
    }
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    if (!p.trainable) continue;
    auto& m = st.first_moment[k];
    auto& v = st.second_moment[k];
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double g = static_cast<double>(p.grad[i]) + st.weight_decay * static_cast<double>(p.value[i]);
      const double mi = st.beta1 * static_cast<double>(m[i]) + (1.0 - st.beta1) * g;
      const double vi = st.beta2 * static_cast<double>(v[i]) + (1.0 - st.beta2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = st.lr * (mi / c1) / (std::sqrt(vi / c2) + st.epsilon);
      p.value[i] = static_cast<T>(static_cast<double>(p.value[i]) - update);
    }
  }
}

/// Geometric interpolation from `start` at epoch 0 to `end` at the final epoch.
inline double lr_schedule(std::size_t epoch, std::size_t total_epochs, double start = 1e-4, double end = 1e-5) {
  require(total_epochs >= 1 && epoch < total_epochs, ErrorCategory::invalid_argument,
          "lr_schedule: epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(total_epochs) + ")");
  if (total_epochs == 1) return start;
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return start * std::pow(end / start, t);
}

}  // namespace acnn::ad
