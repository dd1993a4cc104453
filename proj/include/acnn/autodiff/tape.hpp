#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "acnn/core/error.hpp"
#include "acnn/core/tensor.hpp"

namespace acnn::ad {

enum class OpKind {
  input,
  parameter,
  conv2d,
  conv2d_transpose,
  linear,
  relu,
  sigmoid,
  batchnorm2d,
  maxpool2d,
  mul_broadcast,
  elementwise_max,
  l1_reduce_per_channel,
  add,
  concat,
  mse_loss,
  slice_channels,
  ifft2c_channels,
  rss_combine,
};

inline std::string_view op_name(OpKind k) {
  switch (k) {
    case OpKind::input: return "input";
    case OpKind::parameter: return "parameter";
    case OpKind::conv2d: return "conv2d";
    case OpKind::conv2d_transpose: return "conv2d_transpose";
    case OpKind::linear: return "linear";
    case OpKind::relu: return "relu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::batchnorm2d: return "batchnorm2d";
    case OpKind::maxpool2d: return "maxpool2d";
    case OpKind::mul_broadcast: return "elementwise_mul_broadcast";
    case OpKind::elementwise_max: return "elementwise_max";
    case OpKind::l1_reduce_per_channel: return "l1_reduce_per_channel";
    case OpKind::add: return "add";
    case OpKind::concat: return "concat";
    case OpKind::mse_loss: return "mse_loss";
    case OpKind::slice_channels: return "slice_channels";
    case OpKind::ifft2c_channels: return "ifft2c_channels";
    case OpKind::rss_combine: return "rss_combine";
  }
  return "?";
}

enum class Mode { train, eval };

/// Named array with a gradient buffer of the same shape.
template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Shape shape, bool is_trainable)
      : name(std::move(n)), value(shape), grad(shape), trainable(is_trainable) {}

  void zero_grad() { grad.fill(T{0}); }
};

/// Ordered parameter storage. Declaration order is the serialization order.
template <class T>
class ParameterStore {
 public:
  std::size_t add(std::string name, Shape shape, bool trainable = true) {
    for (const auto& p : params_)
      require(p.name != name, ErrorCategory::invalid_argument, "duplicate parameter name " + name);
    params_.emplace_back(std::move(name), std::move(shape), trainable);
    return params_.size() - 1;
  }

  Parameter<T>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }
  std::size_t size() const noexcept { return params_.size(); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  Parameter<T>* find(std::string_view name) {
    for (auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }
  const Parameter<T>* find(std::string_view name) const {
    for (const auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  std::size_t trainable_count() const {
    std::size_t n = 0;
    for (const auto& p : params_)
      if (p.trainable) n += p.value.numel();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::vector<Tensor<T>> snapshot() const {
    std::vector<Tensor<T>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
  }

  void restore(const std::vector<Tensor<T>>& values) {
    require(values.size() == params_.size(), ErrorCategory::invalid_argument, "restore: parameter count mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i].value = values[i];
  }

 private:
  std::vector<Parameter<T>> params_;
};

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const noexcept { return id != static_cast<std::size_t>(-1); }
};

/// Define-by-run record of one forward pass.
///
/// Each op appends a node with its value and a closure that pushes the
/// node's gradient into its inputs. backward() replays closures in reverse.
template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  struct Node {
    OpKind kind;
    std::string label;
    Tensor<T> value;
    Tensor<T> grad;
    std::vector<std::size_t> inputs;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var input(Tensor<T> value, bool requires_grad = false, std::string label = "input") {
    require(value.all_finite(), ErrorCategory::numeric, label + ": non-finite input");
    Node n{OpKind::input, std::move(label), std::move(value), {}, {}, nullptr, requires_grad, {}};
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
  }

  /// Records a parameter as a leaf. Gradients accumulate into param.grad
  /// only when the parameter is trainable.
  Var parameter(Parameter<T>& p) {
    Node n{OpKind::parameter, p.name, {}, {}, {}, &p, p.trainable, {}};
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
  }

  Var push(OpKind kind, std::string label, Tensor<T> value, std::vector<std::size_t> inputs, BackwardFn fn) {
    bool rg = false;
    for (auto i : inputs) rg = rg || nodes_[i].requires_grad;
    Node n{kind, std::move(label), std::move(value), {}, std::move(inputs), nullptr, rg, std::move(fn)};
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
  }

  const Tensor<T>& value(Var v) const { return value_at(node(v), v.id); }
  const Tensor<T>& value_at(std::size_t id) const { return value_at(nodes_[id], id); }
  const Node& node(Var v) const {
    require(v.valid() && v.id < nodes_.size(), ErrorCategory::invalid_argument, "tape: invalid variable");
    return nodes_[v.id];
  }
  Node& node_at(std::size_t id) { return nodes_[id]; }
  const Node& node_at(std::size_t id) const { return nodes_[id]; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, zero-initialized on first access.
  Tensor<T>& grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    const auto& v = value_at(id);
    if (n.grad.numel() != v.numel()) n.grad = Tensor<T>(v.shape());
    return n.grad;
  }

  /// Gradient of a leaf after backward(); empty if none flowed.
  const Tensor<T>& grad(Var v) const { return node(v).grad; }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse sweep from a scalar node. Trainable parameter gradients are
  /// accumulated into Parameter::grad.
  void backward(Var loss) {
    require(!nodes_.empty() && loss.valid() && loss.id < nodes_.size(), ErrorCategory::invalid_argument,
            "backward called before forward");
    require(!backward_done_, ErrorCategory::invalid_argument, "backward already ran on this tape");
    require(value_at(loss.id).numel() == 1, ErrorCategory::invalid_argument,
            "backward needs a scalar loss, got shape " + shape_string(value_at(loss.id).shape()));
    backward_done_ = true;
    grad_buffer(loss.id)[0] = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.kind == OpKind::parameter) {
        if (n.param && n.param->trainable) {
          auto& dst = n.param->grad;
          for (std::size_t j = 0; j < dst.numel(); ++j) dst[j] += n.grad[j];
        }
        continue;
      }
      if (n.kind == OpKind::input) continue;
      if (n.backward) n.backward(*this, i);
      // intermediate gradients are dead once propagated
      n.grad = Tensor<T>();
    }
  }

 private:
  // parameter leaves read through to the store instead of copying
  static const Tensor<T>& value_at(const Node& n, std::size_t) { return n.param ? n.param->value : n.value; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace acnn::ad
