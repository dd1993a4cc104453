#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acnn/autodiff/tape.hpp"
#include "acnn/core/fft.hpp"

namespace acnn::ad {

namespace detail {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using CMapMat = Eigen::Map<const RowMat<T>>;

inline void check(bool cond, const std::string& label, const std::string& what) {
  require(cond, ErrorCategory::shape_mismatch, label + ": " + what);
}

template <class T>
void check_rank4(const Tensor<T>& t, const std::string& label) {
  check(t.rank() == 4, label, "expected (N,C,H,W), got " + shape_string(t.shape()));
}

// col[(ci*k + ky)*k + kx][y*wo + x] = in[ci][y + ky - pad][x + kx - pad]
template <class T>
void im2col(const T* in, std::size_t ci, std::size_t h, std::size_t w, std::size_t k, std::size_t pad,
            std::size_t ho, std::size_t wo, T* col) {
  const long lh = static_cast<long>(h), lw = static_cast<long>(w);
  for (std::size_t c = 0; c < ci; ++c)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = col + ((c * k + ky) * k + kx) * ho * wo;
        const T* plane = in + c * h * w;
        for (std::size_t y = 0; y < ho; ++y) {
          const long sy = static_cast<long>(y + ky) - static_cast<long>(pad);
          T* dst = row + y * wo;
          if (sy < 0 || sy >= lh) {
            std::fill(dst, dst + wo, T{0});
            continue;
          }
          const T* src = plane + sy * lw;
          for (std::size_t x = 0; x < wo; ++x) {
            const long sx = static_cast<long>(x + kx) - static_cast<long>(pad);
            dst[x] = (sx >= 0 && sx < lw) ? src[sx] : T{0};
          }
        }
      }
}

template <class T>
void col2im(const T* col, std::size_t ci, std::size_t h, std::size_t w, std::size_t k, std::size_t pad,
            std::size_t ho, std::size_t wo, T* out) {
  const long lh = static_cast<long>(h), lw = static_cast<long>(w);
  for (std::size_t c = 0; c < ci; ++c)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = col + ((c * k + ky) * k + kx) * ho * wo;
        T* plane = out + c * h * w;
        for (std::size_t y = 0; y < ho; ++y) {
          const long sy = static_cast<long>(y + ky) - static_cast<long>(pad);
          if (sy < 0 || sy >= lh) continue;
          const T* src = row + y * wo;
          T* dst = plane + sy * lw;
          for (std::size_t x = 0; x < wo; ++x) {
            const long sx = static_cast<long>(x + kx) - static_cast<long>(pad);
            if (sx >= 0 && sx < lw) dst[sx] += src[x];
          }
        }
      }
}

}  // namespace detail

/// 2D convolution, stride 1. w: (Co, Ci, k, k); bias optional (invalid Var).
template <class T>
Var conv2d(Tape<T>& tape, Var x, Var w, Var bias, std::size_t pad, std::string label = "conv2d") {
  const auto& X = tape.value(x);
  const auto& W = tape.value(w);
  detail::check_rank4(X, label);
  detail::check(W.rank() == 4 && W.dim(2) == W.dim(3), label, "weight must be (Co,Ci,k,k)");
  const std::size_t n = X.n(), ci = X.c(), h = X.h(), wd = X.w();
  const std::size_t co = W.dim(0), k = W.dim(2);
  detail::check(W.dim(1) == ci, label,
                "weight expects " + std::to_string(W.dim(1)) + " input channels, got " + std::to_string(ci));
  detail::check(h + 2 * pad >= k && wd + 2 * pad >= k, label, "kernel larger than padded input");
  if (bias.valid())
    detail::check(tape.value(bias).numel() == co, label, "bias length must equal output channels");
  const std::size_t ho = h + 2 * pad - k + 1, wo = wd + 2 * pad - k + 1;
  const std::size_t kk = ci * k * k, p = ho * wo;
  const bool pointwise = (k == 1 && pad == 0);

  Tensor<T> Y = Tensor<T>::nchw(n, co, ho, wo);
  std::vector<T> col(pointwise ? 0 : kk * p);
  detail::CMapMat<T> Wm(W.data(), co, kk);
  for (std::size_t b = 0; b < n; ++b) {
    const T* xb = X.data() + b * ci * h * wd;
    if (!pointwise) detail::im2col(xb, ci, h, wd, k, pad, ho, wo, col.data());
    detail::CMapMat<T> C(pointwise ? xb : col.data(), kk, p);
    detail::MapMat<T> Ym(Y.data() + b * co * p, co, p);
    Ym.noalias() = Wm * C;
    if (bias.valid()) {
      const auto& B = tape.value(bias);
      for (std::size_t o = 0; o < co; ++o) Ym.row(o).array() += B[o];
    }
  }

  std::vector<std::size_t> inputs{x.id, w.id};
  if (bias.valid()) inputs.push_back(bias.id);
  return tape.push(OpKind::conv2d, std::move(label), std::move(Y), inputs,
                   [n, ci, h, wd, co, k, pad, ho, wo, kk, p, pointwise](Tape<T>& t, std::size_t self) {
                     const auto& node = t.node_at(self);
                     const auto& G = node.grad;
                     const std::size_t xi = node.inputs[0], wi = node.inputs[1];
                     const auto& X = t.value_at(xi);
                     const auto& W = t.value_at(wi);
                     const bool need_x = t.requires_grad(xi);
                     const bool need_w = t.requires_grad(wi);
                     const bool has_b = node.inputs.size() > 2;
                     const bool need_b = has_b && t.requires_grad(node.inputs[2]);
                     T* dX = need_x ? t.grad_buffer(xi).data() : nullptr;
                     T* dW = need_w ? t.grad_buffer(wi).data() : nullptr;
                     T* dB = need_b ? t.grad_buffer(node.inputs[2]).data() : nullptr;
                     std::vector<T> col(pointwise ? 0 : kk * p), dcol(kk * p);
                     detail::CMapMat<T> Wm(W.data(), co, kk);
                     for (std::size_t b = 0; b < n; ++b) {
                       const T* xb = X.data() + b * ci * h * wd;
                       detail::CMapMat<T> Gm(G.data() + b * co * p, co, p);
                       if (need_w) {
                         if (!pointwise) detail::im2col(xb, ci, h, wd, k, pad, ho, wo, col.data());
                         detail::CMapMat<T> C(pointwise ? xb : col.data(), kk, p);
                         detail::MapMat<T>(dW, co, kk).noalias() += Gm * C.transpose();
                       }
                       // A plain loop: Eigen's vectorized sum peels by pointer alignment,
                       // which makes the summation order vary between allocations.
                       if (need_b)
                         for (std::size_t o = 0; o < co; ++o) {
                           const T* g = G.data() + (b * co + o) * p;
                           double acc = 0.0;
                           for (std::size_t i = 0; i < p; ++i) acc += static_cast<double>(g[i]);
                           dB[o] += static_cast<T>(acc);
                         }
                       if (need_x) {
                         if (pointwise) {
                           detail::MapMat<T>(dX + b * ci * h * wd, kk, p).noalias() += Wm.transpose() * Gm;
                         } else {
                           detail::MapMat<T>(dcol.data(), kk, p).noalias() = Wm.transpose() * Gm;
                           detail::col2im(dcol.data(), ci, h, wd, k, pad, ho, wo, dX + b * ci * h * wd);
                         }
                       }
                     }
                   });
}

/// Transposed convolution with kernel == stride (non-overlapping unpooling).
/// w: (Ci, Co, s, s); output (N, Co, s*H, s*W).
template <class T>
Var conv2d_transpose(Tape<T>& tape, Var x, Var w, Var bias, std::string label = "conv2d_transpose") {
  const auto& X = tape.value(x);
  const auto& W = tape.value(w);
  detail::check_rank4(X, label);
  detail::check(W.rank() == 4 && W.dim(2) == W.dim(3), label, "weight must be (Ci,Co,s,s)");
  const std::size_t n = X.n(), ci = X.c(), h = X.h(), wd = X.w();
  detail::check(W.dim(0) == ci, label,
                "weight expects " + std::to_string(W.dim(0)) + " input channels, got " + std::to_string(ci));
  const std::size_t co = W.dim(1), s = W.dim(2), p = h * wd, q = co * s * s;
  if (bias.valid())
    detail::check(tape.value(bias).numel() == co, label, "bias length must equal output channels");

  Tensor<T> Y = Tensor<T>::nchw(n, co, h * s, wd * s);
  detail::CMapMat<T> Wm(W.data(), ci, q);
  detail::RowMat<T> Z(q, p);
  for (std::size_t b = 0; b < n; ++b) {
    detail::CMapMat<T> Xm(X.data() + b * ci * p, ci, p);
    Z.noalias() = Wm.transpose() * Xm;
    for (std::size_t o = 0; o < co; ++o) {
      const T bo = bias.valid() ? tape.value(bias)[o] : T{0};
      for (std::size_t a = 0; a < s; ++a)
        for (std::size_t c = 0; c < s; ++c) {
          const T* z = Z.data() + ((o * s + a) * s + c) * p;
          for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < wd; ++j) Y.at(b, o, i * s + a, j * s + c) = z[i * wd + j] + bo;
        }
    }
  }

  std::vector<std::size_t> inputs{x.id, w.id};
  if (bias.valid()) inputs.push_back(bias.id);
  return tape.push(OpKind::conv2d_transpose, std::move(label), std::move(Y), inputs,
                   [n, ci, h, wd, co, s, p, q](Tape<T>& t, std::size_t self) {
                     const auto& node = t.node_at(self);
                     const auto& G = node.grad;
                     const std::size_t xi = node.inputs[0], wi = node.inputs[1];
                     const auto& X = t.value_at(xi);
                     const auto& W = t.value_at(wi);
                     const bool need_x = t.requires_grad(xi), need_w = t.requires_grad(wi);
                     const bool need_b = node.inputs.size() > 2 && t.requires_grad(node.inputs[2]);
                     T* dB = need_b ? t.grad_buffer(node.inputs[2]).data() : nullptr;
                     T* dW = need_w ? t.grad_buffer(wi).data() : nullptr;
                     T* dX = need_x ? t.grad_buffer(xi).data() : nullptr;
                     detail::CMapMat<T> Wm(W.data(), ci, q);
                     detail::RowMat<T> dZ(q, p);
                     for (std::size_t b = 0; b < n; ++b) {
                       for (std::size_t o = 0; o < co; ++o)
                         for (std::size_t a = 0; a < s; ++a)
                           for (std::size_t c = 0; c < s; ++c) {
                             T* z = dZ.data() + ((o * s + a) * s + c) * p;
                             for (std::size_t i = 0; i < h; ++i)
                               for (std::size_t j = 0; j < wd; ++j) {
                                 const T g = G.at(b, o, i * s + a, j * s + c);
                                 z[i * wd + j] = g;
                                 if (need_b) dB[o] += g;
                               }
                           }
                       detail::CMapMat<T> Xm(X.data() + b * ci * p, ci, p);
                       if (need_w) detail::MapMat<T>(dW, ci, q).noalias() += Xm * dZ.transpose();
                       if (need_x) detail::MapMat<T>(dX + b * ci * p, ci, p).noalias() += Wm * dZ;
                     }
                   });
}

/// Fully connected map y = x W^T (+ b); x is (N, Cin, ...) flattened per item.
/// Rank-4 inputs give (N, Cout, 1, 1) outputs.
template <class T>
Var linear(Tape<T>& tape, Var x, Var w, Var bias, std::string label = "linear") {
  const auto& X = tape.value(x);
  const auto& W = tape.value(w);
  detail::check(X.rank() >= 2, label, "input needs a batch dimension");
  detail::check(W.rank() == 2, label, "weight must be (Cout, Cin)");
  const std::size_t n = X.dim(0), cin = X.numel() / n, cout = W.dim(0);
  detail::check(W.dim(1) == cin, label,
                "weight expects " + std::to_string(W.dim(1)) + " inputs, got " + std::to_string(cin));
  if (bias.valid()) detail::check(tape.value(bias).numel() == cout, label, "bias length mismatch");
  Tensor<T> Y(X.rank() == 4 ? Shape{n, cout, 1, 1} : Shape{n, cout});
  detail::CMapMat<T> Xm(X.data(), n, cin);
  detail::CMapMat<T> Wm(W.data(), cout, cin);
  detail::MapMat<T> Ym(Y.data(), n, cout);
  Ym.noalias() = Xm * Wm.transpose();
  if (bias.valid()) {
    const auto& B = tape.value(bias);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t o = 0; o < cout; ++o) Ym(i, o) += B[o];
  }
  std::vector<std::size_t> inputs{x.id, w.id};
  if (bias.valid()) inputs.push_back(bias.id);
  return tape.push(OpKind::linear, std::move(label), std::move(Y), inputs, [n, cin, cout](Tape<T>& t, std::size_t self) {
    const auto& node = t.node_at(self);
    detail::CMapMat<T> Gm(node.grad.data(), n, cout);
    const std::size_t xi = node.inputs[0], wi = node.inputs[1];
    if (t.requires_grad(wi))
      detail::MapMat<T>(t.grad_buffer(wi).data(), cout, cin).noalias() +=
          Gm.transpose() * detail::CMapMat<T>(t.value_at(xi).data(), n, cin);
    if (t.requires_grad(xi))
      detail::MapMat<T>(t.grad_buffer(xi).data(), n, cin).noalias() +=
          Gm * detail::CMapMat<T>(t.value_at(wi).data(), cout, cin);
    if (node.inputs.size() > 2 && t.requires_grad(node.inputs[2])) {
      auto& dB = t.grad_buffer(node.inputs[2]);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < cout; ++o) dB[o] += Gm(i, o);
    }
  });
}

template <class T>
Var relu(Tape<T>& tape, Var x, std::string label = "relu") {
  Tensor<T> Y = tape.value(x);
  for (auto& v : Y.storage()) v = v > T{0} ? v : T{0};
  return tape.push(OpKind::relu, std::move(label), std::move(Y), {x.id}, [](Tape<T>& t, std::size_t self) {
    const auto& node = t.node_at(self);
    const std::size_t xi = node.inputs[0];
    const auto& X = t.value_at(xi);
    auto& dX = t.grad_buffer(xi);
    for (std::size_t i = 0; i < X.numel(); ++i)
      if (X[i] > T{0}) dX[i] += node.grad[i];
  });
}

template <class T>
Var sigmoid(Tape<T>& tape, Var x, std::string label = "sigmoid") {
  Tensor<T> Y = tape.value(x);
  for (auto& v : Y.storage()) v = T{1} / (T{1} + std::exp(-v));
  return tape.push(OpKind::sigmoid, std::move(label), std::move(Y), {x.id}, [](Tape<T>& t, std::size_t self) {
    const auto& node = t.node_at(self);
    auto& dX = t.grad_buffer(node.inputs[0]);
    for (std::size_t i = 0; i < node.value.numel(); ++i) {
      const T s = node.value[i];
      dX[i] += node.grad[i] * s * (T{1} - s);
    }
  });
}

struct BatchNormOptions {
  double momentum = 0.1;
  double epsilon = 1e-5;
};

/// Per-channel batch normalization. Train mode normalizes with batch
/// statistics (biased variance) and updates the running buffers; eval mode
/// is the affine map given by the running buffers.
template <class T>
Var batchnorm2d(Tape<T>& tape, Var x, Var gamma, Var beta, Parameter<T>& running_mean, Parameter<T>& running_var,
                Mode mode, BatchNormOptions opt = {}, std::string label = "batchnorm2d") {
  const auto& X = tape.value(x);
  detail::check_rank4(X, label);
  const std::size_t n = X.n(), c = X.c(), hw = X.h() * X.w();
  detail::check(tape.value(gamma).numel() == c && tape.value(beta).numel() == c &&
                    running_mean.value.numel() == c && running_var.value.numel() == c,
                label, "parameters must have one entry per channel (" + std::to_string(c) + ")");
  const auto& g = tape.value(gamma);
  const auto& bt = tape.value(beta);
  const std::size_t m = n * hw;

  std::vector<T> mean(c), invstd(c);
  if (mode == Mode::train) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const T* p = X.data() + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(m);
      double v = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const T* p = X.data() + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) v += (p[i] - mu) * (p[i] - mu);
      }
      const double var = v / static_cast<double>(m);
      mean[ch] = static_cast<T>(mu);
      invstd[ch] = static_cast<T>(1.0 / std::sqrt(var + opt.epsilon));
      const double unbiased = m > 1 ? v / static_cast<double>(m - 1) : var;
      running_mean.value[ch] = static_cast<T>((1.0 - opt.momentum) * running_mean.value[ch] + opt.momentum * mu);
      running_var.value[ch] = static_cast<T>((1.0 - opt.momentum) * running_var.value[ch] + opt.momentum * unbiased);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = running_mean.value[ch];
      invstd[ch] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var.value[ch]) + opt.epsilon));
    }
  }

  Tensor<T> Y(X.shape());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* p = X.data() + (b * c + ch) * hw;
      T* y = Y.data() + (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) y[i] = g[ch] * (p[i] - mean[ch]) * invstd[ch] + bt[ch];
    }

  const bool train = mode == Mode::train;
  return tape.push(OpKind::batchnorm2d, std::move(label), std::move(Y), {x.id, gamma.id, beta.id},
                   [n, c, hw, m, train, mean = std::move(mean), invstd = std::move(invstd)](Tape<T>& t, std::size_t self) {
                     const auto& node = t.node_at(self);
                     const auto& G = node.grad;
                     const std::size_t xi = node.inputs[0], gi = node.inputs[1], bi = node.inputs[2];
                     const auto& X = t.value_at(xi);
                     const auto& gam = t.value_at(gi);
                     T* dX = t.requires_grad(xi) ? t.grad_buffer(xi).data() : nullptr;
                     T* dG = t.requires_grad(gi) ? t.grad_buffer(gi).data() : nullptr;
                     T* dBt = t.requires_grad(bi) ? t.grad_buffer(bi).data() : nullptr;
                     for (std::size_t ch = 0; ch < c; ++ch) {
                       double sum_g = 0.0, sum_gx = 0.0;
                       for (std::size_t b = 0; b < n; ++b) {
                         const T* p = X.data() + (b * c + ch) * hw;
                         const T* gp = G.data() + (b * c + ch) * hw;
                         for (std::size_t i = 0; i < hw; ++i) {
                           sum_g += gp[i];
                           sum_gx += gp[i] * (p[i] - mean[ch]) * invstd[ch];
                         }
                       }
                       if (dG) dG[ch] += static_cast<T>(sum_gx);
                       if (dBt) dBt[ch] += static_cast<T>(sum_g);
                       if (!dX) continue;
                       const T scale = gam[ch] * invstd[ch];
                       const T mg = static_cast<T>(sum_g / static_cast<double>(m));
                       const T mgx = static_cast<T>(sum_gx / static_cast<double>(m));
                       for (std::size_t b = 0; b < n; ++b) {
                         const T* p = X.data() + (b * c + ch) * hw;
                         const T* gp = G.data() + (b * c + ch) * hw;
                         T* d = dX + (b * c + ch) * hw;
                         for (std::size_t i = 0; i < hw; ++i) {
                           if (train) {
                             const T xhat = (p[i] - mean[ch]) * invstd[ch];
                             d[i] += scale * (gp[i] - mg - xhat * mgx);
                           } else {
                             d[i] += scale * gp[i];
                           }
                         }
                       }
                     }
                   });
}

/// 2x2 max pooling, stride 2. Ties route to the first element in scan order.
template <class T>
Var maxpool2d(Tape<T>& tape, Var x, std::string label = "maxpool2d") {
  const auto& X = tape.value(x);
  detail::check_rank4(X, label);
  detail::check(X.h() % 2 == 0 && X.w() % 2 == 0, label,
                "spatial size " + std::to_string(X.h()) + "x" + std::to_string(X.w()) + " not divisible by 2");
  const std::size_t n = X.n(), c = X.c(), ho = X.h() / 2, wo = X.w() / 2;
  Tensor<T> Y = Tensor<T>::nchw(n, c, ho, wo);
  std::vector<std::size_t> argmax(Y.numel());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < ho; ++i)
        for (std::size_t j = 0; j < wo; ++j) {
          std::size_t best = ((b * c + ch) * X.h() + 2 * i) * X.w() + 2 * j;
          for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t d = 0; d < 2; ++d) {
              const std::size_t idx = ((b * c + ch) * X.h() + 2 * i + a) * X.w() + 2 * j + d;
              if (X[idx] > X[best]) best = idx;
            }
          const std::size_t o = ((b * c + ch) * ho + i) * wo + j;
          Y[o] = X[best];
          argmax[o] = best;
        }
  return tape.push(OpKind::maxpool2d, std::move(label), std::move(Y), {x.id},
                   [argmax = std::move(argmax)](Tape<T>& t, std::size_t self) {
                     const auto& node = t.node_at(self);
                     auto& dX = t.grad_buffer(node.inputs[0]);
                     for (std::size_t o = 0; o < argmax.size(); ++o) dX[argmax[o]] += node.grad[o];
                   });
}

/// a * b where every dimension of b equals a's or is 1.
template <class T>
Var mul_broadcast(Tape<T>& tape, Var a, Var b, std::string label = "mul_broadcast") {
  const auto& A = tape.value(a);
  const auto& B = tape.value(b);
  detail::check_rank4(A, label);
  detail::check_rank4(B, label);
  std::array<std::size_t, 4> as{}, bs{};
  for (std::size_t i = 0; i < 4; ++i) {
    as[i] = A.dim(i);
    bs[i] = B.dim(i);
    detail::check(bs[i] == as[i] || bs[i] == 1, label,
                  "cannot broadcast " + shape_string(B.shape()) + " onto " + shape_string(A.shape()));
  }
  auto bindex = [as, bs](std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return (((bs[0] == 1 ? 0 : n) * bs[1] + (bs[1] == 1 ? 0 : c)) * bs[2] + (bs[2] == 1 ? 0 : h)) * bs[3] +
           (bs[3] == 1 ? 0 : w);
  };
  Tensor<T> Y(A.shape());
  std::size_t o = 0;
  for (std::size_t n = 0; n < as[0]; ++n)
    for (std::size_t c = 0; c < as[1]; ++c)
      for (std::size_t h = 0; h < as[2]; ++h)
        for (std::size_t w = 0; w < as[3]; ++w, ++o) Y[o] = A[o] * B[bindex(n, c, h, w)];
  return tape.push(OpKind::mul_broadcast, std::move(label), std::move(Y), {a.id, b.id},
                   [as, bindex](Tape<T>& t, std::size_t self) {
                     const auto& node = t.node_at(self);
                     const std::size_t ai = node.inputs[0], bi = node.inputs[1];
                     const auto& A = t.value_at(ai);
                     const auto& B = t.value_at(bi);
                     T* dA = t.requires_grad(ai) ? t.grad_buffer(ai).data() : nullptr;
                     T* dB = t.requires_grad(bi) ? t.grad_buffer(bi).data() : nullptr;
                     std::size_t o = 0;
                     for (std::size_t n = 0; n < as[0]; ++n)
                       for (std::size_t c = 0; c < as[1]; ++c)
                         for (std::size_t h = 0; h < as[2]; ++h)
                           for (std::size_t w = 0; w < as[3]; ++w, ++o) {
                             const std::size_t j = bindex(n, c, h, w);
                             if (dA) dA[o] += node.grad[o] * B[j];
                             if (dB) dB[j] += node.grad[o] * A[o];
                           }
                   });
}

/// Elementwise maximum; ties route the gradient to `a`.
template <class T>
Var elementwise_max(Tape<T>& tape, Var a, Var b, std::string label = "elementwise_max") {
  const auto& A = tape.value(a);
  const auto& B = tape.value(b);
  detail::check(A.shape() == B.shape(), label,
                "operand shapes differ: " + shape_string(A.shape()) + " vs " + shape_string(B.shape()));
  Tensor<T> Y(A.shape());
  for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] = A[i] >= B[i] ? A[i] : B[i];
  return tape.push(OpKind::elementwise_max, std::move(label), std::move(Y), {a.id, b.id},
                   [](Tape<T>& t, std::size_t self) {
                     const auto& node = t.node_at(self);
                     const std::size_t ai = node.inputs[0], bi = node.inputs[1];
                     const auto& A = t.value_at(ai);
                     const auto& B = t.value_at(bi);
                     T* dA = t.requires_grad(ai) ? t.grad_buffer(ai).data() : nullptr;
                     T* dB = t.requires_grad(bi) ? t.grad_buffer(bi).data() : nullptr;
                     for (std::size_t i = 0; i < A.numel(); ++i) {
                       if (A[i] >= B[i]) {
                         if (dA) dA[i] += node.grad[i];
                       } else if (dB) {
                         dB[i] += node.grad[i];
                       }
                     }
                   });
}

/// Per-(item, channel) L1 norm: (N, C, H, W) -> (N, C, 1, 1).
template <class T>
Var l1_reduce_per_channel(Tape<T>& tape, Var x, std::string label = "l1_reduce_per_channel") {
  const auto& X = tape.value(x);
  detail::check_rank4(X, label);
  const std::size_t nc = X.n() * X.c(), hw = X.h() * X.w();
  Tensor<T> Y = Tensor<T>::nchw(X.n(), X.c(), 1, 1);
  for (std::size_t i = 0; i < nc; ++i) {
    T s{0};
    for (std::size_t j = 0; j < hw; ++j) s += std::abs(X[i * hw + j]);
    Y[i] = s;
  }
  return tape.push(OpKind::l1_reduce_per_channel, std::move(label), std::move(Y), {x.id},
                   [nc, hw](Tape<T>& t, std::size_t self) {
                     const auto& node = t.node_at(self);
                     const std::size_t xi = node.inputs[0];
                     const auto& X = t.value_at(xi);
                     auto& dX = t.grad_buffer(xi);
                     for (std::size_t i = 0; i < nc; ++i)
                       for (std::size_t j = 0; j < hw; ++j) {
                         const T v = X[i * hw + j];
                         const T sgn = v > T{0} ? T{1} : (v < T{0} ? T{-1} : T{0});
                         dX[i * hw + j] += node.grad[i] * sgn;
                       }
                   });
}

template <class T>
Var add(Tape<T>& tape, Var a, Var b, std::string label = "add") {
  const auto& A = tape.value(a);
  const auto& B = tape.value(b);
  detail::check(A.shape() == B.shape(), label,
                "operand shapes differ: " + shape_string(A.shape()) + " vs " + shape_string(B.shape()));
  Tensor<T> Y = A;
  for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] += B[i];
  return tape.push(OpKind::add, std::move(label), std::move(Y), {a.id, b.id}, [](Tape<T>& t, std::size_t self) {
    const auto& node = t.node_at(self);
    for (std::size_t k = 0; k < 2; ++k) {
      const std::size_t id = node.inputs[k];
      if (!t.requires_grad(id)) continue;
      auto& d = t.grad_buffer(id);
      for (std::size_t i = 0; i < d.numel(); ++i) d[i] += node.grad[i];
    }
  });
}

/// Channel-axis concatenation.
template <class T>
Var concat(Tape<T>& tape, std::span<const Var> parts, std::string label = "concat") {
  detail::check(!parts.empty(), label, "nothing to concatenate");
  const auto& first = tape.value(parts[0]);
  detail::check_rank4(first, label);
  const std::size_t n = first.n(), h = first.h(), w = first.w();
  std::size_t c_total = 0;
  std::vector<std::size_t> ids, widths;
  for (auto v : parts) {
    const auto& P = tape.value(v);
    detail::check_rank4(P, label);
    detail::check(P.n() == n && P.h() == h && P.w() == w, label,
                  "cannot concatenate " + shape_string(P.shape()) + " with " + shape_string(first.shape()));
    ids.push_back(v.id);
    widths.push_back(P.c());
    c_total += P.c();
  }
  const std::size_t hw = h * w;
  Tensor<T> Y = Tensor<T>::nchw(n, c_total, h, w);
  for (std::size_t b = 0; b < n; ++b) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto& P = tape.value(parts[k]);
      std::copy_n(P.data() + b * widths[k] * hw, widths[k] * hw, Y.data() + (b * c_total + off) * hw);
      off += widths[k];
    }
  }
  return tape.push(OpKind::concat, std::move(label), std::move(Y), ids, [n, hw, c_total, widths](Tape<T>& t, std::size_t self) {
    const auto& node = t.node_at(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const std::size_t id = node.inputs[k];
      if (t.requires_grad(id)) {
        auto& d = t.grad_buffer(id);
        for (std::size_t b = 0; b < n; ++b) {
          const T* g = node.grad.data() + (b * c_total + off) * hw;
          T* dst = d.data() + b * widths[k] * hw;
          for (std::size_t i = 0; i < widths[k] * hw; ++i) dst[i] += g[i];
        }
      }
      off += widths[k];
    }
  });
}

/// Channels [first, first + count) of every batch item.
template <class T>
Var slice_channels(Tape<T>& tape, Var x, std::size_t first, std::size_t count, std::string label = "slice_channels") {
  const auto& X = tape.value(x);
  detail::check_rank4(X, label);
  detail::check(first + count <= X.c(), label,
                "channel range [" + std::to_string(first) + ", " + std::to_string(first + count) +
                    ") exceeds " + std::to_string(X.c()));
  const std::size_t n = X.n(), c = X.c(), hw = X.h() * X.w();
  Tensor<T> Y = Tensor<T>::nchw(n, count, X.h(), X.w());
  for (std::size_t b = 0; b < n; ++b)
    std::copy_n(X.data() + (b * c + first) * hw, count * hw, Y.data() + b * count * hw);
  return tape.push(OpKind::slice_channels, std::move(label), std::move(Y), {x.id},
                   [n, c, hw, first, count](Tape<T>& t, std::size_t self) {
                     const auto& node = t.node_at(self);
                     auto& d = t.grad_buffer(node.inputs[0]);
                     for (std::size_t b = 0; b < n; ++b) {
                       const T* g = node.grad.data() + b * count * hw;
                       T* dst = d.data() + (b * c + first) * hw;
                       for (std::size_t i = 0; i < count * hw; ++i) dst[i] += g[i];
                     }
                   });
}

/// Mean squared error over all elements; returns a scalar of shape (1).
template <class T>
Var mse_loss(Tape<T>& tape, Var a, Var b, std::string label = "mse_loss") {
  const auto& A = tape.value(a);
  const auto& B = tape.value(b);
  detail::check(A.shape() == B.shape(), label,
                "operand shapes differ: " + shape_string(A.shape()) + " vs " + shape_string(B.shape()));
  double s = 0.0;
  for (std::size_t i = 0; i < A.numel(); ++i) {
    const double d = static_cast<double>(A[i]) - static_cast<double>(B[i]);
    s += d * d;
  }
  Tensor<T> Y(Shape{1}, static_cast<T>(s / static_cast<double>(A.numel())));
  return tape.push(OpKind::mse_loss, std::move(label), std::move(Y), {a.id, b.id}, [](Tape<T>& t, std::size_t self) {
    const auto& node = t.node_at(self);
    const std::size_t ai = node.inputs[0], bi = node.inputs[1];
    const auto& A = t.value_at(ai);
    const auto& B = t.value_at(bi);
    const T scale = node.grad[0] * T{2} / static_cast<T>(A.numel());
    T* dA = t.requires_grad(ai) ? t.grad_buffer(ai).data() : nullptr;
    T* dB = t.requires_grad(bi) ? t.grad_buffer(bi).data() : nullptr;
    for (std::size_t i = 0; i < A.numel(); ++i) {
      const T d = scale * (A[i] - B[i]);
      if (dA) dA[i] += d;
      if (dB) dB[i] -= d;
    }
  });
}

namespace detail {

// Orthonormal centred 2D transform of every (re, im) channel pair.
template <class T>
void transform_channel_pairs(const T* in, T* out, std::size_t n, std::size_t c, std::size_t h, std::size_t w,
                             bool inverse, bool accumulate) {
  const std::size_t hw = h * w;
  std::vector<cdouble> buf(hw);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t p = 0; p < c / 2; ++p) {
      const T* re = in + (b * c + 2 * p) * hw;
      const T* im = re + hw;
      for (std::size_t i = 0; i < hw; ++i) buf[i] = cdouble(re[i], im[i]);
      fft2c_plane(buf, h, w, inverse);
      T* ore = out + (b * c + 2 * p) * hw;
      T* oim = ore + hw;
      for (std::size_t i = 0; i < hw; ++i) {
        if (accumulate) {
          ore[i] += static_cast<T>(buf[i].real());
          oim[i] += static_cast<T>(buf[i].imag());
        } else {
          ore[i] = static_cast<T>(buf[i].real());
          oim[i] = static_cast<T>(buf[i].imag());
        }
      }
    }
}

}  // namespace detail

/// ifft2c applied to each (re, im) channel pair: k-space channels -> image channels.
/// The transform is unitary, so its adjoint (the backward pass) is fft2c.
template <class T>
Var ifft2c_channels(Tape<T>& tape, Var x, std::string label = "ifft2c_channels") {
  const auto& X = tape.value(x);
  detail::check_rank4(X, label);
  detail::check(X.c() % 2 == 0, label, "channel count must be even (re, im pairs)");
  Tensor<T> Y(X.shape());
  detail::transform_channel_pairs(X.data(), Y.data(), X.n(), X.c(), X.h(), X.w(), true, false);
  return tape.push(OpKind::ifft2c_channels, std::move(label), std::move(Y), {x.id}, [](Tape<T>& t, std::size_t self) {
    const auto& node = t.node_at(self);
    const auto& G = node.grad;
    auto& dX = t.grad_buffer(node.inputs[0]);
    detail::transform_channel_pairs(G.data(), dX.data(), G.n(), G.c(), G.h(), G.w(), false, true);
  });
}

/// Root-sum-of-squares over (re, im) channel pairs: (N, 2n, H, W) -> (N, 1, H, W).
/// The gradient at a zero-magnitude pixel is taken as zero.
template <class T>
Var rss_combine(Tape<T>& tape, Var x, std::string label = "rss_combine") {
  const auto& X = tape.value(x);
  detail::check_rank4(X, label);
  detail::check(X.c() % 2 == 0, label, "channel count must be even (re, im pairs)");
  const std::size_t n = X.n(), c = X.c(), hw = X.h() * X.w();
  Tensor<T> Y = Tensor<T>::nchw(n, 1, X.h(), X.w());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t i = 0; i < hw; ++i) {
      T s{0};
      for (std::size_t ch = 0; ch < c; ++ch) {
        const T v = X[(b * c + ch) * hw + i];
        s += v * v;
      }
      Y[b * hw + i] = std::sqrt(s);
    }
  return tape.push(OpKind::rss_combine, std::move(label), std::move(Y), {x.id}, [n, c, hw](Tape<T>& t, std::size_t self) {
    const auto& node = t.node_at(self);
    const std::size_t xi = node.inputs[0];
    const auto& X = t.value_at(xi);
    auto& dX = t.grad_buffer(xi);
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t i = 0; i < hw; ++i) {
        const T r = node.value[b * hw + i];
        if (r <= T{0}) continue;
        const T g = node.grad[b * hw + i] / r;
        for (std::size_t ch = 0; ch < c; ++ch) dX[(b * c + ch) * hw + i] += g * X[(b * c + ch) * hw + i];
      }
  });
}

}  // namespace acnn::ad
