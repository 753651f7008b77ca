// Copyright 2026 Vocalis Authors
// Reverse-mode autodiff over a recorded computation graph. Only the ops the
// two detector models need; every op validates shapes and output finiteness.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vocalis/ndarray.hpp"

namespace vocalis::nn {

enum class FreqPad { kSame, kValid };

// Tape of operations. Nodes are appended in execution order, so reverse
// iteration is a valid topological order for backpropagation.
template <typename T>
class Graph {
 public:
  struct Node {
    NdArray<T> value;
    NdArray<T> grad;
    bool needs_grad = false;
    std::function<void()> backprop;  // empty for leaves
  };

  int leaf(NdArray<T> value, bool needs_grad = false) {
    require_finite(value, "leaf");
    return push(std::move(value), needs_grad, {});
  }

  const NdArray<T>& value(int id) const { return nodes_[check(id)].value; }
  const NdArray<T>& grad(int id) const { return nodes_[check(id)].grad; }
  std::size_t node_count() const { return nodes_.size(); }

  // ---- convolution ----------------------------------------------------

  // 2-D cross-correlation of x[B,Ci,T,F] with w[Co,Ci,kt,kf] plus bias[Co].
  // Time is always same-padded (k_time odd); frequency is same or valid.
  int conv2d(int x_id, int w_id, int b_id, FreqPad fpad) {
    const auto& x = value(x_id);
    const auto& w = value(w_id);
    const auto& b = value(b_id);
    if (x.rank() != 4 || w.rank() != 4 || b.rank() != 1) {
      throw std::invalid_argument("conv2d: expected x[B,C,T,F], w[Co,Ci,kt,kf], b[Co]");
    }
    const int batch = x.extent(0), ci = x.extent(1), t_in = x.extent(2), f_in = x.extent(3);
    const int co = w.extent(0), kt = w.extent(2), kf = w.extent(3);
    if (w.extent(1) != ci) throw std::invalid_argument("conv2d: channel mismatch");
    if (b.extent(0) != co) throw std::invalid_argument("conv2d: bias length mismatch");
    if (kt % 2 == 0) throw std::invalid_argument("conv2d: k_time must be odd for same padding");
    const int pad_t = (kt - 1) / 2;
    const int pad_f = (fpad == FreqPad::kSame) ? (kf - 1) / 2 : 0;
    if (fpad == FreqPad::kSame && kf % 2 == 0) {
      throw std::invalid_argument("conv2d: k_freq must be odd for same padding");
    }
    const int f_out = (fpad == FreqPad::kSame) ? f_in : f_in - kf + 1;
    if (f_out < 1 || t_in < 1) throw std::invalid_argument("conv2d: input smaller than kernel");

    NdArray<T> y({batch, co, t_in, f_out});
    for (int n = 0; n < batch; ++n) {
      for (int o = 0; o < co; ++o) {
        T* yrow = &y.at4(n, o, 0, 0);
        const std::size_t plane = static_cast<std::size_t>(t_in) * f_out;
        for (std::size_t i = 0; i < plane; ++i) yrow[i] = b[static_cast<std::size_t>(o)];
        for (int c = 0; c < ci; ++c) {
          for (int dt = 0; dt < kt; ++dt) {
            for (int df = 0; df < kf; ++df) {
              const T wv = w.at4(o, c, dt, df);
              if (wv == T(0)) continue;
              for (int t = 0; t < t_in; ++t) {
                const int ti = t + dt - pad_t;
                if (ti < 0 || ti >= t_in) continue;
                const T* xr = &x.at4(n, c, ti, 0);
                T* yr = yrow + static_cast<std::size_t>(t) * f_out;
                const int f_lo = std::max(0, pad_f - df);
                const int f_hi = std::min(f_out, f_in + pad_f - df);
                for (int f = f_lo; f < f_hi; ++f) {
                  yr[f] += wv * xr[f + df - pad_f];
                }
              }
            }
          }
        }
      }
    }
    require_finite(y, "conv2d");

    const int id = push(std::move(y), needs(x_id) || needs(w_id) || needs(b_id), {});
    nodes_[id].backprop = [this, id, x_id, w_id, b_id, fpad, pad_t, pad_f]() {
      const auto& x = value(x_id);
      const auto& w = value(w_id);
      const auto& gy = nodes_[id].grad;
      const int batch = x.extent(0), ci = x.extent(1), t_in = x.extent(2), f_in = x.extent(3);
      const int co = w.extent(0), kt = w.extent(2), kf = w.extent(3);
      const int f_out = gy.extent(3);
      auto& gx = nodes_[x_id].grad;
      auto& gw = nodes_[w_id].grad;
      auto& gb = nodes_[b_id].grad;
      const bool want_x = needs(x_id), want_w = needs(w_id), want_b = needs(b_id);
      for (int n = 0; n < batch; ++n) {
        for (int o = 0; o < co; ++o) {
          if (want_b) {
            T acc = T(0);
            const T* gr = &gy.at4(n, o, 0, 0);
            const std::size_t plane = static_cast<std::size_t>(t_in) * f_out;
            for (std::size_t i = 0; i < plane; ++i) acc += gr[i];
            gb[static_cast<std::size_t>(o)] += acc;
          }
          if (!want_x && !want_w) continue;
          for (int c = 0; c < ci; ++c) {
            for (int dt = 0; dt < kt; ++dt) {
              for (int df = 0; df < kf; ++df) {
                const T wv = w.at4(o, c, dt, df);
                T wacc = T(0);
                for (int t = 0; t < t_in; ++t) {
                  const int ti = t + dt - pad_t;
                  if (ti < 0 || ti >= t_in) continue;
                  const T* gr = &gy.at4(n, o, t, 0);
                  const T* xr = &x.at4(n, c, ti, 0);
                  T* gxr = want_x ? &gx.at4(n, c, ti, 0) : nullptr;
                  const int f_lo = std::max(0, pad_f - df);
                  const int f_hi = std::min(f_out, f_in + pad_f - df);
                  for (int f = f_lo; f < f_hi; ++f) {
                    const T g = gr[f];
                    wacc += g * xr[f + df - pad_f];
                    if (want_x) gxr[f + df - pad_f] += g * wv;
                  }
                }
                if (want_w) gw.at4(o, c, dt, df) += wacc;
              }
            }
          }
        }
      }
    };
    return id;
  }

  // ---- elementwise ----------------------------------------------------

  // a * sigmoid(g): the gating half of a GLU.
  int glu_gate(int a_id, int g_id) {
    const auto& a = value(a_id);
    const auto& g = value(g_id);
    if (!a.same_shape(g)) throw std::invalid_argument("glu_gate: shape mismatch");
    NdArray<T> y(a.shape());
    NdArray<T> sig(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
      sig[i] = sigmoid(g[i]);
      y[i] = a[i] * sig[i];
    }
    require_finite(y, "glu_gate");
    const int id = push(std::move(y), needs(a_id) || needs(g_id), {});
    nodes_[id].backprop = [this, id, a_id, g_id, sig = std::move(sig)]() {
      const auto& gy = nodes_[id].grad;
      const auto& a = value(a_id);
      if (needs(a_id)) {
        auto& ga = nodes_[a_id].grad;
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * sig[i];
      }
      if (needs(g_id)) {
        auto& gg = nodes_[g_id].grad;
        for (std::size_t i = 0; i < gy.size(); ++i) {
          gg[i] += gy[i] * a[i] * sig[i] * (T(1) - sig[i]);
        }
      }
    };
    return id;
  }

  // x * mask, mask constant (dropout and freeze-style masking).
  int mul_mask(int x_id, NdArray<T> mask) {
    const auto& x = value(x_id);
    if (!x.same_shape(mask)) throw std::invalid_argument("mul_mask: shape mismatch");
    NdArray<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask[i];
    require_finite(y, "mul_mask");
    const int id = push(std::move(y), needs(x_id), {});
    nodes_[id].backprop = [this, id, x_id, mask = std::move(mask)]() {
      if (!needs(x_id)) return;
      const auto& gy = nodes_[id].grad;
      auto& gx = nodes_[x_id].grad;
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
    };
    return id;
  }

  // ---- normalization ---------------------------------------------------

  // Per-channel batch normalization over (batch, time, freq) of x[B,C,T,F].
  // Batch statistics are exposed so the trainer can maintain running stats.
  int batch_norm_train(int x_id, int gamma_id, int beta_id, T eps,
                       std::vector<T>* batch_mean = nullptr,
                       std::vector<T>* batch_var = nullptr) {
    const auto& x = value(x_id);
    const auto& gamma = value(gamma_id);
    const auto& beta = value(beta_id);
    if (x.rank() != 4) throw std::invalid_argument("batch_norm: expected x[B,C,T,F]");
    const int batch = x.extent(0), ch = x.extent(1);
    const std::size_t plane = static_cast<std::size_t>(x.extent(2)) * x.extent(3);
    if (gamma.extent(0) != ch || beta.extent(0) != ch) {
      throw std::invalid_argument("batch_norm: parameter length mismatch");
    }
    const T inv_n = T(1) / static_cast<T>(batch * plane);

    std::vector<T> mean(static_cast<std::size_t>(ch), T(0));
    std::vector<T> var(static_cast<std::size_t>(ch), T(0));
    for (int c = 0; c < ch; ++c) {
      T m = T(0);
      for (int n = 0; n < batch; ++n) {
        const T* xr = &x.at4(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) m += xr[i];
      }
      m *= inv_n;
      T v = T(0);
      for (int n = 0; n < batch; ++n) {
        const T* xr = &x.at4(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          const T d = xr[i] - m;
          v += d * d;
        }
      }
      mean[c] = m;
      var[c] = v * inv_n;
    }
    if (batch_mean) *batch_mean = mean;
    if (batch_var) *batch_var = var;

    NdArray<T> xhat(x.shape());
    NdArray<T> y(x.shape());
    std::vector<T> inv_std(static_cast<std::size_t>(ch));
    for (int c = 0; c < ch; ++c) inv_std[c] = T(1) / std::sqrt(var[c] + eps);
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < ch; ++c) {
        const T* xr = &x.at4(n, c, 0, 0);
        T* hr = &xhat.at4(n, c, 0, 0);
        T* yr = &y.at4(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          hr[i] = (xr[i] - mean[c]) * inv_std[c];
          yr[i] = gamma[static_cast<std::size_t>(c)] * hr[i] + beta[static_cast<std::size_t>(c)];
        }
      }
    }
    require_finite(y, "batch_norm");

    const int id = push(std::move(y), needs(x_id) || needs(gamma_id) || needs(beta_id), {});
    nodes_[id].backprop = [this, id, x_id, gamma_id, beta_id, xhat = std::move(xhat),
                           inv_std = std::move(inv_std), inv_n]() {
      const auto& gy = nodes_[id].grad;
      const auto& gamma = value(gamma_id);
      const auto& x = value(x_id);
      const int batch = x.extent(0), ch = x.extent(1);
      const std::size_t plane = static_cast<std::size_t>(x.extent(2)) * x.extent(3);
      for (int c = 0; c < ch; ++c) {
        T sum_gy = T(0), sum_gy_xhat = T(0);
        for (int n = 0; n < batch; ++n) {
          const T* gr = &gy.at4(n, c, 0, 0);
          const T* hr = &xhat.at4(n, c, 0, 0);
          for (std::size_t i = 0; i < plane; ++i) {
            sum_gy += gr[i];
            sum_gy_xhat += gr[i] * hr[i];
          }
        }
        if (needs(gamma_id)) nodes_[gamma_id].grad[static_cast<std::size_t>(c)] += sum_gy_xhat;
        if (needs(beta_id)) nodes_[beta_id].grad[static_cast<std::size_t>(c)] += sum_gy;
        if (needs(x_id)) {
          auto& gx = nodes_[x_id].grad;
          const T gscale = gamma[static_cast<std::size_t>(c)] * inv_std[c];
          for (int n = 0; n < batch; ++n) {
            const T* gr = &gy.at4(n, c, 0, 0);
            const T* hr = &xhat.at4(n, c, 0, 0);
            T* gxr = &gx.at4(n, c, 0, 0);
            for (std::size_t i = 0; i < plane; ++i) {
              gxr[i] += gscale * (gr[i] - inv_n * sum_gy - hr[i] * inv_n * sum_gy_xhat);
            }
          }
        }
      }
    };
    return id;
  }

  // Inference-mode normalization with fixed statistics.
  int batch_norm_eval(int x_id, int gamma_id, int beta_id, const std::vector<T>& mean,
                      const std::vector<T>& var, T eps) {
    const auto& x = value(x_id);
    const auto& gamma = value(gamma_id);
    const auto& beta = value(beta_id);
    const int batch = x.extent(0), ch = x.extent(1);
    const std::size_t plane = static_cast<std::size_t>(x.extent(2)) * x.extent(3);
    if (static_cast<int>(mean.size()) != ch || static_cast<int>(var.size()) != ch) {
      throw std::invalid_argument("batch_norm_eval: stats length mismatch");
    }
    std::vector<T> scale(static_cast<std::size_t>(ch)), shift(static_cast<std::size_t>(ch));
    for (int c = 0; c < ch; ++c) {
      scale[c] = gamma[static_cast<std::size_t>(c)] / std::sqrt(var[c] + eps);
      shift[c] = beta[static_cast<std::size_t>(c)] - mean[c] * scale[c];
    }
    NdArray<T> y(x.shape());
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < ch; ++c) {
        const T* xr = &x.at4(n, c, 0, 0);
        T* yr = &y.at4(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) yr[i] = scale[c] * xr[i] + shift[c];
      }
    }
    require_finite(y, "batch_norm_eval");
    const int id = push(std::move(y), needs(x_id) || needs(gamma_id) || needs(beta_id), {});
    nodes_[id].backprop = [this, id, x_id, scale = std::move(scale)]() {
      // Gradients w.r.t. gamma/beta are not needed in eval mode (used for
      // inference and input-space ascent only).
      if (!needs(x_id)) return;
      const auto& gy = nodes_[id].grad;
      const auto& x = value(x_id);
      auto& gx = nodes_[x_id].grad;
      const int batch = x.extent(0), ch = x.extent(1);
      const std::size_t plane = static_cast<std::size_t>(x.extent(2)) * x.extent(3);
      for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < ch; ++c) {
          const T* gr = &gy.at4(n, c, 0, 0);
          T* gxr = &gx.at4(n, c, 0, 0);
          for (std::size_t i = 0; i < plane; ++i) gxr[i] += gr[i] * scale[c];
        }
      }
    };
    return id;
  }

  // ---- pooling and reductions ------------------------------------------

  // Max pooling over the frequency axis, window = stride = pool_f; the last
  // window is clipped when F is not a multiple (pad-to-multiple semantics).
  int max_pool_freq(int x_id, int pool_f) {
    if (pool_f < 1) throw std::invalid_argument("max_pool_freq: pool_f < 1");
    const auto& x = value(x_id);
    if (x.rank() != 4) throw std::invalid_argument("max_pool_freq: expected x[B,C,T,F]");
    const int batch = x.extent(0), ch = x.extent(1), t_in = x.extent(2), f_in = x.extent(3);
    const int f_out = (f_in + pool_f - 1) / pool_f;
    NdArray<T> y({batch, ch, t_in, f_out});
    std::vector<int> argmax(y.size());
    std::size_t oi = 0;
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < ch; ++c) {
        for (int t = 0; t < t_in; ++t) {
          const T* xr = &x.at4(n, c, t, 0);
          for (int fo = 0; fo < f_out; ++fo, ++oi) {
            const int lo = fo * pool_f;
            const int hi = std::min(lo + pool_f, f_in);
            int best = lo;
            T bv = xr[lo];
            for (int f = lo + 1; f < hi; ++f) {
              if (xr[f] > bv) {
                bv = xr[f];
                best = f;
              }
            }
            y[oi] = bv;
            argmax[oi] = best;
          }
        }
      }
    }
    require_finite(y, "max_pool_freq");
    const int id = push(std::move(y), needs(x_id), {});
    nodes_[id].backprop = [this, id, x_id, argmax = std::move(argmax), f_out]() {
      if (!needs(x_id)) return;
      const auto& gy = nodes_[id].grad;
      const auto& x = value(x_id);
      auto& gx = nodes_[x_id].grad;
      const int batch = x.extent(0), ch = x.extent(1), t_in = x.extent(2);
      std::size_t oi = 0;
      for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < ch; ++c) {
          for (int t = 0; t < t_in; ++t) {
            T* gxr = &gx.at4(n, c, t, 0);
            for (int fo = 0; fo < f_out; ++fo, ++oi) {
              gxr[argmax[oi]] += gy[oi];
            }
          }
        }
      }
    };
    return id;
  }

  // Mean over time and frequency: x[B,C,T,F] -> y[B,C].
  int mean_time_freq(int x_id) {
    const auto& x = value(x_id);
    if (x.rank() != 4) throw std::invalid_argument("mean_time_freq: expected x[B,C,T,F]");
    const int batch = x.extent(0), ch = x.extent(1);
    const std::size_t plane = static_cast<std::size_t>(x.extent(2)) * x.extent(3);
    const T inv = T(1) / static_cast<T>(plane);
    NdArray<T> y({batch, ch});
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < ch; ++c) {
        const T* xr = &x.at4(n, c, 0, 0);
        T acc = T(0);
        for (std::size_t i = 0; i < plane; ++i) acc += xr[i];
        y.at2(n, c) = acc * inv;
      }
    }
    const int id = push(std::move(y), needs(x_id), {});
    nodes_[id].backprop = [this, id, x_id, inv]() {
      if (!needs(x_id)) return;
      const auto& gy = nodes_[id].grad;
      const auto& x = value(x_id);
      auto& gx = nodes_[x_id].grad;
      const int batch = x.extent(0), ch = x.extent(1);
      const std::size_t plane = static_cast<std::size_t>(x.extent(2)) * x.extent(3);
      for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < ch; ++c) {
          const T g = gy.at2(n, c) * inv;
          T* gxr = &gx.at4(n, c, 0, 0);
          for (std::size_t i = 0; i < plane; ++i) gxr[i] += g;
        }
      }
    };
    return id;
  }

  // Mean over the map of one channel: x[B,C,T,F] -> scalar. Visualization
  // objective for a chosen filter.
  int mean_channel(int x_id, int channel) {
    const auto& x = value(x_id);
    if (x.rank() != 4) throw std::invalid_argument("mean_channel: expected x[B,C,T,F]");
    if (channel < 0 || channel >= x.extent(1)) {
      throw std::invalid_argument("mean_channel: channel out of range");
    }
    const int batch = x.extent(0);
    const std::size_t plane = static_cast<std::size_t>(x.extent(2)) * x.extent(3);
    const T inv = T(1) / static_cast<T>(batch * plane);
    T acc = T(0);
    for (int n = 0; n < batch; ++n) {
      const T* xr = &x.at4(n, channel, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) acc += xr[i];
    }
    NdArray<T> y({1});
    y[0] = acc * inv;
    const int id = push(std::move(y), needs(x_id), {});
    nodes_[id].backprop = [this, id, x_id, channel, inv]() {
      if (!needs(x_id)) return;
      const T g = nodes_[id].grad[0] * inv;
      const auto& x = value(x_id);
      auto& gx = nodes_[x_id].grad;
      const int batch = x.extent(0);
      const std::size_t plane = static_cast<std::size_t>(x.extent(2)) * x.extent(3);
      for (int n = 0; n < batch; ++n) {
        T* gxr = &gx.at4(n, channel, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) gxr[i] += g;
      }
    };
    return id;
  }

  // Fixed-coefficient contraction to a scalar; the standard trick for
  // checking non-scalar ops with finite differences.
  int weighted_sum(int x_id, NdArray<T> coeffs) {
    const auto& x = value(x_id);
    if (!x.same_shape(coeffs)) throw std::invalid_argument("weighted_sum: shape mismatch");
    T acc = T(0);
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * coeffs[i];
    NdArray<T> y({1});
    y[0] = acc;
    const int id = push(std::move(y), needs(x_id), {});
    nodes_[id].backprop = [this, id, x_id, coeffs = std::move(coeffs)]() {
      if (!needs(x_id)) return;
      const T g = nodes_[id].grad[0];
      auto& gx = nodes_[x_id].grad;
      for (std::size_t i = 0; i < coeffs.size(); ++i) gx[i] += g * coeffs[i];
    };
    return id;
  }

  // ---- shape -----------------------------------------------------------

  // x[B,C,T,1] -> sequence [B,T,C] for the recurrent readout.
  int to_sequence(int x_id) {
    const auto& x = value(x_id);
    if (x.rank() != 4 || x.extent(3) != 1) {
      throw std::invalid_argument("to_sequence: expected x[B,C,T,1]");
    }
    const int batch = x.extent(0), ch = x.extent(1), t_in = x.extent(2);
    NdArray<T> y({batch, t_in, ch});
    for (int n = 0; n < batch; ++n) {
      for (int c = 0; c < ch; ++c) {
        for (int t = 0; t < t_in; ++t) y.at3(n, t, c) = x.at4(n, c, t, 0);
      }
    }
    const int id = push(std::move(y), needs(x_id), {});
    nodes_[id].backprop = [this, id, x_id]() {
      if (!needs(x_id)) return;
      const auto& gy = nodes_[id].grad;
      auto& gx = nodes_[x_id].grad;
      const int batch = gy.extent(0), t_in = gy.extent(1), ch = gy.extent(2);
      for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < ch; ++c) {
          for (int t = 0; t < t_in; ++t) gx.at4(n, c, t, 0) += gy.at3(n, t, c);
        }
      }
    };
    return id;
  }

  // ---- dense -----------------------------------------------------------

  // y[B,M] = x[B,N] . w[M,N]^T + b[M]
  int dense(int x_id, int w_id, int b_id) {
    const auto& x = value(x_id);
    const auto& w = value(w_id);
    const auto& b = value(b_id);
    if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1) {
      throw std::invalid_argument("dense: expected x[B,N], w[M,N], b[M]");
    }
    const int batch = x.extent(0), n_in = x.extent(1), m = w.extent(0);
    if (w.extent(1) != n_in || b.extent(0) != m) {
      throw std::invalid_argument("dense: shape mismatch");
    }
    NdArray<T> y({batch, m});
    for (int n = 0; n < batch; ++n) {
      for (int o = 0; o < m; ++o) {
        T acc = b[static_cast<std::size_t>(o)];
        const T* xr = &x.at2(n, 0);
        const T* wr = &w.at2(o, 0);
        for (int i = 0; i < n_in; ++i) acc += xr[i] * wr[i];
        y.at2(n, o) = acc;
      }
    }
    require_finite(y, "dense");
    const int id = push(std::move(y), needs(x_id) || needs(w_id) || needs(b_id), {});
    nodes_[id].backprop = [this, id, x_id, w_id, b_id]() {
      const auto& gy = nodes_[id].grad;
      const auto& x = value(x_id);
      const auto& w = value(w_id);
      const int batch = x.extent(0), n_in = x.extent(1), m = w.extent(0);
      for (int n = 0; n < batch; ++n) {
        for (int o = 0; o < m; ++o) {
          const T g = gy.at2(n, o);
          if (g == T(0)) continue;
          if (needs(b_id)) nodes_[b_id].grad[static_cast<std::size_t>(o)] += g;
          if (needs(w_id)) {
            T* gwr = &nodes_[w_id].grad.at2(o, 0);
            const T* xr = &x.at2(n, 0);
            for (int i = 0; i < n_in; ++i) gwr[i] += g * xr[i];
          }
          if (needs(x_id)) {
            T* gxr = &nodes_[x_id].grad.at2(n, 0);
            const T* wr = &w.at2(o, 0);
            for (int i = 0; i < n_in; ++i) gxr[i] += g * wr[i];
          }
        }
      }
    };
    return id;
  }

  // ---- recurrent -------------------------------------------------------

  // Unidirectional gated recurrent cell over x[B,T,N]; returns the final
  // hidden state [B,H]. Gate layout in the stacked matrices: r, z, n.
  int gru(int x_id, int wih_id, int whh_id, int bih_id, int bhh_id) {
    const auto& x = value(x_id);
    const auto& wih = value(wih_id);
    const auto& whh = value(whh_id);
    const auto& bih = value(bih_id);
    const auto& bhh = value(bhh_id);
    if (x.rank() != 3) throw std::invalid_argument("gru: expected x[B,T,N]");
    const int batch = x.extent(0), steps = x.extent(1), n_in = x.extent(2);
    const int hidden = whh.extent(1);
    if (wih.extent(0) != 3 * hidden || wih.extent(1) != n_in || whh.extent(0) != 3 * hidden ||
        bih.extent(0) != 3 * hidden || bhh.extent(0) != 3 * hidden) {
      throw std::invalid_argument("gru: parameter shapes inconsistent");
    }

    // Saved activations per step for backprop: r, z, n, h, and q = Whn h + bhn.
    const std::size_t bh = static_cast<std::size_t>(batch) * hidden;
    std::vector<T> r(bh * steps), z(bh * steps), cand(bh * steps), q(bh * steps);
    std::vector<T> h((steps + 1) * bh, T(0));  // h[0] = 0

    for (int t = 0; t < steps; ++t) {
      for (int n = 0; n < batch; ++n) {
        const T* xt = &x.at3(n, t, 0);
        const T* hprev = &h[static_cast<std::size_t>(t) * bh + static_cast<std::size_t>(n) * hidden];
        T* ht = &h[static_cast<std::size_t>(t + 1) * bh + static_cast<std::size_t>(n) * hidden];
        const std::size_t base = static_cast<std::size_t>(t) * bh + static_cast<std::size_t>(n) * hidden;
        for (int j = 0; j < hidden; ++j) {
          T ar = bih[static_cast<std::size_t>(j)] + bhh[static_cast<std::size_t>(j)];
          T az = bih[static_cast<std::size_t>(hidden + j)] + bhh[static_cast<std::size_t>(hidden + j)];
          T aq = bhh[static_cast<std::size_t>(2 * hidden + j)];
          T an_in = bih[static_cast<std::size_t>(2 * hidden + j)];
          const T* wr = &wih.at2(j, 0);
          const T* wz = &wih.at2(hidden + j, 0);
          const T* wn = &wih.at2(2 * hidden + j, 0);
          for (int i = 0; i < n_in; ++i) {
            ar += wr[i] * xt[i];
            az += wz[i] * xt[i];
            an_in += wn[i] * xt[i];
          }
          const T* ur = &whh.at2(j, 0);
          const T* uz = &whh.at2(hidden + j, 0);
          const T* un = &whh.at2(2 * hidden + j, 0);
          for (int i = 0; i < hidden; ++i) {
            ar += ur[i] * hprev[i];
            az += uz[i] * hprev[i];
            aq += un[i] * hprev[i];
          }
          const T rv = sigmoid(ar);
          const T zv = sigmoid(az);
          const T nv = std::tanh(an_in + rv * aq);
          r[base + j] = rv;
          z[base + j] = zv;
          q[base + j] = aq;
          cand[base + j] = nv;
          ht[j] = (T(1) - zv) * nv + zv * hprev[j];
        }
      }
    }

    NdArray<T> y({batch, hidden});
    for (int n = 0; n < batch; ++n) {
      const T* hT = &h[static_cast<std::size_t>(steps) * bh + static_cast<std::size_t>(n) * hidden];
      for (int j = 0; j < hidden; ++j) y.at2(n, j) = hT[j];
    }
    require_finite(y, "gru");

    const bool any = needs(x_id) || needs(wih_id) || needs(whh_id) || needs(bih_id) || needs(bhh_id);
    const int id = push(std::move(y), any, {});
    nodes_[id].backprop = [this, id, x_id, wih_id, whh_id, bih_id, bhh_id, batch, steps, n_in,
                           hidden, bh, r = std::move(r), z = std::move(z), cand = std::move(cand),
                           q = std::move(q), h = std::move(h)]() {
      const auto& gy = nodes_[id].grad;
      const auto& x = value(x_id);
      const auto& wih = value(wih_id);
      const auto& whh = value(whh_id);
      const bool want_x = needs(x_id);

      std::vector<T> dh(bh);
      for (int n = 0; n < batch; ++n) {
        for (int j = 0; j < hidden; ++j) {
          dh[static_cast<std::size_t>(n) * hidden + j] = gy.at2(n, j);
        }
      }
      std::vector<T> dh_next(bh, T(0));

      for (int t = steps - 1; t >= 0; --t) {
        std::fill(dh_next.begin(), dh_next.end(), T(0));
        for (int n = 0; n < batch; ++n) {
          const std::size_t base =
              static_cast<std::size_t>(t) * bh + static_cast<std::size_t>(n) * hidden;
          const T* hprev = &h[static_cast<std::size_t>(t) * bh + static_cast<std::size_t>(n) * hidden];
          const T* xt = &x.at3(n, t, 0);
          T* dhp = &dh_next[static_cast<std::size_t>(n) * hidden];
          for (int j = 0; j < hidden; ++j) {
            const T g = dh[static_cast<std::size_t>(n) * hidden + j];
            if (g == T(0)) continue;
            const T rv = r[base + j], zv = z[base + j], nv = cand[base + j], qv = q[base + j];
            const T dz = g * (hprev[j] - nv);
            const T dn = g * (T(1) - zv);
            dhp[j] += g * zv;
            const T dan = dn * (T(1) - nv * nv);  // pre-tanh
            const T dr = dan * qv;
            const T dq = dan * rv;
            const T daz = dz * zv * (T(1) - zv);
            const T dar = dr * rv * (T(1) - rv);

            if (needs(bih_id)) {
              auto& gb = nodes_[bih_id].grad;
              gb[static_cast<std::size_t>(j)] += dar;
              gb[static_cast<std::size_t>(hidden + j)] += daz;
              gb[static_cast<std::size_t>(2 * hidden + j)] += dan;
            }
            if (needs(bhh_id)) {
              auto& gb = nodes_[bhh_id].grad;
              gb[static_cast<std::size_t>(j)] += dar;
              gb[static_cast<std::size_t>(hidden + j)] += daz;
              gb[static_cast<std::size_t>(2 * hidden + j)] += dq;
            }
            if (needs(wih_id)) {
              auto& gw = nodes_[wih_id].grad;
              T* gr_ = &gw.at2(j, 0);
              T* gz_ = &gw.at2(hidden + j, 0);
              T* gn_ = &gw.at2(2 * hidden + j, 0);
              for (int i = 0; i < n_in; ++i) {
                gr_[i] += dar * xt[i];
                gz_[i] += daz * xt[i];
                gn_[i] += dan * xt[i];
              }
            }
            if (needs(whh_id)) {
              auto& gu = nodes_[whh_id].grad;
              T* gr_ = &gu.at2(j, 0);
              T* gz_ = &gu.at2(hidden + j, 0);
              T* gn_ = &gu.at2(2 * hidden + j, 0);
              for (int i = 0; i < hidden; ++i) {
                gr_[i] += dar * hprev[i];
                gz_[i] += daz * hprev[i];
                gn_[i] += dq * hprev[i];
              }
            }
            if (want_x) {
              T* gx = &nodes_[x_id].grad.at3(n, t, 0);
              const T* wr = &wih.at2(j, 0);
              const T* wz = &wih.at2(hidden + j, 0);
              const T* wn = &wih.at2(2 * hidden + j, 0);
              for (int i = 0; i < n_in; ++i) {
                gx[i] += dar * wr[i] + daz * wz[i] + dan * wn[i];
              }
            }
            {
              const T* ur = &whh.at2(j, 0);
              const T* uz = &whh.at2(hidden + j, 0);
              const T* un = &whh.at2(2 * hidden + j, 0);
              for (int i = 0; i < hidden; ++i) {
                dhp[i] += dar * ur[i] + daz * uz[i] + dq * un[i];
              }
            }
          }
        }
        std::swap(dh, dh_next);
      }
    };
    return id;
  }

  // ---- loss ------------------------------------------------------------

  // Mean binary cross entropy of softmax(logits[B,2]) against integer
  // labels; the softmax+loss composition keeps the gradient exact.
  int softmax_bce(int logits_id, std::vector<int> labels) {
    const auto& logits = value(logits_id);
    if (logits.rank() != 2 || logits.extent(1) != 2) {
      throw std::invalid_argument("softmax_bce: expected logits[B,2]");
    }
    const int batch = logits.extent(0);
    if (static_cast<int>(labels.size()) != batch) {
      throw std::invalid_argument("softmax_bce: label count mismatch");
    }
    NdArray<T> probs({batch, 2});
    T loss = T(0);
    for (int n = 0; n < batch; ++n) {
      const int y = labels[static_cast<std::size_t>(n)];
      if (y != 0 && y != 1) throw std::invalid_argument("softmax_bce: label outside {0,1}");
      const T a = logits.at2(n, 0), b = logits.at2(n, 1);
      const T m = std::max(a, b);
      const T ea = std::exp(a - m), eb = std::exp(b - m);
      const T sum = ea + eb;
      probs.at2(n, 0) = ea / sum;
      probs.at2(n, 1) = eb / sum;
      // -log p(true) in a numerically exact form.
      loss += -(((y == 0) ? (a - m) : (b - m)) - std::log(sum));
    }
    loss /= static_cast<T>(batch);
    NdArray<T> out({1});
    out[0] = loss;
    require_finite(out, "softmax_bce");
    const int id = push(std::move(out), needs(logits_id), {});
    nodes_[id].backprop = [this, id, logits_id, probs = std::move(probs),
                           labels = std::move(labels)]() {
      if (!needs(logits_id)) return;
      const T g = nodes_[id].grad[0];
      auto& gx = nodes_[logits_id].grad;
      const int batch = probs.extent(0);
      const T inv = g / static_cast<T>(batch);
      for (int n = 0; n < batch; ++n) {
        const int y = labels[static_cast<std::size_t>(n)];
        gx.at2(n, 0) += inv * (probs.at2(n, 0) - (y == 0 ? T(1) : T(0)));
        gx.at2(n, 1) += inv * (probs.at2(n, 1) - (y == 1 ? T(1) : T(0)));
      }
    };
    return id;
  }

  // ---- backward --------------------------------------------------------

  void backward(int loss_id) {
    auto& loss = nodes_[check(loss_id)];
    if (loss.value.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
    if (!loss.needs_grad) throw std::invalid_argument("backward: loss does not require grad");
    for (auto& node : nodes_) {
      if (node.needs_grad) {
        node.grad = NdArray<T>(node.value.shape());
      }
    }
    loss.grad[0] = T(1);
    for (int i = loss_id; i >= 0; --i) {
      if (nodes_[static_cast<std::size_t>(i)].backprop && nodes_[static_cast<std::size_t>(i)].needs_grad) {
        nodes_[static_cast<std::size_t>(i)].backprop();
      }
    }
  }

  static T sigmoid(T x) {
    if (x >= T(0)) {
      const T e = std::exp(-x);
      return T(1) / (T(1) + e);
    }
    const T e = std::exp(x);
    return e / (T(1) + e);
  }

 private:
  bool needs(int id) const { return nodes_[check(id)].needs_grad; }

  int push(NdArray<T> value, bool needs_grad, std::function<void()> backprop) {
    Node node;
    node.value = std::move(value);
    node.needs_grad = needs_grad;
    node.backprop = std::move(backprop);
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::size_t check(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
      throw std::out_of_range("graph: bad node id");
    }
    return static_cast<std::size_t>(id);
  }

  std::vector<Node> nodes_;
};

}  // namespace vocalis::nn
