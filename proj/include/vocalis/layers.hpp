// Copyright 2026 Vocalis Authors
// Named parameters and the layer blocks shared by both detector models.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "vocalis/graph.hpp"
#include "vocalis/ndarray.hpp"
#include "vocalis/rng.hpp"

namespace vocalis::nn {

// A trainable array. `frozen` parameters receive no gradient and are skipped
// by the optimizer; `trainable=false` marks buffers (running stats) that are
// checkpointed but never optimized.
template <typename T>
struct Parameter {
  std::string name;
  NdArray<T> value;
  NdArray<T> grad;
  bool frozen = false;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, NdArray<T> v, bool is_trainable = true)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()), trainable(is_trainable) {}

  void zero_grad() { grad.fill(T(0)); }
};

// Uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename T>
void init_fan_in(NdArray<T>& w, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<T>(rng.uniform(-bound, bound));
  }
}

// One GLU convolution block: Y = (W*X + b) (.) sigmoid(V*X + c), followed by
// per-channel batch normalization and max pooling over frequency.
template <typename T>
struct GluConvBlock {
  Parameter<T> w, v, b, c;
  Parameter<T> bn_gamma, bn_beta;
  Parameter<T> bn_mean, bn_var;  // running stats (buffers)
  int pool_f = 1;
  FreqPad fpad = FreqPad::kSame;
  T bn_eps = static_cast<T>(1e-5);
  T bn_momentum = static_cast<T>(0.1);
  bool use_batch_norm = true;

  GluConvBlock() = default;

  GluConvBlock(const std::string& prefix, int out_ch, int in_ch, int kt, int kf, int pool,
               FreqPad pad, bool batch_norm, Rng& rng)
      : pool_f(pool), fpad(pad), use_batch_norm(batch_norm) {
    w = Parameter<T>(prefix + ".w", NdArray<T>({out_ch, in_ch, kt, kf}));
    v = Parameter<T>(prefix + ".v", NdArray<T>({out_ch, in_ch, kt, kf}));
    b = Parameter<T>(prefix + ".b", NdArray<T>({out_ch}));
    c = Parameter<T>(prefix + ".c", NdArray<T>({out_ch}));
    const int fan_in = in_ch * kt * kf;
    init_fan_in(w.value, fan_in, rng);
    init_fan_in(v.value, fan_in, rng);
    init_fan_in(b.value, fan_in, rng);
    init_fan_in(c.value, fan_in, rng);
    bn_gamma = Parameter<T>(prefix + ".bn.gamma", NdArray<T>({out_ch}, T(1)));
    bn_beta = Parameter<T>(prefix + ".bn.beta", NdArray<T>({out_ch}));
    bn_mean = Parameter<T>(prefix + ".bn.running_mean", NdArray<T>({out_ch}), false);
    bn_var = Parameter<T>(prefix + ".bn.running_var", NdArray<T>({out_ch}, T(1)), false);
  }

  // Forward through conv + gate (+ batch norm) (+ frequency pooling).
  // In training mode the running stats are updated in place.
  int forward(Graph<T>& g, int x, bool training, bool apply_pool = true) {
    const int wi = g.leaf(w.value, !w.frozen);
    const int vi = g.leaf(v.value, !v.frozen);
    const int bi = g.leaf(b.value, !b.frozen);
    const int ci = g.leaf(c.value, !c.frozen);
    leaf_ids_ = {wi, vi, bi, ci};
    const int lin = g.conv2d(x, wi, bi, fpad);
    const int gate = g.conv2d(x, vi, ci, fpad);
    int y = g.glu_gate(lin, gate);
    if (use_batch_norm) {
      const int gi = g.leaf(bn_gamma.value, !bn_gamma.frozen);
      const int be = g.leaf(bn_beta.value, !bn_beta.frozen);
      bn_leaf_ids_ = {gi, be};
      if (training) {
        std::vector<T> mean, var;
        y = g.batch_norm_train(y, gi, be, bn_eps, &mean, &var);
        for (std::size_t i = 0; i < mean.size(); ++i) {
          bn_mean.value[i] = (T(1) - bn_momentum) * bn_mean.value[i] + bn_momentum * mean[i];
          bn_var.value[i] = (T(1) - bn_momentum) * bn_var.value[i] + bn_momentum * var[i];
        }
      } else {
        y = g.batch_norm_eval(y, gi, be, bn_mean.value.flat(), bn_var.value.flat(), bn_eps);
      }
    }
    if (apply_pool && pool_f > 1) y = g.max_pool_freq(y, pool_f);
    return y;
  }

  // The bare filter response Y = (W*X+b) (.) sigmoid(V*X+c), with no
  // normalization or pooling; the visualization objective.
  int forward_raw(Graph<T>& g, int x) const {
    const int wi = g.leaf(w.value, false);
    const int vi = g.leaf(v.value, false);
    const int bi = g.leaf(b.value, false);
    const int ci = g.leaf(c.value, false);
    const int lin = g.conv2d(x, wi, bi, fpad);
    const int gate = g.conv2d(x, vi, ci, fpad);
    return g.glu_gate(lin, gate);
  }

  // Inference-mode block (running stats, no grad into parameters).
  int forward_eval(Graph<T>& g, int x, bool apply_pool = true) const {
    const int wi = g.leaf(w.value, false);
    const int vi = g.leaf(v.value, false);
    const int bi = g.leaf(b.value, false);
    const int ci = g.leaf(c.value, false);
    const int lin = g.conv2d(x, wi, bi, fpad);
    const int gate = g.conv2d(x, vi, ci, fpad);
    int y = g.glu_gate(lin, gate);
    if (use_batch_norm) {
      const int gi = g.leaf(bn_gamma.value, false);
      const int be = g.leaf(bn_beta.value, false);
      y = g.batch_norm_eval(y, gi, be, bn_mean.value.flat(), bn_var.value.flat(), bn_eps);
    }
    if (apply_pool && pool_f > 1) y = g.max_pool_freq(y, pool_f);
    return y;
  }

  // Pull gradients of the most recent forward back into the parameters.
  void accumulate_grads(const Graph<T>& g) {
    accumulate_one(g, w, leaf_ids_[0]);
    accumulate_one(g, v, leaf_ids_[1]);
    accumulate_one(g, b, leaf_ids_[2]);
    accumulate_one(g, c, leaf_ids_[3]);
    if (use_batch_norm) {
      accumulate_one(g, bn_gamma, bn_leaf_ids_[0]);
      accumulate_one(g, bn_beta, bn_leaf_ids_[1]);
    }
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out{&w, &v, &b, &c};
    if (use_batch_norm) {
      out.push_back(&bn_gamma);
      out.push_back(&bn_beta);
      out.push_back(&bn_mean);
      out.push_back(&bn_var);
    }
    return out;
  }

  // The conv weights and biases; the unit of transfer and freezing.
  std::vector<Parameter<T>*> transferable() { return {&w, &v, &b, &c}; }

  void set_frozen(bool frozen) {
    w.frozen = v.frozen = b.frozen = c.frozen = frozen;
  }

 private:
  static void accumulate_one(const Graph<T>& g, Parameter<T>& p, int id) {
    if (p.frozen) return;  // frozen parameters keep an exactly-zero grad buffer
    const auto& grad = g.grad(id);
    for (std::size_t i = 0; i < grad.size(); ++i) p.grad[i] += grad[i];
  }

  std::vector<int> leaf_ids_;
  std::vector<int> bn_leaf_ids_;
};

template <typename T>
struct DenseLayer {
  Parameter<T> w, b;

  DenseLayer() = default;
  DenseLayer(const std::string& prefix, int out, int in, Rng& rng) {
    w = Parameter<T>(prefix + ".w", NdArray<T>({out, in}));
    b = Parameter<T>(prefix + ".b", NdArray<T>({out}));
    init_fan_in(w.value, in, rng);
    init_fan_in(b.value, in, rng);
  }

  int forward(Graph<T>& g, int x) {
    const int wi = g.leaf(w.value, !w.frozen);
    const int bi = g.leaf(b.value, !b.frozen);
    leaf_ids_ = {wi, bi};
    return g.dense(x, wi, bi);
  }

  void accumulate_grads(const Graph<T>& g) {
    if (!w.frozen) {
      const auto& gw = g.grad(leaf_ids_[0]);
      for (std::size_t i = 0; i < gw.size(); ++i) w.grad[i] += gw[i];
    }
    if (!b.frozen) {
      const auto& gb = g.grad(leaf_ids_[1]);
      for (std::size_t i = 0; i < gb.size(); ++i) b.grad[i] += gb[i];
    }
  }

  std::vector<Parameter<T>*> parameters() { return {&w, &b}; }

 private:
  std::vector<int> leaf_ids_;
};

template <typename T>
struct GruLayer {
  Parameter<T> wih, whh, bih, bhh;
  int hidden = 0;

  GruLayer() = default;
  GruLayer(const std::string& prefix, int hidden_size, int in, Rng& rng) : hidden(hidden_size) {
    wih = Parameter<T>(prefix + ".wih", NdArray<T>({3 * hidden_size, in}));
    whh = Parameter<T>(prefix + ".whh", NdArray<T>({3 * hidden_size, hidden_size}));
    bih = Parameter<T>(prefix + ".bih", NdArray<T>({3 * hidden_size}));
    bhh = Parameter<T>(prefix + ".bhh", NdArray<T>({3 * hidden_size}));
    init_fan_in(wih.value, in, rng);
    init_fan_in(whh.value, hidden_size, rng);
    init_fan_in(bih.value, hidden_size, rng);
    init_fan_in(bhh.value, hidden_size, rng);
  }

  int forward(Graph<T>& g, int x_seq) {
    const int a = g.leaf(wih.value, !wih.frozen);
    const int b = g.leaf(whh.value, !whh.frozen);
    const int c = g.leaf(bih.value, !bih.frozen);
    const int d = g.leaf(bhh.value, !bhh.frozen);
    leaf_ids_ = {a, b, c, d};
    return g.gru(x_seq, a, b, c, d);
  }

  void accumulate_grads(const Graph<T>& g) {
    Parameter<T>* ps[4] = {&wih, &whh, &bih, &bhh};
    for (int k = 0; k < 4; ++k) {
      if (ps[k]->frozen) continue;
      const auto& grad = g.grad(leaf_ids_[static_cast<std::size_t>(k)]);
      for (std::size_t i = 0; i < grad.size(); ++i) ps[k]->grad[i] += grad[i];
    }
  }

  std::vector<Parameter<T>*> parameters() { return {&wih, &whh, &bih, &bhh}; }

 private:
  std::vector<int> leaf_ids_;
};

}  // namespace vocalis::nn
