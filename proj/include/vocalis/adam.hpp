// Copyright 2026 Vocalis Authors
// Adam with bias correction.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vocalis/layers.hpp"
#include "vocalis/ndarray.hpp"

namespace vocalis::nn {

template <typename T>
struct AdamConfig {
  T learning_rate = static_cast<T>(1e-3);
  T beta1 = static_cast<T>(0.9);
  T beta2 = static_cast<T>(0.999);
  T epsilon = static_cast<T>(1e-8);
};

// Moments are kept per parameter, matched by list position. Frozen and
// non-trainable parameters are excluded entirely, so they stay bit-identical
// over any number of steps.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamConfig<T> cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  void step() {
    ++step_count_;
    const T bc1 = T(1) - std::pow(cfg_.beta1, static_cast<T>(step_count_));
    const T bc2 = T(1) - std::pow(cfg_.beta2, static_cast<T>(step_count_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Parameter<T>& p = *params_[k];
      if (p.frozen || !p.trainable) continue;
      if (!p.grad.all_finite()) {
        throw std::runtime_error("non-finite gradient for parameter " + p.name);
      }
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const T g = p.grad[i];
        m[i] = cfg_.beta1 * m[i] + (T(1) - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (T(1) - cfg_.beta2) * g * g;
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        p.value[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    }
  }

  long step_count() const { return step_count_; }
  const AdamConfig<T>& config() const { return cfg_; }
  const std::vector<Parameter<T>*>& params() const { return params_; }
  const NdArray<T>& first_moment(std::size_t k) const { return m_[k]; }
  const NdArray<T>& second_moment(std::size_t k) const { return v_[k]; }
  NdArray<T>& first_moment(std::size_t k) { return m_[k]; }
  NdArray<T>& second_moment(std::size_t k) { return v_[k]; }
  void set_step_count(long n) { step_count_ = n; }

 private:
  std::vector<Parameter<T>*> params_;
  AdamConfig<T> cfg_;
  std::vector<NdArray<T>> m_;
  std::vector<NdArray<T>> v_;
  long step_count_ = 0;
};

}  // namespace vocalis::nn
