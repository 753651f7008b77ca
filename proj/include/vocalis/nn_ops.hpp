// Copyright 2026 Vocalis Authors
// Standalone numeric ops with spec'd edge-case behavior.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <stdexcept>

#include "vocalis/ndarray.hpp"

namespace vocalis::nn {

// Row-wise softmax for two-unit logits[B,2]; rows are positive and sum to 1.
template <typename T>
NdArray<T> softmax2(const NdArray<T>& logits) {
  if (logits.rank() != 2 || logits.extent(1) != 2) {
    throw std::invalid_argument("softmax2: expected logits[B,2]");
  }
  if (!logits.all_finite()) throw std::invalid_argument("softmax2: non-finite logits");
  NdArray<T> probs(logits.shape());
  for (int n = 0; n < logits.extent(0); ++n) {
    const T a = logits.at2(n, 0), b = logits.at2(n, 1);
    const T m = std::max(a, b);
    const T ea = std::exp(a - m), eb = std::exp(b - m);
    const T sum = ea + eb;
    probs.at2(n, 0) = ea / sum;
    probs.at2(n, 1) = eb / sum;
  }
  return probs;
}

// Mean of -log p(true class) over the batch. probs[B,2] rows must sum to 1;
// labels are one-hot rows. p(true) is clamped below to keep the loss finite.
template <typename T>
T bce_loss(const NdArray<T>& probs, const NdArray<T>& onehot, T floor = static_cast<T>(1e-12)) {
  if (!probs.same_shape(onehot) || probs.rank() != 2 || probs.extent(1) != 2) {
    throw std::invalid_argument("bce_loss: expected probs[B,2] and matching one-hot labels");
  }
  T loss = T(0);
  for (int n = 0; n < probs.extent(0); ++n) {
    const T y0 = onehot.at2(n, 0), y1 = onehot.at2(n, 1);
    if (!((y0 == T(0) && y1 == T(1)) || (y0 == T(1) && y1 == T(0)))) {
      throw std::invalid_argument("bce_loss: label outside {0,1} one-hot rows");
    }
    const T p = (y1 == T(1)) ? probs.at2(n, 1) : probs.at2(n, 0);
    loss += -std::log(std::max(p, floor));
  }
  return loss / static_cast<T>(probs.extent(0));
}

// Frame decision: class 1 ("on") wins only with strictly larger probability;
// an exact tie resolves to off.
template <typename T>
int decide(T p_off, T p_on) {
  return p_on > p_off ? 1 : 0;
}

}  // namespace vocalis::nn
