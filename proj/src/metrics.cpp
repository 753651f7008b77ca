// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/metrics.hpp"

#include <stdexcept>

namespace vocalis::eval {

ConfusionCounts score(const synth::FrameLabelTrack& pred, const synth::FrameLabelTrack& truth) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("score: prediction and truth lengths differ");
  }
  ConfusionCounts c;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const bool p = pred.on(t);
    const bool y = truth.on(t);
    if (p && y) ++c.n_tp;
    else if (p && !y) ++c.n_fp;
    else if (!p && y) ++c.n_fn;
    else ++c.n_tn;
  }
  return c;
}

Prf prf(const ConfusionCounts& c) {
  Prf out;
  const bool vacuous = (c.n_tp == 0 && c.n_fp == 0 && c.n_fn == 0);
  if (c.n_tp + c.n_fp == 0) {
    out.precision = (c.n_tp + c.n_fn == 0) ? 1.0 : 0.0;
  } else {
    out.precision = static_cast<double>(c.n_tp) / static_cast<double>(c.n_tp + c.n_fp);
  }
  if (c.n_tp + c.n_fn == 0) {
    out.recall = (c.n_tp + c.n_fp == 0) ? 1.0 : 0.0;
  } else {
    out.recall = static_cast<double>(c.n_tp) / static_cast<double>(c.n_tp + c.n_fn);
  }
  if (out.precision + out.recall == 0.0) {
    out.f_score = vacuous ? 1.0 : 0.0;
  } else {
    out.f_score = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

}  // namespace vocalis::eval
