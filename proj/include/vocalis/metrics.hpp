// Copyright 2026 Vocalis Authors
// Frame-level precision / recall / F-score.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>

#include "vocalis/vad.hpp"

namespace vocalis::eval {

struct ConfusionCounts {
  std::int64_t n_tp = 0;
  std::int64_t n_fp = 0;
  std::int64_t n_fn = 0;
  std::int64_t n_tn = 0;

  std::int64_t total() const { return n_tp + n_fp + n_fn + n_tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    n_tp += o.n_tp;
    n_fp += o.n_fp;
    n_fn += o.n_fn;
    n_tn += o.n_tn;
    return *this;
  }
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

// Exact frame counts; positive class = on (vocal). Throws on length mismatch.
ConfusionCounts score(const synth::FrameLabelTrack& pred, const synth::FrameLabelTrack& truth);

// P = tp/(tp+fp), R = tp/(tp+fn), F = 2PR/(P+R), with conventions for the
// zero denominators:
//   tp+fp = 0  ->  P := 1 if tp+fn = 0 else 0   (and symmetrically for R)
//   P+R  = 0  ->  F := 0, except the vacuous tp=fp=fn=0 case where F := 1.
Prf prf(const ConfusionCounts& c);

}  // namespace vocalis::eval
