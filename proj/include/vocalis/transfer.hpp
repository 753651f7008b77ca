// Copyright 2026 Vocalis Authors
// Layer-wise parameter transfer between the source CNN and target CRNN.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "vocalis/checkpoint.hpp"
#include "vocalis/model.hpp"

namespace vocalis::train {

enum class TransferMode { kFixed, kFineTune };

// Which conv layers receive the source parameters, and whether they stay
// frozen afterwards. An empty layer list means train from scratch.
struct TransferPlan {
  std::vector<int> layers;  // 0-based conv layer indices
  TransferMode mode = TransferMode::kFineTune;

  bool is_none() const { return layers.empty(); }
  std::string describe() const;  // "none", "l1:finetune", "all:fixed", ...

  // Accepts "l1" | "l2" | "l3" | "all" | "none" and "fixed" | "finetune".
  static TransferPlan parse(const std::string& layers_spec, const std::string& mode_spec,
                            int layer_count = 3);
};

// Copies W, V, b, c of the designated layers from the source checkpoint into
// the target model, bit-exactly; Fixed mode freezes exactly those arrays.
// All other target parameters keep their fresh initialization.
// Errors: unknown layer name; shape mismatch.
void apply_transfer(const nn::Checkpoint& source_ckpt, model::Detector& target,
                    const TransferPlan& plan);

}  // namespace vocalis::train
