// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/transfer.hpp"

#include <algorithm>
#include <stdexcept>

namespace vocalis::train {

std::string TransferPlan::describe() const {
  if (is_none()) return "none";
  std::string out;
  if (static_cast<int>(layers.size()) > 1 &&
      layers.size() == static_cast<std::size_t>(*std::max_element(layers.begin(), layers.end())) + 1) {
    out = "all";
  } else {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (i) out += '+';
      out += 'l' + std::to_string(layers[i] + 1);
    }
  }
  out += ':';
  out += (mode == TransferMode::kFixed) ? "fixed" : "finetune";
  return out;
}

TransferPlan TransferPlan::parse(const std::string& layers_spec, const std::string& mode_spec,
                                 int layer_count) {
  TransferPlan plan;
  if (mode_spec == "fixed") {
    plan.mode = TransferMode::kFixed;
  } else if (mode_spec == "finetune") {
    plan.mode = TransferMode::kFineTune;
  } else {
    throw std::runtime_error("unknown transfer mode: " + mode_spec + " (want fixed|finetune)");
  }
  if (layers_spec == "none") return plan;
  if (layers_spec == "all") {
    for (int i = 0; i < layer_count; ++i) plan.layers.push_back(i);
    return plan;
  }
  if (layers_spec.size() == 2 && layers_spec[0] == 'l' && layers_spec[1] >= '1' &&
      layers_spec[1] < '1' + layer_count) {
    plan.layers.push_back(layers_spec[1] - '1');
    return plan;
  }
  throw std::runtime_error("unknown transfer layer: " + layers_spec + " (want l1|l2|l3|all|none)");
}

void apply_transfer(const nn::Checkpoint& source_ckpt, model::Detector& target,
                    const TransferPlan& plan) {
  auto& stack = target.conv_stack();
  for (int layer : plan.layers) {
    if (layer < 0 || layer >= stack.layer_count()) {
      throw std::runtime_error("unknown layer name: L" + std::to_string(layer + 1));
    }
    auto& block = stack.layer(layer);
    for (auto* p : block.transferable()) {
      const auto& source = source_ckpt.get(p->name);
      if (source.shape() != p->value.shape()) {
        throw std::runtime_error("transfer shape mismatch for " + p->name + ": source " +
                                 source.shape_str() + ", target " + p->value.shape_str());
      }
      p->value = source;
    }
    block.set_frozen(plan.mode == TransferMode::kFixed);
  }
}

}  // namespace vocalis::train
