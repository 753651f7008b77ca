// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "vocalis/nn_ops.hpp"

namespace vocalis::model {

void ModelConfig::validate() const {
  if (channels.size() != kernels.size() || channels.size() != pools.size() || channels.empty()) {
    throw std::invalid_argument("model config: channels/kernels/pools must have equal nonzero length");
  }
  if (block_length < 1 || block_length % 2 == 0) {
    throw std::invalid_argument("model config: block length must be odd");
  }
  int f = mel_bands;
  for (std::size_t i = 0; i < pools.size(); ++i) {
    if (pools[i] < 1) throw std::invalid_argument("model config: pool extent < 1");
    f = (f + pools[i] - 1) / pools[i];
  }
  if (f != 1) {
    throw std::invalid_argument("model config: pooling must reduce the frequency extent to 1");
  }
  if (hidden < 1) throw std::invalid_argument("model config: hidden size < 1");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("model config: dropout outside [0,1)");
}

void gather_block(const dsp::LogMelSpectrogram& spec, int center, int block_length, float* out) {
  const int radius = (block_length - 1) / 2;
  for (int k = 0; k < block_length; ++k) {
    int t = center - radius + k;
    t = std::clamp(t, 0, spec.frames - 1);  // replicate padding at the edges
    const double* row = spec.row(t);
    float* dst = out + static_cast<std::size_t>(k) * spec.bands;
    for (int m = 0; m < spec.bands; ++m) dst[m] = static_cast<float>(row[m]);
  }
}

std::vector<Block> make_blocks(const dsp::LogMelSpectrogram& spec,
                               const synth::FrameLabelTrack& labels, const ContextConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(labels.size()) != spec.frames) {
    throw std::invalid_argument("make_blocks: label track not aligned with spectrogram");
  }
  std::vector<Block> blocks;
  blocks.reserve(static_cast<std::size_t>(spec.frames));
  for (int t = 0; t < spec.frames; ++t) {
    Block b;
    b.values = NdArray<float>({cfg.block_length, spec.bands});
    gather_block(spec, t, cfg.block_length, b.values.data());
    b.label = labels.labels[static_cast<std::size_t>(t)];
    blocks.push_back(std::move(b));
  }
  return blocks;
}

ConvStack::ConvStack(const ModelConfig& cfg, Rng& rng) {
  int in_ch = 1;
  for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
    const std::string prefix = "conv" + std::to_string(i + 1);
    blocks_.emplace_back(prefix, cfg.channels[i], in_ch, cfg.kernels[i].first,
                         cfg.kernels[i].second, cfg.pools[i], FreqPad::kSame, cfg.batch_norm,
                         rng);
    in_ch = cfg.channels[i];
  }
}

int ConvStack::forward(Graph<float>& g, int x, bool training, int up_to_layer,
                       bool include_pool_of_last) {
  const int last = (up_to_layer < 0) ? layer_count() - 1 : up_to_layer;
  if (last < 0 || last >= layer_count()) throw std::invalid_argument("conv stack: bad layer index");
  int y = x;
  for (int i = 0; i <= last; ++i) {
    const bool pool = (i < last) || include_pool_of_last;
    y = blocks_[static_cast<std::size_t>(i)].forward(g, y, training, pool);
  }
  return y;
}

int ConvStack::forward_eval(Graph<float>& g, int x, int up_to_layer) const {
  const int last = (up_to_layer < 0) ? layer_count() - 1 : up_to_layer;
  if (last < 0 || last >= layer_count()) throw std::invalid_argument("conv stack: bad layer index");
  int y = x;
  for (int i = 0; i <= last; ++i) y = blocks_[static_cast<std::size_t>(i)].forward_eval(g, y);
  return y;
}

int ConvStack::forward_filter_map(Graph<float>& g, int x, int layer) const {
  if (layer < 0 || layer >= layer_count()) throw std::invalid_argument("conv stack: bad layer index");
  int y = x;
  for (int i = 0; i < layer; ++i) y = blocks_[static_cast<std::size_t>(i)].forward_eval(g, y);
  return blocks_[static_cast<std::size_t>(layer)].forward_raw(g, y);
}

void ConvStack::accumulate_grads(const Graph<float>& g, int up_to_layer) {
  const int last = (up_to_layer < 0) ? layer_count() - 1 : up_to_layer;
  for (int i = 0; i <= last; ++i) blocks_[static_cast<std::size_t>(i)].accumulate_grads(g);
}

std::vector<Parameter<float>*> ConvStack::parameters() {
  std::vector<Parameter<float>*> out;
  for (auto& b : blocks_) {
    for (auto* p : b.parameters()) out.push_back(p);
  }
  return out;
}

namespace {

NdArray<float> dropout_mask(const std::vector<int>& shape, double rate, Rng& rng) {
  NdArray<float> mask(shape);
  const float keep_scale = static_cast<float>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = (rng.uniform() < rate) ? 0.0f : keep_scale;
  }
  return mask;
}

}  // namespace

NdArray<float> Detector::predict_probs(const NdArray<float>& blocks) {
  Graph<float> g;
  const int x = g.leaf(blocks, false);
  const int logits = forward_logits(g, x, /*training=*/false, nullptr);
  return nn::softmax2(g.value(logits));
}

std::size_t Detector::trainable_parameter_count() {
  std::size_t n = 0;
  for (const auto* p : parameters()) {
    if (p->trainable && !p->frozen) n += p->value.size();
  }
  return n;
}

Checkpoint Detector::to_checkpoint() {
  Checkpoint ckpt;
  put_model_meta(ckpt, kind(), cfg_);
  for (const auto* p : parameters()) ckpt.put(p->name, p->value);
  return ckpt;
}

void Detector::load_parameters(const Checkpoint& ckpt) {
  for (auto* p : parameters()) {
    const auto& stored = ckpt.get(p->name);
    if (stored.shape() != p->value.shape()) {
      throw std::runtime_error("checkpoint/config mismatch for parameter " + p->name +
                               ": stored " + stored.shape_str() + ", model " +
                               p->value.shape_str());
    }
    p->value = stored;
  }
}

SourceCnn::SourceCnn(const ModelConfig& cfg, Rng& rng)
    : Detector(cfg, rng), head_("head", 2, cfg.channels.back(), rng) {}

int SourceCnn::forward_logits(Graph<float>& g, int x, bool training, Rng* dropout_rng) {
  int y = stack_.forward(g, x, training);
  y = g.mean_time_freq(y);  // temporal average pooling over the block
  if (training && cfg_.dropout > 0.0 && dropout_rng != nullptr) {
    y = g.mul_mask(y, dropout_mask(g.value(y).shape(), cfg_.dropout, *dropout_rng));
  }
  return head_.forward(g, y);
}

void SourceCnn::accumulate_grads(const Graph<float>& g) {
  stack_.accumulate_grads(g);
  head_.accumulate_grads(g);
}

std::vector<Parameter<float>*> SourceCnn::parameters() {
  auto out = stack_.parameters();
  for (auto* p : head_.parameters()) out.push_back(p);
  return out;
}

TargetCrnn::TargetCrnn(const ModelConfig& cfg, Rng& rng)
    : Detector(cfg, rng),
      recurrent_("rnn", cfg.hidden, cfg.channels.back(), rng),
      head_("head", 2, cfg.hidden, rng) {}

int TargetCrnn::forward_logits(Graph<float>& g, int x, bool training, Rng* dropout_rng) {
  int y = stack_.forward(g, x, training);
  y = g.to_sequence(y);  // [B, T, C]: freq pooled to 1, channels as features
  y = recurrent_.forward(g, y);
  if (training && cfg_.dropout > 0.0 && dropout_rng != nullptr) {
    y = g.mul_mask(y, dropout_mask(g.value(y).shape(), cfg_.dropout, *dropout_rng));
  }
  return head_.forward(g, y);
}

void TargetCrnn::accumulate_grads(const Graph<float>& g) {
  stack_.accumulate_grads(g);
  recurrent_.accumulate_grads(g);
  head_.accumulate_grads(g);
}

std::vector<Parameter<float>*> TargetCrnn::parameters() {
  auto out = stack_.parameters();
  for (auto* p : recurrent_.parameters()) out.push_back(p);
  for (auto* p : head_.parameters()) out.push_back(p);
  return out;
}

void put_model_meta(Checkpoint& ckpt, ModelKind kind, const ModelConfig& cfg) {
  ckpt.put_scalar("meta.kind", kind == ModelKind::kSourceCnn ? 0.0f : 1.0f);
  ckpt.put_scalar("meta.block_length", static_cast<float>(cfg.block_length));
  ckpt.put_scalar("meta.mel_bands", static_cast<float>(cfg.mel_bands));
  ckpt.put_scalar("meta.hidden", static_cast<float>(cfg.hidden));
  ckpt.put_scalar("meta.dropout", static_cast<float>(cfg.dropout));
  ckpt.put_scalar("meta.batch_norm", cfg.batch_norm ? 1.0f : 0.0f);
  const int n = static_cast<int>(cfg.channels.size());
  NdArray<float> channels({n}), pools({n}), kernels({n, 2});
  for (int i = 0; i < n; ++i) {
    channels[static_cast<std::size_t>(i)] = static_cast<float>(cfg.channels[i]);
    pools[static_cast<std::size_t>(i)] = static_cast<float>(cfg.pools[i]);
    kernels.at2(i, 0) = static_cast<float>(cfg.kernels[i].first);
    kernels.at2(i, 1) = static_cast<float>(cfg.kernels[i].second);
  }
  ckpt.put("meta.channels", std::move(channels));
  ckpt.put("meta.pools", std::move(pools));
  ckpt.put("meta.kernels", std::move(kernels));
}

ModelConfig model_meta_config(const Checkpoint& ckpt) {
  ModelConfig cfg;
  cfg.block_length = static_cast<int>(ckpt.get_scalar("meta.block_length"));
  cfg.mel_bands = static_cast<int>(ckpt.get_scalar("meta.mel_bands"));
  cfg.hidden = static_cast<int>(ckpt.get_scalar("meta.hidden"));
  cfg.dropout = ckpt.get_scalar("meta.dropout");
  cfg.batch_norm = ckpt.get_scalar("meta.batch_norm") != 0.0f;
  const auto& channels = ckpt.get("meta.channels");
  const auto& pools = ckpt.get("meta.pools");
  const auto& kernels = ckpt.get("meta.kernels");
  cfg.channels.clear();
  cfg.pools.clear();
  cfg.kernels.clear();
  for (int i = 0; i < channels.extent(0); ++i) {
    cfg.channels.push_back(static_cast<int>(channels[static_cast<std::size_t>(i)]));
    cfg.pools.push_back(static_cast<int>(pools[static_cast<std::size_t>(i)]));
    cfg.kernels.emplace_back(static_cast<int>(kernels.at2(i, 0)),
                             static_cast<int>(kernels.at2(i, 1)));
  }
  return cfg;
}

ModelKind model_meta_kind(const Checkpoint& ckpt) {
  return ckpt.get_scalar("meta.kind") == 0.0f ? ModelKind::kSourceCnn : ModelKind::kTargetCrnn;
}

std::unique_ptr<Detector> detector_from_checkpoint(const Checkpoint& ckpt) {
  const ModelConfig cfg = model_meta_config(ckpt);
  Rng rng(0);  // weights are overwritten immediately
  std::unique_ptr<Detector> model;
  if (model_meta_kind(ckpt) == ModelKind::kSourceCnn) {
    model = std::make_unique<SourceCnn>(cfg, rng);
  } else {
    model = std::make_unique<TargetCrnn>(cfg, rng);
  }
  model->load_parameters(ckpt);
  return model;
}

}  // namespace vocalis::model
