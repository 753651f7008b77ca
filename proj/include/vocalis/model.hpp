// Copyright 2026 Vocalis Authors
// The two detectors: a GLU-CNN for speech activity (source task) and a
// GLU-CRNN for singing voice (target task), sharing one conv trunk.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vocalis/adam.hpp"
#include "vocalis/checkpoint.hpp"
#include "vocalis/graph.hpp"
#include "vocalis/layers.hpp"
#include "vocalis/melspec.hpp"
#include "vocalis/vad.hpp"

namespace vocalis::model {

using nn::Checkpoint;
using nn::FreqPad;
using nn::Graph;
using nn::NdArray;
using nn::Parameter;

struct ContextConfig {
  int block_length = 25;  // T = 2L + 1, odd
  int radius() const { return (block_length - 1) / 2; }
  void validate() const {
    if (block_length < 1 || block_length % 2 == 0) {
      throw std::invalid_argument("context block length must be odd and >= 1");
    }
  }
};

struct ModelConfig {
  std::vector<int> channels = {16, 16, 16};
  std::vector<std::pair<int, int>> kernels = {{3, 3}, {3, 3}, {3, 3}};
  std::vector<int> pools = {4, 4, 4};
  int mel_bands = 64;
  int block_length = 25;
  int hidden = 32;  // recurrent readout width (target model)
  double dropout = 0.2;
  bool batch_norm = true;

  void validate() const;
};

// One training/inference example: a T x mel context block and the label of
// its center frame.
struct Block {
  NdArray<float> values;  // [T, mel]
  std::uint8_t label = 0;
};

// Exactly one block per frame; edges are replicate-padded; block t is
// centered on frame t.
std::vector<Block> make_blocks(const dsp::LogMelSpectrogram& spec,
                               const synth::FrameLabelTrack& labels, const ContextConfig& cfg);

// Copies the (replicate-padded) rows of block `center` into out[T * mel].
void gather_block(const dsp::LogMelSpectrogram& spec, int center, int block_length, float* out);

// Shared convolutional trunk: GLU conv blocks with batch norm and
// frequency-only pooling. Time extent is preserved throughout.
class ConvStack {
 public:
  ConvStack() = default;
  ConvStack(const ModelConfig& cfg, Rng& rng);

  // Runs the trunk. up_to_layer = -1 runs all layers. include_pool_of_last
  // controls whether the final layer's pooling is applied (the filter
  // visualization objective wants the raw GLU map).
  int forward(Graph<float>& g, int x, bool training, int up_to_layer = -1,
              bool include_pool_of_last = true);

  // Inference path for feature export: full blocks through `up_to_layer`,
  // with no gradients into the parameters.
  int forward_eval(Graph<float>& g, int x, int up_to_layer = -1) const;

  // Visualization objective path: full inference blocks before `layer`, then
  // that layer's bare GLU response (no normalization or pooling).
  int forward_filter_map(Graph<float>& g, int x, int layer) const;

  void accumulate_grads(const Graph<float>& g, int up_to_layer = -1);
  std::vector<Parameter<float>*> parameters();
  nn::GluConvBlock<float>& layer(int i) { return blocks_.at(static_cast<std::size_t>(i)); }
  const nn::GluConvBlock<float>& layer(int i) const { return blocks_.at(static_cast<std::size_t>(i)); }
  int layer_count() const { return static_cast<int>(blocks_.size()); }

 private:
  std::vector<nn::GluConvBlock<float>> blocks_;
};

enum class ModelKind { kSourceCnn, kTargetCrnn };

// Base of both detectors: trunk + classifier head over two logits.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual ModelKind kind() const = 0;

  // Builds the graph for a batch x[B,1,T,mel]; returns the logits node.
  // Dropout is applied only when training (mask drawn from dropout_rng).
  virtual int forward_logits(Graph<float>& g, int x, bool training, Rng* dropout_rng) = 0;
  virtual void accumulate_grads(const Graph<float>& g) = 0;
  virtual std::vector<Parameter<float>*> parameters() = 0;

  const ModelConfig& config() const { return cfg_; }
  ConvStack& conv_stack() { return stack_; }
  const ConvStack& conv_stack() const { return stack_; }

  // Batch inference: blocks[B,1,T,mel] -> probabilities [B,2] (eval mode).
  NdArray<float> predict_probs(const NdArray<float>& blocks);

  // Trainable = optimizable and not frozen; the count Table-style reports use.
  std::size_t trainable_parameter_count();

  Checkpoint to_checkpoint();
  void load_parameters(const Checkpoint& ckpt);

 protected:
  Detector(ModelConfig cfg, Rng& rng) : cfg_(std::move(cfg)), stack_(cfg_, rng) {
    cfg_.validate();
  }

  ModelConfig cfg_;
  ConvStack stack_;
};

// Source task: conv trunk, temporal average pooling, dense head, 2 logits.
class SourceCnn : public Detector {
 public:
  SourceCnn(const ModelConfig& cfg, Rng& rng);
  ModelKind kind() const override { return ModelKind::kSourceCnn; }
  int forward_logits(Graph<float>& g, int x, bool training, Rng* dropout_rng) override;
  void accumulate_grads(const Graph<float>& g) override;
  std::vector<Parameter<float>*> parameters() override;

 private:
  nn::DenseLayer<float> head_;
};

// Target task: same trunk, recurrent readout over the block's time axis
// (final hidden state), dense head, 2 logits.
class TargetCrnn : public Detector {
 public:
  TargetCrnn(const ModelConfig& cfg, Rng& rng);
  ModelKind kind() const override { return ModelKind::kTargetCrnn; }
  int forward_logits(Graph<float>& g, int x, bool training, Rng* dropout_rng) override;
  void accumulate_grads(const Graph<float>& g) override;
  std::vector<Parameter<float>*> parameters() override;

  nn::GruLayer<float>& recurrent() { return recurrent_; }

 private:
  nn::GruLayer<float> recurrent_;
  nn::DenseLayer<float> head_;
};

// Builds the right detector from checkpoint metadata and loads its weights.
std::unique_ptr<Detector> detector_from_checkpoint(const Checkpoint& ckpt);

// Config embedded in checkpoints under meta.* arrays.
void put_model_meta(Checkpoint& ckpt, ModelKind kind, const ModelConfig& cfg);
ModelConfig model_meta_config(const Checkpoint& ckpt);
ModelKind model_meta_kind(const Checkpoint& ckpt);

}  // namespace vocalis::model
