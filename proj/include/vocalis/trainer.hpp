// Copyright 2026 Vocalis Authors
// Training loops for the source CNN and target CRNN, with early stopping on
// validation F-score and best-epoch checkpointing.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vocalis/manifest.hpp"
#include "vocalis/metrics.hpp"
#include "vocalis/model.hpp"
#include "vocalis/transfer.hpp"

namespace vocalis::train {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 64;
  int max_epochs = 20;
  int patience = 5;  // epochs without validation-F improvement
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_precision = 0.0;
  double val_recall = 0.0;
  double val_f = 0.0;
  double seconds = 0.0;  // wall clock, excluded from determinism comparisons
};

struct RunRecord {
  std::string plan = "none";
  std::uint64_t seed = 0;
  std::size_t trainable_params = 0;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based; 0 when no epoch ran
  double best_val_f = 0.0;
  std::string checkpoint_path;
  std::string config_json;    // resolved configuration, for provenance
  std::string overrides;      // flag overrides that were applied

  std::string to_json() const;
};

// A decoded clip ready for block extraction.
struct ClipData {
  std::string id;
  dsp::LogMelSpectrogram spec;
  synth::FrameLabelTrack labels;
};

// Loads and featurizes every manifest entry of the given task/split.
// Throws "empty split: ..." when nothing matches and on label misalignment.
std::vector<ClipData> load_clips(const synth::DatasetManifest& manifest, synth::Task task,
                                 synth::Split split, const dsp::StftConfig& stft);

// Batched frame-wise inference over one clip: one decision per frame.
synth::FrameLabelTrack predict_frame_labels(model::Detector& model,
                                            const dsp::LogMelSpectrogram& spec,
                                            int batch_size = 64);

// Pooled confusion over a set of clips.
eval::ConfusionCounts evaluate_clips(model::Detector& model, const std::vector<ClipData>& clips,
                                     int batch_size = 64);

// The core loop. Shuffles blocks across clips each epoch (seeded), minimizes
// softmax cross entropy with Adam, tracks validation F, and restores the
// best-epoch parameters into `model` before returning.
RunRecord fit(model::Detector& model, const std::vector<ClipData>& train_clips,
              const std::vector<ClipData>& val_clips, const TrainConfig& cfg,
              const std::string& plan_desc);
RunRecord fit(model::Detector& model, const std::vector<ClipData>& train_clips,
              const std::vector<ClipData>& val_clips, const TrainConfig& cfg,
              const std::string& plan_desc, nn::Checkpoint* best_adam_state);

// Manifest-level wrappers; write checkpoint (+ ".opt" Adam state) and the
// RunRecord JSON under out_dir, and return the record.
RunRecord train_source(const synth::DatasetManifest& manifest, const model::ModelConfig& model_cfg,
                       const TrainConfig& train_cfg, const dsp::StftConfig& stft,
                       const std::string& out_dir);

RunRecord train_target(const synth::DatasetManifest& manifest, const std::string& source_ckpt_path,
                       const TransferPlan& plan, const model::ModelConfig& model_cfg,
                       const TrainConfig& train_cfg, const dsp::StftConfig& stft,
                       const std::string& out_dir);

}  // namespace vocalis::train
