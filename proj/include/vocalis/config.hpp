// Copyright 2026 Vocalis Authors
// Pipeline configuration file: one JSON document covering paths and every
// stage's settings.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>

#include "vocalis/melspec.hpp"
#include "vocalis/model.hpp"
#include "vocalis/trainer.hpp"
#include "vocalis/transfer.hpp"

namespace vocalis::cli {

struct PipelineConfig {
  struct Paths {
    std::string speech_dir;
    std::string music_dir;
    std::string target_dir;
    std::string work_dir = "work";
  } paths;

  dsp::StftConfig stft;
  model::ModelConfig model;
  train::TrainConfig train;
  std::string transfer_layers = "l1";
  std::string transfer_mode = "finetune";
  double snr_db = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

PipelineConfig load_config(const std::string& path);
void save_config(const std::string& path, const PipelineConfig& cfg);

std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const std::string& text);

bool operator==(const PipelineConfig& a, const PipelineConfig& b);

}  // namespace vocalis::cli
