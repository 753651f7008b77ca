// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/config.hpp"

#include <fstream>
#include <functional>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace vocalis::cli {

void PipelineConfig::validate() const {
  const auto wrap = [](const char* key, const std::function<void()>& check) {
    try {
      check();
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("invalid config at ") + key + ": " + e.what());
    }
  };
  wrap("model", [&] { model.validate(); });
  wrap("train", [&] { train.validate(); });
  wrap("transfer", [&] {
    train::TransferPlan::parse(transfer_layers, transfer_mode,
                               static_cast<int>(model.channels.size()));
  });
  wrap("stft", [&] {
    if (stft.window_ms <= 0.0) throw std::runtime_error("window_ms must be positive");
    if (stft.log_floor <= 0.0) throw std::runtime_error("log_floor must be positive");
    if (stft.mel_bands != model.mel_bands) {
      throw std::runtime_error("mel_bands (" + std::to_string(stft.mel_bands) +
                               ") must match model.mel_bands (" +
                               std::to_string(model.mel_bands) + ")");
    }
  });
}

std::string config_to_json(const PipelineConfig& cfg) {
  json j;
  j["paths"] = {{"speech_dir", cfg.paths.speech_dir},
                {"music_dir", cfg.paths.music_dir},
                {"target_dir", cfg.paths.target_dir},
                {"work_dir", cfg.paths.work_dir}};
  j["stft"] = {{"window_ms", cfg.stft.window_ms},
               {"hop_fraction", cfg.stft.hop_fraction},
               {"mel_bands", cfg.stft.mel_bands},
               {"log_floor", cfg.stft.log_floor}};
  json kernels = json::array();
  for (const auto& [kt, kf] : cfg.model.kernels) kernels.push_back({kt, kf});
  j["model"] = {{"channels", cfg.model.channels},
                {"kernels", kernels},
                {"pools", cfg.model.pools},
                {"mel_bands", cfg.model.mel_bands},
                {"context_t", cfg.model.block_length},
                {"hidden", cfg.model.hidden},
                {"dropout", cfg.model.dropout},
                {"batch_norm", cfg.model.batch_norm}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"batch_size", cfg.train.batch_size},
                {"max_epochs", cfg.train.max_epochs},
                {"patience", cfg.train.patience},
                {"seed", cfg.train.seed}};
  j["transfer"] = {{"layers", cfg.transfer_layers}, {"mode", cfg.transfer_mode}};
  j["snr_db"] = cfg.snr_db;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

PipelineConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("invalid config: ") + e.what());
  }
  PipelineConfig cfg;
  try {
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      cfg.paths.speech_dir = p.value("speech_dir", cfg.paths.speech_dir);
      cfg.paths.music_dir = p.value("music_dir", cfg.paths.music_dir);
      cfg.paths.target_dir = p.value("target_dir", cfg.paths.target_dir);
      cfg.paths.work_dir = p.value("work_dir", cfg.paths.work_dir);
    }
    if (j.contains("stft")) {
      const auto& s = j["stft"];
      cfg.stft.window_ms = s.value("window_ms", cfg.stft.window_ms);
      cfg.stft.hop_fraction = s.value("hop_fraction", cfg.stft.hop_fraction);
      cfg.stft.mel_bands = s.value("mel_bands", cfg.stft.mel_bands);
      cfg.stft.log_floor = s.value("log_floor", cfg.stft.log_floor);
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      if (m.contains("channels")) cfg.model.channels = m["channels"].get<std::vector<int>>();
      if (m.contains("pools")) cfg.model.pools = m["pools"].get<std::vector<int>>();
      if (m.contains("kernels")) {
        cfg.model.kernels.clear();
        for (const auto& k : m["kernels"]) {
          cfg.model.kernels.emplace_back(k.at(0).get<int>(), k.at(1).get<int>());
        }
      }
      cfg.model.mel_bands = m.value("mel_bands", cfg.model.mel_bands);
      cfg.model.block_length = m.value("context_t", cfg.model.block_length);
      cfg.model.hidden = m.value("hidden", cfg.model.hidden);
      cfg.model.dropout = m.value("dropout", cfg.model.dropout);
      cfg.model.batch_norm = m.value("batch_norm", cfg.model.batch_norm);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
      cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
      cfg.train.max_epochs = t.value("max_epochs", cfg.train.max_epochs);
      cfg.train.patience = t.value("patience", cfg.train.patience);
      cfg.train.seed = t.value("seed", cfg.train.seed);
    }
    if (j.contains("transfer")) {
      cfg.transfer_layers = j["transfer"].value("layers", cfg.transfer_layers);
      cfg.transfer_mode = j["transfer"].value("mode", cfg.transfer_mode);
    }
    cfg.snr_db = j.value("snr_db", cfg.snr_db);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config file not found: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

void save_config(const std::string& path, const PipelineConfig& cfg) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << config_to_json(cfg) << '\n';
}

bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
  return a.paths.speech_dir == b.paths.speech_dir && a.paths.music_dir == b.paths.music_dir &&
         a.paths.target_dir == b.paths.target_dir && a.paths.work_dir == b.paths.work_dir &&
         a.stft.window_ms == b.stft.window_ms && a.stft.hop_fraction == b.stft.hop_fraction &&
         a.stft.mel_bands == b.stft.mel_bands && a.stft.log_floor == b.stft.log_floor &&
         a.model.channels == b.model.channels && a.model.kernels == b.model.kernels &&
         a.model.pools == b.model.pools && a.model.mel_bands == b.model.mel_bands &&
         a.model.block_length == b.model.block_length && a.model.hidden == b.model.hidden &&
         a.model.dropout == b.model.dropout && a.model.batch_norm == b.model.batch_norm &&
         a.train.learning_rate == b.train.learning_rate &&
         a.train.batch_size == b.train.batch_size && a.train.max_epochs == b.train.max_epochs &&
         a.train.patience == b.train.patience && a.train.seed == b.train.seed &&
         a.transfer_layers == b.transfer_layers && a.transfer_mode == b.transfer_mode &&
         a.snr_db == b.snr_db && a.seed == b.seed;
}

}  // namespace vocalis::cli
