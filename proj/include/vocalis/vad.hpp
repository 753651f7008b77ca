// Copyright 2026 Vocalis Authors
// Energy-based endpoint detection for clean speech.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "vocalis/audio.hpp"

namespace vocalis::synth {

struct VadConfig {
  double frame_ms = 40.0;          // matches the spectrogram framing
  double energy_threshold_db = 35.0;  // below the clip's active-speech level
  int hangover_frames = 2;
  double silence_floor_dbfs = -60.0;  // frames below this are never voiced
};

// Per-frame binary labels, aligned 1:1 with spectrogram frames.
struct FrameLabelTrack {
  std::vector<std::uint8_t> labels;  // 1 = on, 0 = off

  std::size_t size() const { return labels.size(); }
  bool on(std::size_t t) const { return labels[t] != 0; }
  int count_on() const;
};

// Short-time log energy in dBFS per frame (window/hop from cfg.frame_ms,
// 50% overlap, same framing as the spectrogram).
std::vector<double> frame_energies_db(const dsp::AudioClip& clip, const VadConfig& cfg);

// A frame is voiced when its energy exceeds both
//   (95th-percentile frame energy - energy_threshold_db) and the absolute
// silence floor; the voiced region is then dilated by hangover_frames on
// both sides. Throws if the clip is shorter than one frame.
FrameLabelTrack detect_endpoints(const dsp::AudioClip& clip, const VadConfig& cfg);

// Label CSV with header "frame_index,label".
void save_labels_csv(const std::string& path, const FrameLabelTrack& labels);
FrameLabelTrack load_labels_csv(const std::string& path);

}  // namespace vocalis::synth
