// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/vad.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vocalis/melspec.hpp"

namespace vocalis::synth {

int FrameLabelTrack::count_on() const {
  int n = 0;
  for (auto v : labels) n += (v != 0);
  return n;
}

std::vector<double> frame_energies_db(const dsp::AudioClip& clip, const VadConfig& cfg) {
  const int win = static_cast<int>(cfg.frame_ms / 1000.0 * clip.sample_rate + 0.5);
  const int hop = win / 2;
  const int n_frames = dsp::frame_count(clip.samples.size(), win, hop);
  if (n_frames == 0) throw std::runtime_error("clip shorter than one frame");

  std::vector<double> energies(static_cast<std::size_t>(n_frames));
  for (int t = 0; t < n_frames; ++t) {
    const std::size_t off = static_cast<std::size_t>(t) * hop;
    double acc = 0.0;
    for (int n = 0; n < win; ++n) {
      const double s = clip.samples[off + n];
      acc += s * s;
    }
    energies[t] = 10.0 * std::log10(acc / win + 1e-12);
  }
  return energies;
}

FrameLabelTrack detect_endpoints(const dsp::AudioClip& clip, const VadConfig& cfg) {
  const auto energies = frame_energies_db(clip, cfg);
  const int n = static_cast<int>(energies.size());

  // Active-speech level: 95th percentile of frame energies.
  std::vector<double> sorted(energies);
  std::sort(sorted.begin(), sorted.end());
  const int idx = std::min(n - 1, static_cast<int>(std::floor(0.95 * n)));
  const double active_level = sorted[idx];
  const double threshold = active_level - cfg.energy_threshold_db;

  FrameLabelTrack track;
  track.labels.resize(static_cast<std::size_t>(n), 0);
  for (int t = 0; t < n; ++t) {
    track.labels[t] =
        (energies[t] > threshold && energies[t] > cfg.silence_floor_dbfs) ? 1 : 0;
  }

  if (cfg.hangover_frames > 0) {
    std::vector<std::uint8_t> dilated(track.labels);
    for (int t = 0; t < n; ++t) {
      if (!track.labels[t]) continue;
      const int lo = std::max(0, t - cfg.hangover_frames);
      const int hi = std::min(n - 1, t + cfg.hangover_frames);
      for (int k = lo; k <= hi; ++k) dilated[k] = 1;
    }
    track.labels = std::move(dilated);
  }
  return track;
}

void save_labels_csv(const std::string& path, const FrameLabelTrack& labels) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "frame_index,label\n";
  for (std::size_t t = 0; t < labels.size(); ++t) {
    f << t << ',' << static_cast<int>(labels.labels[t]) << '\n';
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

FrameLabelTrack load_labels_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("unreadable file: " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("frame_index,label", 0) != 0) {
    throw std::runtime_error("not a label CSV (missing header): " + path);
  }
  FrameLabelTrack track;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed label row in " + path);
    const int v = std::stoi(line.substr(comma + 1));
    if (v != 0 && v != 1) throw std::runtime_error("label outside {0,1} in " + path);
    track.labels.push_back(static_cast<std::uint8_t>(v));
  }
  return track;
}

}  // namespace vocalis::synth
