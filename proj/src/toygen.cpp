// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/toygen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "vocalis/melspec.hpp"

namespace fs = std::filesystem;

namespace vocalis::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Segment lengths chosen so every clip has at least one voiced and one
// silent region even at 0.4 s. Boundaries snap to the 20 ms analysis hop so
// every frame is either at least half voiced or fully silent; no frame sits
// ambiguously on a burst edge.
VoicedPlan make_plan(Rng& rng, std::size_t total) {
  const std::size_t hop = static_cast<std::size_t>(0.020 * dsp::kPipelineRate);
  const auto snap = [hop](std::size_t x) { return (x / hop) * hop; };

  VoicedPlan plan;
  plan.total_samples = total;
  std::size_t pos = snap(static_cast<std::size_t>(rng.uniform(0.05, 0.10) * dsp::kPipelineRate));
  bool voiced = true;
  while (pos < total) {
    const double dur_s = voiced ? rng.uniform(0.10, 0.18) : rng.uniform(0.06, 0.12);
    std::size_t end = snap(pos + static_cast<std::size_t>(dur_s * dsp::kPipelineRate));
    end = std::min(end, total);
    if (end <= pos) end = std::min(pos + hop, total);
    if (voiced && end > pos) plan.voiced.emplace_back(pos, end);
    pos = end;
    voiced = !voiced;
  }
  return plan;
}

// Harmonics 2..10 of f0, raised-cosine 5 ms edges. vibrato_depth of 0
// gives a steady tone.
void render_voice(std::vector<float>& out, const VoicedPlan& plan, double f0,
                  double vibrato_depth, double amplitude) {
  const int ramp = dsp::kPipelineRate / 200;  // 5 ms
  for (const auto& [begin, end] : plan.voiced) {
    double phase[11] = {0};
    for (std::size_t i = begin; i < end; ++i) {
      const double t = static_cast<double>(i) / dsp::kPipelineRate;
      const double f = f0 * (1.0 + vibrato_depth * std::sin(2.0 * kPi * 5.0 * t));
      double s = 0.0;
      for (int k = 2; k <= 10; ++k) {
        phase[k] += 2.0 * kPi * k * f / dsp::kPipelineRate;
        s += std::sin(phase[k]) / k;
      }
      const std::size_t into = i - begin;
      const std::size_t left = end - i;
      double env = 1.0;
      if (into < static_cast<std::size_t>(ramp)) {
        env = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(into) / ramp));
      } else if (left <= static_cast<std::size_t>(ramp)) {
        env = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(left) / ramp));
      }
      out[i] += static_cast<float>(amplitude * env * s);
    }
  }
}

std::vector<float> lowpassed_noise(Rng& rng, std::size_t n, double cutoff_hz,
                                   double target_rms) {
  std::vector<float> buf(n);
  const double a = 1.0 - std::exp(-2.0 * kPi * cutoff_hz / dsp::kPipelineRate);
  double y1 = 0.0, y2 = 0.0, y3 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(-1.0, 1.0);
    y1 += a * (x - y1);
    y2 += a * (y1 - y2);
    y3 += a * (y2 - y3);
    buf[i] = static_cast<float>(y3);
  }
  double acc = 0.0;
  for (float v : buf) acc += static_cast<double>(v) * v;
  const double current = std::sqrt(acc / static_cast<double>(n));
  if (current > 0.0) {
    const float g = static_cast<float>(target_rms / current);
    for (float& v : buf) v *= g;
  }
  return buf;
}

std::string zero_padded(int v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

}  // namespace

FrameLabelTrack labels_from_plan(const VoicedPlan& plan, int sample_rate) {
  const int win = static_cast<int>(0.040 * sample_rate + 0.5);
  const int hop = win / 2;
  const int n_frames = dsp::frame_count(plan.total_samples, win, hop);
  FrameLabelTrack track;
  track.labels.resize(static_cast<std::size_t>(n_frames), 0);
  for (int t = 0; t < n_frames; ++t) {
    const std::size_t lo = static_cast<std::size_t>(t) * hop;
    const std::size_t hi = lo + static_cast<std::size_t>(win);
    std::size_t voiced = 0;
    for (const auto& [begin, end] : plan.voiced) {
      const std::size_t a = std::max(lo, begin);
      const std::size_t b = std::min(hi, end);
      if (b > a) voiced += b - a;
    }
    track.labels[t] = voiced * 2 >= static_cast<std::size_t>(win) ? 1 : 0;
  }
  return track;
}

std::pair<dsp::AudioClip, VoicedPlan> toy_speech_clip(Rng& rng, double seconds) {
  const std::size_t n = static_cast<std::size_t>(seconds * dsp::kPipelineRate);
  VoicedPlan plan = make_plan(rng, n);
  dsp::AudioClip clip;
  clip.sample_rate = dsp::kPipelineRate;
  clip.samples.assign(n, 0.0f);
  render_voice(clip.samples, plan, rng.uniform(150.0, 220.0), 0.0, 0.25);
  return {std::move(clip), std::move(plan)};
}

dsp::AudioClip toy_music_clip(Rng& rng, double seconds) {
  const std::size_t n = static_cast<std::size_t>(seconds * dsp::kPipelineRate);
  dsp::AudioClip clip;
  clip.sample_rate = dsp::kPipelineRate;
  clip.samples = lowpassed_noise(rng, n, 250.0, 0.1);
  return clip;
}

std::pair<dsp::AudioClip, VoicedPlan> toy_singing_clip(Rng& rng, double seconds) {
  const std::size_t n = static_cast<std::size_t>(seconds * dsp::kPipelineRate);
  VoicedPlan plan = make_plan(rng, n);
  dsp::AudioClip clip;
  clip.sample_rate = dsp::kPipelineRate;
  clip.samples.assign(n, 0.0f);
  render_voice(clip.samples, plan, rng.uniform(180.0, 260.0), 0.03, 0.25);

  // Accompaniment: broader noise floor plus two low drones, always on.
  const auto noise = lowpassed_noise(rng, n, 350.0, 0.08);
  const double d1 = rng.uniform(85.0, 95.0);
  const double d2 = rng.uniform(130.0, 140.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / dsp::kPipelineRate;
    const double drone = 0.05 * std::sin(2.0 * kPi * d1 * t) + 0.05 * std::sin(2.0 * kPi * d2 * t);
    clip.samples[i] += noise[i] + static_cast<float>(drone);
  }
  return {std::move(clip), std::move(plan)};
}

void generate_toy_source_inputs(const std::string& out_dir, const ToyOptions& opts) {
  const fs::path speech_dir = fs::path(out_dir) / "speech";
  const fs::path music_dir = fs::path(out_dir) / "music";
  fs::create_directories(speech_dir);
  fs::create_directories(music_dir);

  Rng rng(opts.seed);
  // A handful of "speakers", several takes each; enough speakers that the
  // per-speaker split assignment always has train/validation/test material.
  const int n_speakers = std::max(4, opts.clip_count / 4);
  const int takes_per_speaker = (opts.clip_count + n_speakers - 1) / n_speakers;
  int written = 0;
  for (int s = 0; s < n_speakers && written < opts.clip_count; ++s) {
    for (int k = 0; k < takes_per_speaker && written < opts.clip_count; ++k) {
      auto [clip, plan] = toy_speech_clip(rng, opts.clip_seconds);
      const std::string name = "spk" + zero_padded(s, 3) + "_take" + zero_padded(k, 2) + ".wav";
      dsp::save_audio((speech_dir / name).string(), clip);
      ++written;
    }
  }
  const int n_music = std::max(4, opts.clip_count / 10);
  for (int m = 0; m < n_music; ++m) {
    dsp::AudioClip clip = toy_music_clip(rng, opts.clip_seconds * 1.5);
    dsp::save_audio((music_dir / ("music" + zero_padded(m, 3) + ".wav")).string(), clip);
  }
}

DatasetManifest generate_toy_target_corpus(const std::string& out_dir, const ToyOptions& opts) {
  fs::create_directories(out_dir);
  Rng rng(opts.seed);

  const int n = opts.clip_count;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  const SplitSizes sizes =
      split_sizes(static_cast<std::size_t>(n), opts.train_fraction, opts.validation_fraction);
  const int n_train = static_cast<int>(sizes.train);
  const int n_val = static_cast<int>(sizes.validation);

  DatasetManifest manifest;
  for (int i = 0; i < n; ++i) {
    auto [clip, plan] = toy_singing_clip(rng, opts.clip_seconds);
    const FrameLabelTrack labels = labels_from_plan(plan, clip.sample_rate);

    const std::string id = "song" + zero_padded(i, 3);
    const std::string audio_path = (fs::path(out_dir) / (id + ".wav")).string();
    const std::string label_path = (fs::path(out_dir) / (id + ".labels.csv")).string();
    dsp::save_audio(audio_path, clip);
    save_labels_csv(label_path, labels);

    const int rank = static_cast<int>(std::find(order.begin(), order.end(), i) - order.begin());
    ManifestEntry e;
    e.id = id;
    e.audio_path = audio_path;
    e.label_path = label_path;
    e.split = rank < n_train                ? Split::kTrain
              : rank < n_train + n_val      ? Split::kValidation
                                            : Split::kTest;
    e.task = Task::kTarget;
    e.speaker = "singer" + zero_padded(i, 3);
    manifest.entries.push_back(std::move(e));
  }
  manifest.check_split_invariant();
  save_manifest((fs::path(out_dir) / "manifest.jsonl").string(), manifest);
  return manifest;
}

}  // namespace vocalis::synth
