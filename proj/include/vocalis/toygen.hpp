// Copyright 2026 Vocalis Authors
// Built-in synthetic corpus generator: harmonic-tone "voice" over
// filtered-noise "music", separable in the mel bands by construction.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vocalis/audio.hpp"
#include "vocalis/manifest.hpp"
#include "vocalis/rng.hpp"
#include "vocalis/vad.hpp"

namespace vocalis::synth {

struct ToyOptions {
  int clip_count = 200;
  double clip_seconds = 0.5;
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  double validation_fraction = 0.15;  // remainder is test
};

// Voiced/silence segmentation of a generated clip, in samples.
struct VoicedPlan {
  std::vector<std::pair<std::size_t, std::size_t>> voiced;  // [begin, end)
  std::size_t total_samples = 0;
};

// Frame labels from known voiced spans: a frame is on when at least half of
// its samples are voiced (40 ms window, 50% overlap).
FrameLabelTrack labels_from_plan(const VoicedPlan& plan, int sample_rate);

// Clean "speech": bursts of harmonics (2..10 of f0 in 150-220 Hz) between
// silences. Returns the clip and the exact voiced spans.
std::pair<dsp::AudioClip, VoicedPlan> toy_speech_clip(Rng& rng, double seconds);

// "Music": white noise low-passed around 250 Hz; spectrally disjoint from the
// voice harmonics.
dsp::AudioClip toy_music_clip(Rng& rng, double seconds);

// "Singing": like speech but with a 5 Hz vibrato on f0, premixed with a
// noise-plus-drone accompaniment; exact labels come from the voiced plan.
std::pair<dsp::AudioClip, VoicedPlan> toy_singing_clip(Rng& rng, double seconds);

// Writes <out_dir>/speech/*.wav and <out_dir>/music/*.wav (clean inputs for
// the synth step). Speech stems carry speaker prefixes ("spkNNN_take.wav").
void generate_toy_source_inputs(const std::string& out_dir, const ToyOptions& opts);

// Writes a ready target-task corpus (mixtures + exact label CSVs +
// manifest.jsonl with task=target, one singer per clip).
DatasetManifest generate_toy_target_corpus(const std::string& out_dir, const ToyOptions& opts);

}  // namespace vocalis::synth
