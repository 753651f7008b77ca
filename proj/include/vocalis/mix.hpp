// Copyright 2026 Vocalis Authors
// Speech + music mixing at a target SNR.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include "vocalis/audio.hpp"
#include "vocalis/vad.hpp"

namespace vocalis::synth {

struct MixResult {
  dsp::AudioClip mixture;
  FrameLabelTrack labels;  // passed through unchanged
  double music_gain = 0.0;
  int clipped_samples = 0;  // samples beyond [-1,1] before peak rescale
  double rescale = 1.0;     // applied to the whole mixture when clipping occurred
};

// Music shorter than the speech is looped with a crossfade of this length.
inline constexpr double kLoopCrossfadeMs = 10.0;

// Repeats `music` with a 10 ms linear crossfade at each seam until it covers
// at least `needed` samples, starting from `offset` samples into the music.
std::vector<float> music_span(const dsp::AudioClip& music, std::size_t offset,
                              std::size_t needed, int sample_rate);

// output = speech + g * music, where
//   g = rms(speech over on-frames) / rms(music over the span) * 10^(-snr/20).
// Speech RMS is measured over the union of samples covered by on-frames
// (frame_ms / 50% overlap framing, as the labels were produced). Labels pass
// through unchanged. If the mixture exceeds [-1,1] it is peak-rescaled as a
// whole, which preserves the realized SNR.
// Errors: all-off label track; zero-energy music.
MixResult mix_at_snr(const dsp::AudioClip& speech, const dsp::AudioClip& music,
                     const FrameLabelTrack& labels, double snr_db,
                     std::size_t music_offset = 0, double frame_ms = 40.0);

// RMS of speech over on-frame samples and of the given music span; used both
// by the mixer and by tests that re-measure the realized SNR.
double rms_over_on_frames(const dsp::AudioClip& clip, const FrameLabelTrack& labels,
                          double frame_ms);
double rms(const std::vector<float>& samples);

}  // namespace vocalis::synth
