// Copyright 2026 Vocalis Authors
// WAV ingestion, resampling, and the mono clip type.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

namespace vocalis::dsp {

inline constexpr int kPipelineRate = 16000;

// Mono waveform. Samples are normalized to [-1, 1] after ingestion.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kPipelineRate;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Reads a PCM WAV file (16-bit int or 32-bit float, mono or stereo), averages
// stereo to mono, resamples to target_rate, and peak-normalizes only if any
// |sample| exceeds 1. Errors are reported distinctly: unreadable file,
// unsupported encoding, zero-length audio.
AudioClip load_audio(const std::string& path, int target_rate = kPipelineRate);

// Writes a mono clip as 16-bit PCM WAV.
void save_audio(const std::string& path, const AudioClip& clip);

// Rational-ratio windowed-sinc polyphase resampler. Identity when rates match.
std::vector<float> resample(const std::vector<float>& in, int in_rate, int out_rate);

}  // namespace vocalis::dsp
