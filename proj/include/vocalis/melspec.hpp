// Copyright 2026 Vocalis Authors
// Log-mel spectrogram front end.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "vocalis/audio.hpp"

namespace vocalis::dsp {

struct StftConfig {
  double window_ms = 40.0;
  double hop_fraction = 0.5;  // 50% overlap: hop = window / 2
  int mel_bands = 64;
  double log_floor = 1e-10;  // floor on mel power, keeps log finite

  int window_length(int sample_rate) const {
    return static_cast<int>(window_ms / 1000.0 * sample_rate + 0.5);
  }
  int hop_length(int sample_rate) const {
    return window_length(sample_rate) / 2;
  }
  int fft_size(int sample_rate) const {
    int n = 1;
    while (n < window_length(sample_rate)) n <<= 1;
    return n;
  }
};

// frames x mel_bands matrix of log mel energies.
struct LogMelSpectrogram {
  int frames = 0;
  int bands = 0;
  std::vector<double> values;  // row-major, frames x bands
  double frame_period_s = 0.0;
  std::string source_id;

  double& at(int t, int m) { return values[static_cast<std::size_t>(t) * bands + m]; }
  double at(int t, int m) const { return values[static_cast<std::size_t>(t) * bands + m]; }
  const double* row(int t) const { return values.data() + static_cast<std::size_t>(t) * bands; }
};

// Number of analysis frames for num_samples >= window: floor((n - win)/hop) + 1.
int frame_count(std::size_t num_samples, int window, int hop);

std::vector<double> hamming_window(int length);

// In-place iterative radix-2 FFT on interleaved complex data (re, im).
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

// Triangular mel filterbank, unit peak, HTK mel scale. Returns
// mel_bands x (fft_size/2 + 1) weights. The top filter's upper edge is
// stretched by one bin so the Nyquist bin keeps nonzero weight.
std::vector<std::vector<double>> mel_filterbank(int mel_bands, int fft_size, int sample_rate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Entry (t, m) = log(max(mel_m . |STFT_t|^2, log_floor)).
// Throws if the clip is shorter than one window.
LogMelSpectrogram log_mel(const AudioClip& clip, const StftConfig& cfg,
                          const std::string& source_id = "");

// "VLMS" binary container: magic, version u16, frames u32, bands u32,
// row-major f32 little-endian.
void save_vlms(const std::string& path, const LogMelSpectrogram& spec);
LogMelSpectrogram load_vlms(const std::string& path);

}  // namespace vocalis::dsp
