// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/mix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vocalis/melspec.hpp"

namespace vocalis::synth {

double rms(const std::vector<float>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (float s : samples) acc += static_cast<double>(s) * s;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

double rms_over_on_frames(const dsp::AudioClip& clip, const FrameLabelTrack& labels,
                          double frame_ms) {
  const int win = static_cast<int>(frame_ms / 1000.0 * clip.sample_rate + 0.5);
  const int hop = win / 2;
  std::vector<std::uint8_t> mask(clip.samples.size(), 0);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (!labels.on(t)) continue;
    const std::size_t lo = t * static_cast<std::size_t>(hop);
    const std::size_t hi = std::min(lo + static_cast<std::size_t>(win), clip.samples.size());
    for (std::size_t i = lo; i < hi; ++i) mask[i] = 1;
  }
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    if (!mask[i]) continue;
    acc += static_cast<double>(clip.samples[i]) * clip.samples[i];
    ++count;
  }
  if (count == 0) return 0.0;
  return std::sqrt(acc / static_cast<double>(count));
}

std::vector<float> music_span(const dsp::AudioClip& music, std::size_t offset,
                              std::size_t needed, int sample_rate) {
  if (music.samples.empty()) throw std::runtime_error("zero-energy music (empty clip)");
  const std::size_t fade =
      std::min(static_cast<std::size_t>(kLoopCrossfadeMs / 1000.0 * sample_rate),
               music.samples.size() / 2);

  std::vector<float> buf;
  buf.reserve(needed + music.samples.size());
  const std::size_t start = offset % music.samples.size();
  buf.insert(buf.end(), music.samples.begin() + static_cast<std::ptrdiff_t>(start),
             music.samples.end());
  while (buf.size() < needed) {
    // Linear crossfade between the tail of what we have and the head of the
    // clip. The first segment can be shorter than the fade when the offset
    // lands near the end of the clip.
    const std::size_t this_fade = std::min(fade, buf.size());
    const std::size_t seam = buf.size() - this_fade;
    for (std::size_t i = 0; i < this_fade; ++i) {
      const float a = static_cast<float>(i + 1) / static_cast<float>(this_fade + 1);
      buf[seam + i] = (1.0f - a) * buf[seam + i] + a * music.samples[i];
    }
    buf.insert(buf.end(), music.samples.begin() + static_cast<std::ptrdiff_t>(this_fade),
               music.samples.end());
  }
  buf.resize(needed);
  return buf;
}

MixResult mix_at_snr(const dsp::AudioClip& speech, const dsp::AudioClip& music,
                     const FrameLabelTrack& labels, double snr_db,
                     std::size_t music_offset, double frame_ms) {
  if (speech.sample_rate != music.sample_rate) {
    throw std::runtime_error("mix_at_snr: sample rates differ");
  }
  if (labels.count_on() == 0) {
    throw std::runtime_error("all-off label track (undefined speech RMS)");
  }
  const double speech_rms = rms_over_on_frames(speech, labels, frame_ms);
  if (speech_rms <= 0.0) {
    throw std::runtime_error("all-off label track (undefined speech RMS)");
  }

  std::vector<float> span = music_span(music, music_offset, speech.samples.size(),
                                       speech.sample_rate);
  const double music_rms = rms(span);
  if (music_rms <= 0.0) throw std::runtime_error("zero-energy music");

  const double gain = speech_rms / music_rms * std::pow(10.0, -snr_db / 20.0);

  MixResult out;
  out.music_gain = gain;
  out.labels = labels;
  out.mixture.sample_rate = speech.sample_rate;
  out.mixture.samples.resize(speech.samples.size());

  float peak = 0.0f;
  for (std::size_t i = 0; i < speech.samples.size(); ++i) {
    const float v = speech.samples[i] + static_cast<float>(gain) * span[i];
    out.mixture.samples[i] = v;
    peak = std::max(peak, std::abs(v));
    if (std::abs(v) > 1.0f) ++out.clipped_samples;
  }
  if (peak > 1.0f) {
    out.rescale = 1.0 / peak;
    const float inv = static_cast<float>(out.rescale);
    for (float& v : out.mixture.samples) v *= inv;
  }
  return out;
}

}  // namespace vocalis::synth
