// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace vocalis::dsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

struct WavData {
  std::vector<float> mono;
  int sample_rate;
};

WavData read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("unreadable file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("unsupported encoding (not a RIFF/WAVE file): " + path);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data_chunk = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    std::uint32_t chunk_len = read_u32(hdr + 4);
    const unsigned char* body = hdr + 8;
    if (pos + 8 + chunk_len > bytes.size()) chunk_len = static_cast<std::uint32_t>(bytes.size() - pos - 8);
    if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_len >= 16) {
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = read_u32(body + 4);
      bits = read_u16(body + 14);
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_chunk = body;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (rate == 0 || channels == 0) {
    throw std::runtime_error("unsupported encoding (missing fmt chunk): " + path);
  }
  if (channels > 2) {
    throw std::runtime_error("unsupported encoding (more than 2 channels): " + path);
  }
  const bool pcm16 = (format == 1 && bits == 16);
  const bool float32 = (format == 3 && bits == 32);
  if (!pcm16 && !float32) {
    throw std::runtime_error("unsupported encoding (need 16-bit PCM or 32-bit float): " + path);
  }
  if (data_chunk == nullptr || data_len == 0) {
    throw std::runtime_error("zero-length audio: " + path);
  }

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t n_frames = data_len / (bytes_per_sample * channels);
  if (n_frames == 0) throw std::runtime_error("zero-length audio: " + path);

  WavData out;
  out.sample_rate = static_cast<int>(rate);
  out.mono.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const unsigned char* s = data_chunk + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        std::int16_t v = static_cast<std::int16_t>(s[0] | (s[1] << 8));
        acc += v / 32768.0;
      } else {
        std::uint32_t u = read_u32(s);
        float v;
        std::memcpy(&v, &u, 4);
        acc += v;
      }
    }
    out.mono[i] = static_cast<float>(acc / channels);
  }
  return out;
}

}  // namespace

std::vector<float> resample(const std::vector<float>& in, int in_rate, int out_rate) {
  if (in_rate <= 0 || out_rate <= 0) throw std::invalid_argument("resample: rates must be positive");
  if (in_rate == out_rate || in.empty()) return in;

  const int g = std::gcd(in_rate, out_rate);
  const std::int64_t up = out_rate / g;    // output samples per block
  const std::int64_t down = in_rate / g;   // input samples per block

  // Cutoff at the lower of the two Nyquist rates, in input-sample units.
  const double fc = std::min(1.0, static_cast<double>(out_rate) / in_rate);
  const int half_taps = static_cast<int>(std::ceil(16.0 / fc));

  const std::int64_t n_out =
      (static_cast<std::int64_t>(in.size()) * out_rate + in_rate / 2) / in_rate;
  std::vector<float> out(static_cast<std::size_t>(n_out));

  const auto kernel = [&](double t) {
    // Hann-windowed sinc, zero outside [-half_taps, half_taps].
    const double a = std::abs(t);
    if (a >= half_taps) return 0.0;
    const double x = kPi * fc * t;
    const double sinc = (std::abs(x) < 1e-12) ? 1.0 : std::sin(x) / x;
    const double w = 0.5 * (1.0 + std::cos(kPi * a / half_taps));
    return fc * sinc * w;
  };

  for (std::int64_t n = 0; n < n_out; ++n) {
    // Exact rational input position: n * down / up.
    const std::int64_t num = n * down;
    const std::int64_t i0 = num / up;
    const double frac = static_cast<double>(num % up) / static_cast<double>(up);
    double acc = 0.0;
    for (int j = -half_taps + 1; j <= half_taps; ++j) {
      const std::int64_t idx = i0 + j;
      if (idx < 0 || idx >= static_cast<std::int64_t>(in.size())) continue;
      acc += in[static_cast<std::size_t>(idx)] * kernel(static_cast<double>(j) - frac);
    }
    out[static_cast<std::size_t>(n)] = static_cast<float>(acc);
  }
  return out;
}

AudioClip load_audio(const std::string& path, int target_rate) {
  WavData wav = read_wav(path);
  AudioClip clip;
  clip.sample_rate = target_rate;
  clip.samples = resample(wav.mono, wav.sample_rate, target_rate);
  if (clip.samples.empty()) throw std::runtime_error("zero-length audio: " + path);

  float peak = 0.0f;
  for (float s : clip.samples) peak = std::max(peak, std::abs(s));
  if (peak > 1.0f) {
    const float inv = 1.0f / peak;
    for (float& s : clip.samples) s *= inv;
  }
  return clip;
}

void save_audio(const std::string& path, const AudioClip& clip) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  const std::uint32_t data_len = static_cast<std::uint32_t>(clip.samples.size() * 2);
  f.write("RIFF", 4);
  write_u32(f, 36 + data_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  write_u32(f, 16);
  write_u16(f, 1);  // PCM
  write_u16(f, 1);  // mono
  write_u32(f, static_cast<std::uint32_t>(clip.sample_rate));
  write_u32(f, static_cast<std::uint32_t>(clip.sample_rate * 2));
  write_u16(f, 2);
  write_u16(f, 16);
  f.write("data", 4);
  write_u32(f, data_len);
  for (float s : clip.samples) {
    const double clamped = std::clamp(static_cast<double>(s), -1.0, 1.0);
    const std::int16_t q = static_cast<std::int16_t>(std::lrint(clamped * 32767.0));
    write_u16(f, static_cast<std::uint16_t>(q));
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace vocalis::dsp
