// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/melspec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vocalis::dsp {

namespace {
constexpr double kPi = 3.14159265358979323846;

void put_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}
void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

int frame_count(std::size_t num_samples, int window, int hop) {
  if (num_samples < static_cast<std::size_t>(window)) return 0;
  return static_cast<int>((num_samples - static_cast<std::size_t>(window)) / hop) + 1;
}

std::vector<double> hamming_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * kPi * n / (length - 1));
  }
  return w;
}

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = re.size();
  if (n == 0 || (n & (n - 1)) != 0 || im.size() != n) {
    throw std::invalid_argument("fft_radix2: size must be a power of two");
  }
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::size_t a = i + k, b = i + k + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> mel_filterbank(int mel_bands, int fft_size, int sample_rate) {
  const int bins = fft_size / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);

  std::vector<double> edges(static_cast<std::size_t>(mel_bands) + 2);
  for (int i = 0; i < mel_bands + 2; ++i) {
    edges[i] = mel_to_hz(mel_max * i / (mel_bands + 1));
  }
  // Stretch the top filter's falling edge by one bin width so the bin that
  // lands exactly on Nyquist is still covered.
  edges[mel_bands + 1] += static_cast<double>(sample_rate) / fft_size;

  std::vector<std::vector<double>> fb(static_cast<std::size_t>(mel_bands),
                                      std::vector<double>(static_cast<std::size_t>(bins), 0.0));
  for (int m = 0; m < mel_bands; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      double w = 0.0;
      if (f > lo && f < hi) {
        w = (f <= center) ? (f - lo) / (center - lo) : (hi - f) / (hi - center);
      }
      fb[m][k] = w;  // unit peak, no area normalization
    }
  }
  return fb;
}

LogMelSpectrogram log_mel(const AudioClip& clip, const StftConfig& cfg,
                          const std::string& source_id) {
  const int win = cfg.window_length(clip.sample_rate);
  const int hop = cfg.hop_length(clip.sample_rate);
  const int nfft = cfg.fft_size(clip.sample_rate);
  if (clip.samples.size() < static_cast<std::size_t>(win)) {
    throw std::runtime_error("clip shorter than one window");
  }

  const int n_frames = frame_count(clip.samples.size(), win, hop);
  const int bins = nfft / 2 + 1;
  const auto window = hamming_window(win);
  const auto fb = mel_filterbank(cfg.mel_bands, nfft, clip.sample_rate);

  LogMelSpectrogram spec;
  spec.frames = n_frames;
  spec.bands = cfg.mel_bands;
  spec.values.resize(static_cast<std::size_t>(n_frames) * cfg.mel_bands);
  spec.frame_period_s = static_cast<double>(hop) / clip.sample_rate;
  spec.source_id = source_id;

  std::vector<double> re(static_cast<std::size_t>(nfft));
  std::vector<double> im(static_cast<std::size_t>(nfft));
  std::vector<double> power(static_cast<std::size_t>(bins));

  for (int t = 0; t < n_frames; ++t) {
    const std::size_t off = static_cast<std::size_t>(t) * hop;
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    for (int n = 0; n < win; ++n) {
      re[n] = static_cast<double>(clip.samples[off + n]) * window[n];
    }
    fft_radix2(re, im);
    for (int k = 0; k < bins; ++k) {
      power[k] = re[k] * re[k] + im[k] * im[k];
    }
    for (int m = 0; m < cfg.mel_bands; ++m) {
      double e = 0.0;
      for (int k = 0; k < bins; ++k) e += fb[m][k] * power[k];
      spec.at(t, m) = std::log(std::max(e, cfg.log_floor));
    }
  }
  return spec;
}

void save_vlms(const std::string& path, const LogMelSpectrogram& spec) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write("VLMS", 4);
  put_u16(f, 1);
  put_u32(f, static_cast<std::uint32_t>(spec.frames));
  put_u32(f, static_cast<std::uint32_t>(spec.bands));
  for (double v : spec.values) {
    const float x = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &x, 4);
    put_u32(f, u);
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

LogMelSpectrogram load_vlms(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("unreadable file: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "VLMS", 4) != 0) {
    throw std::runtime_error("not a VLMS container: " + path);
  }
  const std::uint16_t version = get_u16(f);
  if (version != 1) throw std::runtime_error("unsupported VLMS version: " + path);
  LogMelSpectrogram spec;
  spec.frames = static_cast<int>(get_u32(f));
  spec.bands = static_cast<int>(get_u32(f));
  spec.values.resize(static_cast<std::size_t>(spec.frames) * spec.bands);
  for (double& v : spec.values) {
    const std::uint32_t u = get_u32(f);
    float x;
    std::memcpy(&x, &u, 4);
    v = x;
  }
  if (!f) throw std::runtime_error("truncated VLMS container: " + path);
  return spec;
}

}  // namespace vocalis::dsp
