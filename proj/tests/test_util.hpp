// Copyright 2026 Vocalis Authors
// Shared test helpers: scratch directories, hand-rolled WAV writers, and
// independent brute-force oracles kept deliberately separate from the
// library implementations they check.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "vocalis/graph.hpp"
#include "vocalis/ndarray.hpp"
#include "vocalis/rng.hpp"

namespace testutil {

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("vocalis-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
              std::to_string(counter++)))
                .string();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (std::filesystem::path(path_) / name).string();
  }

 private:
  std::string path_;
};

// Minimal WAV writer with explicit control over format, channels and width,
// for exercising the decoder's corners (separate from the library writer).
inline void write_wav_raw(const std::string& path, const std::vector<std::vector<double>>& channels,
                          int sample_rate, int bits, int format_code) {
  std::ofstream f(path, std::ios::binary);
  const int n_ch = static_cast<int>(channels.size());
  const std::size_t frames = channels.empty() ? 0 : channels[0].size();
  const int bytes_per = bits / 8;
  const std::uint32_t data_len = static_cast<std::uint32_t>(frames * n_ch * bytes_per);
  auto u16 = [&](std::uint16_t v) { f.put(static_cast<char>(v & 0xff)); f.put(static_cast<char>(v >> 8)); };
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) f.put(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  f.write("RIFF", 4);
  u32(36 + data_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  u32(16);
  u16(static_cast<std::uint16_t>(format_code));
  u16(static_cast<std::uint16_t>(n_ch));
  u32(static_cast<std::uint32_t>(sample_rate));
  u32(static_cast<std::uint32_t>(sample_rate * n_ch * bytes_per));
  u16(static_cast<std::uint16_t>(n_ch * bytes_per));
  u16(static_cast<std::uint16_t>(bits));
  f.write("data", 4);
  u32(data_len);
  for (std::size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < n_ch; ++c) {
      if (format_code == 1 && bits == 16) {
        const double clamped = std::max(-1.0, std::min(1.0, channels[c][i]));
        const std::int16_t q = static_cast<std::int16_t>(std::lrint(clamped * 32767.0));
        u16(static_cast<std::uint16_t>(q));
      } else if (format_code == 3 && bits == 32) {
        const float v = static_cast<float>(channels[c][i]);
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        u32(u);
      } else if (format_code == 1 && bits == 8) {  // deliberately unsupported downstream
        f.put(static_cast<char>(static_cast<int>(channels[c][i] * 127.0) + 128));
      }
    }
  }
}

// Dominant frequency from linear-interpolated zero-crossing times; resolves
// well under 1 Hz for a clean tone.
inline double zero_crossing_frequency(const std::vector<float>& x, int sample_rate) {
  std::vector<double> crossings;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if ((x[i - 1] < 0.0f && x[i] >= 0.0f) || (x[i - 1] >= 0.0f && x[i] < 0.0f)) {
      const double frac = static_cast<double>(x[i - 1]) / (static_cast<double>(x[i - 1]) - x[i]);
      crossings.push_back(static_cast<double>(i - 1) + frac);
    }
  }
  if (crossings.size() < 3) return 0.0;
  const double span = (crossings.back() - crossings.front()) / sample_rate;
  return static_cast<double>(crossings.size() - 1) / (2.0 * span);
}

// ---- brute-force oracles ---------------------------------------------

// Direct 7-loop cross-correlation over an explicitly materialized padded
// input. Same-padding in time; same or valid in frequency.
inline vocalis::nn::NdArray<double> conv2d_oracle(const vocalis::nn::NdArray<double>& x,
                                                  const vocalis::nn::NdArray<double>& w,
                                                  const vocalis::nn::NdArray<double>& b,
                                                  bool same_freq) {
  using vocalis::nn::NdArray;
  const int batch = x.extent(0), ci = x.extent(1), t_in = x.extent(2), f_in = x.extent(3);
  const int co = w.extent(0), kt = w.extent(2), kf = w.extent(3);
  const int pad_t = (kt - 1) / 2;
  const int pad_f = same_freq ? (kf - 1) / 2 : 0;
  const int f_out = same_freq ? f_in : f_in - kf + 1;

  NdArray<double> padded({batch, ci, t_in + 2 * pad_t, f_in + 2 * pad_f});
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < ci; ++c)
      for (int t = 0; t < t_in; ++t)
        for (int f = 0; f < f_in; ++f)
          padded.at4(n, c, t + pad_t, f + pad_f) = x.at4(n, c, t, f);

  NdArray<double> y({batch, co, t_in, f_out});
  for (int n = 0; n < batch; ++n) {
    for (int o = 0; o < co; ++o) {
      for (int t = 0; t < t_in; ++t) {
        for (int f = 0; f < f_out; ++f) {
          double acc = b[static_cast<std::size_t>(o)];
          for (int c = 0; c < ci; ++c)
            for (int dt = 0; dt < kt; ++dt)
              for (int df = 0; df < kf; ++df)
                acc += w.at4(o, c, dt, df) * padded.at4(n, c, t + dt, f + df);
          y.at4(n, o, t, f) = acc;
        }
      }
    }
  }
  return y;
}

// Direct nested-loop max pooling over frequency (clipped final window).
inline vocalis::nn::NdArray<double> max_pool_freq_oracle(const vocalis::nn::NdArray<double>& x,
                                                         int pool_f) {
  using vocalis::nn::NdArray;
  const int batch = x.extent(0), ch = x.extent(1), t_in = x.extent(2), f_in = x.extent(3);
  const int f_out = (f_in + pool_f - 1) / pool_f;
  NdArray<double> y({batch, ch, t_in, f_out});
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < ch; ++c)
      for (int t = 0; t < t_in; ++t)
        for (int fo = 0; fo < f_out; ++fo) {
          double best = -1e300;
          for (int f = fo * pool_f; f < std::min((fo + 1) * pool_f, f_in); ++f)
            best = std::max(best, x.at4(n, c, t, f));
          y.at4(n, c, t, fo) = best;
        }
  return y;
}

// ---- finite-difference gradient checker -------------------------------

// Builds the loss twice per element with +-h perturbations and compares the
// central difference against the recorded gradient. Inputs are leaves in the
// order given; build returns the scalar loss node.
struct FdReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

inline FdReport fd_check(
    std::vector<vocalis::nn::NdArray<double>> tensors,
    const std::function<int(vocalis::nn::Graph<double>&, const std::vector<int>&)>& build,
    double h = 1e-5) {
  using vocalis::nn::Graph;

  Graph<double> base;
  std::vector<int> ids;
  for (auto& t : tensors) ids.push_back(base.leaf(t, true));
  const int loss = build(base, ids);
  base.backward(loss);
  std::vector<vocalis::nn::NdArray<double>> grads;
  for (int id : ids) grads.push_back(base.grad(id));

  const auto eval = [&](const std::vector<vocalis::nn::NdArray<double>>& values) {
    Graph<double> g;
    std::vector<int> leaf_ids;
    for (const auto& v : values) leaf_ids.push_back(g.leaf(v, false));
    return g.value(build(g, leaf_ids))[0];
  };

  FdReport report;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    for (std::size_t i = 0; i < tensors[k].size(); ++i) {
      auto plus = tensors;
      auto minus = tensors;
      plus[k][i] += h;
      minus[k][i] -= h;
      const double numeric = (eval(plus) - eval(minus)) / (2.0 * h);
      const double analytic = grads[k][i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.checked;
    }
  }
  return report;
}

// Values with pairwise gaps far larger than the finite-difference step, so
// max-pool argmax choices cannot flip under perturbation.
inline vocalis::nn::NdArray<double> gapped_values(const std::vector<int>& shape,
                                                  vocalis::Rng& rng) {
  vocalis::nn::NdArray<double> out(shape);
  std::vector<int> slots(out.size());
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = static_cast<int>(i);
  rng.shuffle(slots);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.01 * slots[i] + rng.uniform(-1e-7, 1e-7);
  }
  return out;
}

inline vocalis::nn::NdArray<double> random_values(const std::vector<int>& shape,
                                                  vocalis::Rng& rng, double lo = -1.0,
                                                  double hi = 1.0) {
  vocalis::nn::NdArray<double> out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.uniform(lo, hi);
  return out;
}

inline bool files_identical(const std::string& a, const std::string& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::string da((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string db((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  return da == db;
}

}  // namespace testutil
