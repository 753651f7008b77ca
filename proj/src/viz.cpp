// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/viz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "vocalis/trainer.hpp"

namespace vocalis::viz {

using nn::Graph;
using nn::NdArray;

void FilterPatternJob::validate() const {
  if (eta <= 0.0) throw std::invalid_argument("filter pattern: eta must be positive");
  if (steps < 1) throw std::invalid_argument("filter pattern: step count must be >= 1");
  if (time_extent < 1 || freq_extent < 1) {
    throw std::invalid_argument("filter pattern: input extents must be positive");
  }
}

AscentResult gradient_ascent(const std::function<int(Graph<float>&, int)>& objective,
                             NdArray<float> x0, double eta, int steps, bool normalize_gradient) {
  AscentResult out;
  out.x = std::move(x0);
  out.trace.reserve(static_cast<std::size_t>(steps) + 1);

  for (int step = 0; step <= steps; ++step) {
    Graph<float> g;
    int obj;
    try {
      const int xi = g.leaf(out.x, true);
      obj = objective(g, xi);
      if (g.value(obj).size() != 1) {
        throw std::invalid_argument("gradient_ascent: objective must be scalar");
      }
      out.trace.push_back(static_cast<double>(g.value(obj)[0]));
      if (step == steps) break;  // final activation recorded, no further step
      g.backward(obj);

      const auto& grad = g.grad(xi);
      double scale = eta;
      if (normalize_gradient) {
        double acc = 0.0;
        for (std::size_t i = 0; i < grad.size(); ++i) {
          acc += static_cast<double>(grad[i]) * grad[i];
        }
        const double rms = std::sqrt(acc / static_cast<double>(grad.size()));
        scale = (rms > 0.0) ? eta / rms : 0.0;
      }
      for (std::size_t i = 0; i < out.x.size(); ++i) {
        out.x[i] += static_cast<float>(scale * grad[i]);
      }
      if (!out.x.all_finite()) throw std::runtime_error("non-finite input image");
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("gradient ascent diverged at step " + std::to_string(step) + ": " +
                               e.what());
    }
  }
  return out;
}

namespace {

bool non_decreasing(const std::vector<double>& trace, double tol) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] < trace[i - 1] - tol) return false;
  }
  return true;
}

}  // namespace

FilterPattern filter_pattern(model::Detector& model, const FilterPatternJob& job) {
  job.validate();
  const auto& stack = model.conv_stack();
  if (job.layer < 0 || job.layer >= stack.layer_count()) {
    throw std::invalid_argument("filter pattern: no such layer L" + std::to_string(job.layer + 1));
  }
  if (job.filter < 0 || job.filter >= stack.layer(job.layer).w.value.extent(0)) {
    throw std::invalid_argument("filter pattern: filter index out of range");
  }

  const auto objective = [&](Graph<float>& g, int x) {
    const int fmap = stack.forward_filter_map(g, x, job.layer);
    return g.mean_channel(fmap, job.filter);
  };

  // Small seeded noise start.
  Rng rng(job.seed);
  NdArray<float> x0({1, 1, job.time_extent, job.freq_extent});
  for (std::size_t i = 0; i < x0.size(); ++i) {
    x0[i] = static_cast<float>(rng.uniform(-0.01, 0.01));
  }

  double eta = job.eta;
  AscentResult result = gradient_ascent(objective, x0, eta, job.steps, job.normalize_gradient);
  if (job.auto_eta) {
    for (int halving = 0; halving < 12 && !non_decreasing(result.trace, 1e-7); ++halving) {
      eta *= 0.5;
      result = gradient_ascent(objective, x0, eta, job.steps, job.normalize_gradient);
    }
  }

  FilterPattern pattern;
  NdArray<float> image({job.time_extent, job.freq_extent});
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = result.x[i];
  pattern.image = normalize01(image);
  pattern.activations = std::move(result.trace);
  pattern.realized_eta = eta;
  return pattern;
}

FilterPattern filter_pattern(const FilterPatternJob& job) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(job.checkpoint_path);
  auto model = model::detector_from_checkpoint(ckpt);
  return filter_pattern(*model, job);
}

NdArray<float> normalize01(const NdArray<float>& image) {
  float lo = image[0], hi = image[0];
  for (std::size_t i = 0; i < image.size(); ++i) {
    lo = std::min(lo, image[i]);
    hi = std::max(hi, image[i]);
  }
  NdArray<float> out(image.shape());
  if (hi > lo) {
    const float inv = 1.0f / (hi - lo);
    for (std::size_t i = 0; i < image.size(); ++i) out[i] = (image[i] - lo) * inv;
  }
  return out;
}

void save_pgm(const std::string& path, const NdArray<float>& image01) {
  if (image01.rank() != 2) throw std::invalid_argument("save_pgm: expected a [T,F] image");
  const int t_extent = image01.extent(0), f_extent = image01.extent(1);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "P5\n" << t_extent << ' ' << f_extent << "\n255\n";
  // Band 0 at the bottom row, time along x.
  for (int row = 0; row < f_extent; ++row) {
    const int band = f_extent - 1 - row;
    for (int t = 0; t < t_extent; ++t) {
      const float v = std::clamp(image01.at2(t, band), 0.0f, 1.0f);
      const unsigned char byte = static_cast<unsigned char>(std::lrint(v * 255.0f));
      f.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
}

void save_trace_csv(const std::string& path, const std::vector<double>& trace) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "step,activation\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    f << i << ',' << trace[i] << '\n';
  }
}

void export_features(const std::string& checkpoint_path, const synth::DatasetManifest& manifest,
                     synth::Task task, synth::Split split, int layer, int sample_count,
                     std::uint64_t seed, const dsp::StftConfig& stft, const std::string& out_csv) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(checkpoint_path);
  auto model = model::detector_from_checkpoint(ckpt);
  const auto& stack = model->conv_stack();
  if (layer < 0 || layer >= stack.layer_count()) {
    throw std::invalid_argument("export_features: no such layer L" + std::to_string(layer + 1));
  }

  const auto clips = train::load_clips(manifest, task, split, stft);
  std::vector<std::pair<int, int>> refs;  // (clip, frame)
  for (int c = 0; c < static_cast<int>(clips.size()); ++c) {
    for (int t = 0; t < clips[static_cast<std::size_t>(c)].spec.frames; ++t) refs.emplace_back(c, t);
  }
  if (sample_count > 0 && static_cast<std::size_t>(sample_count) < refs.size()) {
    Rng rng(seed);
    rng.shuffle(refs);
    refs.resize(static_cast<std::size_t>(sample_count));
  }

  const int block_length = model->config().block_length;
  const std::string task_tag =
      task == synth::Task::kSource ? "source-synthetic" : "target-singing";

  std::ofstream f(out_csv);
  if (!f) throw std::runtime_error("cannot open for writing: " + out_csv);

  bool wrote_header = false;
  for (const auto& [c, t] : refs) {
    const auto& clip = clips[static_cast<std::size_t>(c)];
    NdArray<float> x({1, 1, block_length, clip.spec.bands});
    model::gather_block(clip.spec, t, block_length, x.data());

    Graph<float> g;
    const int xi = g.leaf(std::move(x), false);
    const int feat = stack.forward_eval(g, xi, layer);
    const auto& v = g.value(feat);

    if (!wrote_header) {
      for (std::size_t i = 0; i < v.size(); ++i) f << 'f' << i << ',';
      f << "task,label\n";
      wrote_header = true;
    }
    for (std::size_t i = 0; i < v.size(); ++i) f << v[i] << ',';
    f << task_tag << ',' << (clip.labels.on(static_cast<std::size_t>(t)) ? 1 : 0) << '\n';
  }
}

}  // namespace vocalis::viz
