// Copyright 2026 Vocalis Authors
// Filter-pattern visualization by gradient ascent on the input, and feature
// export for external embedding tools.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vocalis/manifest.hpp"
#include "vocalis/melspec.hpp"
#include "vocalis/model.hpp"

namespace vocalis::viz {

struct FilterPatternJob {
  std::string checkpoint_path;
  int layer = 0;   // 0-based conv layer
  int filter = 0;  // output channel within the layer
  int time_extent = 25;
  int freq_extent = 64;
  double eta = 0.1;
  int steps = 200;
  std::uint64_t seed = 0;
  // Production default: divide the gradient by its RMS so eta means the same
  // across layers. The raw rule X <- X + eta * dA/dX is kept for tests.
  bool normalize_gradient = true;
  // Halve eta (up to a bound) until the activation trace is non-decreasing.
  bool auto_eta = true;

  void validate() const;
};

struct FilterPattern {
  nn::NdArray<float> image;        // [T, F] normalized to [0, 1]
  std::vector<double> activations;  // trace, length steps + 1 (includes start)
  double realized_eta = 0.0;
};

struct AscentResult {
  nn::NdArray<float> x;
  std::vector<double> trace;
};

// Iterates X <- X + eta * grad(objective) from x0. The objective builder maps
// an input node to a scalar node on the same graph. Throws with the step
// index if the activation diverges.
AscentResult gradient_ascent(
    const std::function<int(nn::Graph<float>&, int)>& objective, nn::NdArray<float> x0,
    double eta, int steps, bool normalize_gradient);

// Ascends the mean activation of the chosen filter's GLU map (preceding
// layers run their full blocks in inference mode).
FilterPattern filter_pattern(model::Detector& model, const FilterPatternJob& job);
FilterPattern filter_pattern(const FilterPatternJob& job);  // loads the checkpoint

// min-max normalization to [0,1]; a constant image maps to all zeros.
nn::NdArray<float> normalize01(const nn::NdArray<float>& image);

// Binary PGM (P5), width = time, height = frequency with band 0 at the
// bottom row.
void save_pgm(const std::string& path, const nn::NdArray<float>& image01);

void save_trace_csv(const std::string& path, const std::vector<double>& trace);

// One CSV row per sampled block: flattened post-layer feature vector
// (channels x time x freq after the layer's pooling), task tag, label.
// sample_count <= 0 exports every block; otherwise a seeded sample.
void export_features(const std::string& checkpoint_path, const synth::DatasetManifest& manifest,
                     synth::Task task, synth::Split split, int layer, int sample_count,
                     std::uint64_t seed, const dsp::StftConfig& stft, const std::string& out_csv);

}  // namespace vocalis::viz
