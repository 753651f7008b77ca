// Copyright 2026 Vocalis Authors
// Dataset manifests: JSON-lines records tying audio to labels and splits.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vocalis::synth {

enum class Split { kTrain, kValidation, kTest };
enum class Task { kSource, kTarget };

std::string to_string(Split s);
std::string to_string(Task t);
Split split_from_string(const std::string& s);
Task task_from_string(const std::string& s);

struct ManifestEntry {
  std::string id;
  std::string audio_path;
  std::string label_path;
  Split split = Split::kTrain;
  Task task = Task::kSource;
  std::string speaker;  // speaker or singer identifier; split-leakage guard
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> in_split(Split s, Task t) const;
  // Throws "split leakage: ..." if a speaker appears in more than one split.
  void check_split_invariant() const;
};

void save_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::string& path);

// Partition n units into train/validation/test by the given fractions,
// guaranteeing each split at least one unit when n >= 3.
struct SplitSizes {
  std::size_t train = 0, validation = 0, test = 0;
};
SplitSizes split_sizes(std::size_t n, double train_fraction, double validation_fraction);

struct SynthOptions {
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;  // remainder is test
  double vad_threshold_db = 35.0;
  int vad_hangover = 2;
};

// Source-task corpus construction: every speech WAV is endpointed, mixed with
// a seeded-random music WAV at the requested SNR, and written to out_dir with
// its label CSV; returns the manifest (also written to out_dir/manifest.jsonl).
//
// The speaker id of a file is its stem up to the first '_' (e.g.
// "spk03_take1.wav" -> "spk03"). Splits are assigned per speaker, which makes
// leakage impossible; if speech_dir instead contains train/validation/test
// subdirectories those assignments are honored and validated.
DatasetManifest build_manifest(const std::string& speech_dir, const std::string& music_dir,
                               const std::string& out_dir, const SynthOptions& opts);

}  // namespace vocalis::synth
