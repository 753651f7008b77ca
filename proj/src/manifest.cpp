// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "vocalis/audio.hpp"
#include "vocalis/melspec.hpp"
#include "vocalis/mix.hpp"
#include "vocalis/rng.hpp"
#include "vocalis/vad.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vocalis::synth {

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

std::string to_string(Task t) { return t == Task::kSource ? "source" : "target"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "validation") return Split::kValidation;
  if (s == "test") return Split::kTest;
  throw std::runtime_error("unknown split: " + s);
}

Task task_from_string(const std::string& s) {
  if (s == "source") return Task::kSource;
  if (s == "target") return Task::kTarget;
  throw std::runtime_error("unknown task: " + s);
}

std::vector<ManifestEntry> DatasetManifest::in_split(Split s, Task t) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == s && e.task == t) out.push_back(e);
  }
  return out;
}

void DatasetManifest::check_split_invariant() const {
  std::map<std::string, Split> seen;
  for (const auto& e : entries) {
    if (e.speaker.empty()) continue;
    auto it = seen.find(e.speaker);
    if (it == seen.end()) {
      seen.emplace(e.speaker, e.split);
    } else if (it->second != e.split) {
      throw std::runtime_error("split leakage: speaker \"" + e.speaker +
                               "\" appears in " + to_string(it->second) + " and " +
                               to_string(e.split));
    }
  }
}

SplitSizes split_sizes(std::size_t n, double train_fraction, double validation_fraction) {
  SplitSizes s;
  if (n == 0) return s;
  if (n < 3) {
    s.train = n;
    return s;
  }
  s.validation = std::clamp<std::size_t>(
      static_cast<std::size_t>(validation_fraction * static_cast<double>(n) + 0.5), 1, n - 2);
  s.test = std::clamp<std::size_t>(
      n - static_cast<std::size_t>(train_fraction * static_cast<double>(n) + 0.5) - s.validation,
      1, n - 1 - s.validation);
  s.train = n - s.validation - s.test;
  return s;
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& e : manifest.entries) {
    json j{{"id", e.id},
           {"audio", e.audio_path},
           {"labels", e.label_path},
           {"split", to_string(e.split)},
           {"task", to_string(e.task)},
           {"speaker", e.speaker}};
    f << j.dump() << '\n';
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("unreadable file: " + path);
  DatasetManifest manifest;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.audio_path = j.at("audio").get<std::string>();
    e.label_path = j.at("labels").get<std::string>();
    e.split = split_from_string(j.at("split").get<std::string>());
    e.task = task_from_string(j.at("task").get<std::string>());
    e.speaker = j.value("speaker", "");
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

namespace {

std::vector<std::string> sorted_wavs(const std::string& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") {
      out.push_back(e.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string speaker_of(const std::string& path) {
  std::string stem = fs::path(path).stem().string();
  const auto underscore = stem.find('_');
  return underscore == std::string::npos ? stem : stem.substr(0, underscore);
}

struct SpeechFile {
  std::string path;
  std::string speaker;
  Split split;
  bool split_fixed;  // came from a train/validation/test subdirectory
};

std::vector<SpeechFile> collect_speech(const std::string& speech_dir) {
  std::vector<SpeechFile> files;
  const char* subdirs[] = {"train", "validation", "test"};
  const Split splits[] = {Split::kTrain, Split::kValidation, Split::kTest};
  bool any_subdir = false;
  for (int i = 0; i < 3; ++i) {
    const fs::path sub = fs::path(speech_dir) / subdirs[i];
    if (!fs::is_directory(sub)) continue;
    any_subdir = true;
    for (const auto& p : sorted_wavs(sub.string())) {
      files.push_back({p, speaker_of(p), splits[i], true});
    }
  }
  if (!any_subdir) {
    for (const auto& p : sorted_wavs(speech_dir)) {
      files.push_back({p, speaker_of(p), Split::kTrain, false});
    }
  }
  return files;
}

}  // namespace

DatasetManifest build_manifest(const std::string& speech_dir, const std::string& music_dir,
                               const std::string& out_dir, const SynthOptions& opts) {
  auto speech_files = collect_speech(speech_dir);
  if (speech_files.empty()) throw std::runtime_error("empty corpus: no speech WAVs in " + speech_dir);
  const auto music_files = sorted_wavs(music_dir);
  if (music_files.empty()) throw std::runtime_error("empty corpus: no music WAVs in " + music_dir);

  Rng rng(opts.seed);

  // Assign splits per speaker unless the directory layout already fixed them.
  const bool fixed = speech_files.front().split_fixed;
  if (!fixed) {
    std::vector<std::string> speakers;
    for (const auto& f : speech_files) speakers.push_back(f.speaker);
    std::sort(speakers.begin(), speakers.end());
    speakers.erase(std::unique(speakers.begin(), speakers.end()), speakers.end());
    rng.shuffle(speakers);
    const SplitSizes sizes = split_sizes(speakers.size(), opts.train_fraction,
                                         opts.validation_fraction);
    std::map<std::string, Split> assignment;
    for (std::size_t i = 0; i < speakers.size(); ++i) {
      assignment[speakers[i]] = i < sizes.train                      ? Split::kTrain
                                : i < sizes.train + sizes.validation ? Split::kValidation
                                                                     : Split::kTest;
    }
    for (auto& f : speech_files) f.split = assignment[f.speaker];
  }

  fs::create_directories(out_dir);
  VadConfig vad_cfg;
  vad_cfg.energy_threshold_db = opts.vad_threshold_db;
  vad_cfg.hangover_frames = opts.vad_hangover;

  DatasetManifest manifest;
  std::set<std::string> ids;
  for (const auto& sf : speech_files) {
    const std::string out_id = fs::path(sf.path).stem().string();
    if (!ids.insert(out_id).second) {
      throw std::runtime_error("duplicate output id: " + out_id);
    }

    const dsp::AudioClip speech = dsp::load_audio(sf.path);
    const FrameLabelTrack labels = detect_endpoints(speech, vad_cfg);

    // Seeded per clip: which music file and where in it to start.
    Rng clip_rng = rng.fork(std::hash<std::string>{}(out_id));
    const auto& music_path = music_files[clip_rng.below(music_files.size())];
    const dsp::AudioClip music = dsp::load_audio(music_path);
    std::size_t offset = 0;
    if (music.samples.size() > speech.samples.size()) {
      offset = clip_rng.below(music.samples.size() - speech.samples.size());
    }

    const MixResult mixed = mix_at_snr(speech, music, labels, opts.snr_db, offset);

    const std::string audio_out = (fs::path(out_dir) / (out_id + ".wav")).string();
    const std::string label_out = (fs::path(out_dir) / (out_id + ".labels.csv")).string();
    dsp::save_audio(audio_out, mixed.mixture);
    save_labels_csv(label_out, mixed.labels);

    ManifestEntry e;
    e.id = out_id;
    e.audio_path = audio_out;
    e.label_path = label_out;
    e.split = sf.split;
    e.task = Task::kSource;
    e.speaker = sf.speaker;
    manifest.entries.push_back(std::move(e));
  }

  manifest.check_split_invariant();
  save_manifest((fs::path(out_dir) / "manifest.jsonl").string(), manifest);
  return manifest;
}

}  // namespace vocalis::synth
