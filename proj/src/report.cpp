// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace vocalis::eval {

SongRow score_song(const std::string& id, const synth::FrameLabelTrack& pred,
                   const synth::FrameLabelTrack& truth) {
  SongRow row;
  row.song_id = id;
  row.counts = score(pred, truth);
  row.on_frames = row.counts.n_tp + row.counts.n_fn;
  row.off_frames = row.counts.n_fp + row.counts.n_tn;
  row.scores = prf(row.counts);
  return row;
}

EvalReport build_report(std::vector<SongRow> songs) {
  EvalReport report;
  report.overall.song_id = "Overall";
  for (auto& row : songs) {
    report.overall.counts += row.counts;
    report.overall.on_frames += row.on_frames;
    report.overall.off_frames += row.off_frames;
  }
  report.overall.scores = prf(report.overall.counts);
  report.songs = std::move(songs);
  return report;
}

std::string render_text_table(const EvalReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %10s %10s %8s %8s %8s\n", "song", "off", "on",
                "P(%)", "R(%)", "F(%)");
  os << line;
  const auto emit = [&](const SongRow& r) {
    std::snprintf(line, sizeof(line), "%-16s %10lld %10lld %8.1f %8.1f %8.1f\n",
                  r.song_id.c_str(), static_cast<long long>(r.off_frames),
                  static_cast<long long>(r.on_frames), 100.0 * r.scores.precision,
                  100.0 * r.scores.recall, 100.0 * r.scores.f_score);
    os << line;
  };
  for (const auto& r : report.songs) emit(r);
  emit(report.overall);
  return os.str();
}

std::string render_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "song,off_frames,on_frames,precision,recall,f_score\n";
  const auto emit = [&](const SongRow& r) {
    char line[160];
    std::snprintf(line, sizeof(line), "%s,%lld,%lld,%.6f,%.6f,%.6f\n", r.song_id.c_str(),
                  static_cast<long long>(r.off_frames), static_cast<long long>(r.on_frames),
                  r.scores.precision, r.scores.recall, r.scores.f_score);
    os << line;
  };
  for (const auto& r : report.songs) emit(r);
  emit(report.overall);
  return os.str();
}

void write_timeline_csv(const std::string& path, const synth::FrameLabelTrack& truth,
                        const synth::FrameLabelTrack& pred) {
  if (truth.size() != pred.size()) {
    throw std::invalid_argument("timeline: truth and prediction lengths differ");
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "frame_index,truth,pred\n";
  for (std::size_t t = 0; t < truth.size(); ++t) {
    f << t << ',' << static_cast<int>(truth.labels[t]) << ',' << static_cast<int>(pred.labels[t])
      << '\n';
  }
}

EvalReport evaluate_checkpoint(const std::string& checkpoint_path,
                               const synth::DatasetManifest& manifest, synth::Task task,
                               const dsp::StftConfig& stft, const std::string& out_dir) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(checkpoint_path);
  auto model = model::detector_from_checkpoint(ckpt);

  const auto clips = train::load_clips(manifest, task, synth::Split::kTest, stft);
  fs::create_directories(out_dir);

  std::vector<SongRow> rows;
  for (const auto& clip : clips) {
    const auto pred = train::predict_frame_labels(*model, clip.spec);
    rows.push_back(score_song(clip.id, pred, clip.labels));
    write_timeline_csv((fs::path(out_dir) / (clip.id + ".timeline.csv")).string(), clip.labels,
                       pred);
  }
  EvalReport report = build_report(std::move(rows));

  std::ofstream txt((fs::path(out_dir) / "report.txt").string());
  txt << render_text_table(report);
  std::ofstream csv((fs::path(out_dir) / "report.csv").string());
  csv << render_csv(report);
  return report;
}

synth::DatasetManifest prepare_musdb(const std::string& musdb_dir, const std::string& out_dir,
                                     double threshold_db, int hangover) {
  std::vector<std::string> tracks;
  for (const auto& e : fs::directory_iterator(musdb_dir)) {
    if (!e.is_directory()) continue;
    if (fs::exists(e.path() / "mixture.wav") && fs::exists(e.path() / "vocals.wav")) {
      tracks.push_back(e.path().string());
    }
  }
  std::sort(tracks.begin(), tracks.end());
  if (tracks.empty()) {
    throw std::runtime_error("empty corpus: no track directories with mixture.wav + vocals.wav in " +
                             musdb_dir);
  }

  fs::create_directories(out_dir);
  synth::DatasetManifest manifest;
  for (const auto& track : tracks) {
    const std::string id = fs::path(track).filename().string();
    const dsp::AudioClip vocals = dsp::load_audio((fs::path(track) / "vocals.wav").string());

    synth::VadConfig vad;
    vad.energy_threshold_db = threshold_db;
    vad.hangover_frames = hangover;
    const synth::FrameLabelTrack truth = synth::detect_endpoints(vocals, vad);

    const std::string label_path = (fs::path(out_dir) / (id + ".labels.csv")).string();
    synth::save_labels_csv(label_path, truth);

    synth::ManifestEntry entry;
    entry.id = id;
    entry.audio_path = (fs::path(track) / "mixture.wav").string();
    entry.label_path = label_path;
    entry.split = synth::Split::kTest;
    entry.task = synth::Task::kTarget;
    entry.speaker = id;
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest((fs::path(out_dir) / "manifest.jsonl").string(), manifest);
  return manifest;
}

}  // namespace vocalis::eval
