// Copyright 2026 Vocalis Authors
// Per-song and overall detection reports, detection timelines, and the
// MUSDB18 stem-layout adapter.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "vocalis/manifest.hpp"
#include "vocalis/metrics.hpp"
#include "vocalis/trainer.hpp"

namespace vocalis::eval {

struct SongRow {
  std::string song_id;
  std::int64_t off_frames = 0;  // ground-truth off
  std::int64_t on_frames = 0;   // ground-truth on
  Prf scores;
  ConfusionCounts counts;
};

// Rows per song plus an Overall row pooled over all frames (never the mean
// of per-song scores).
struct EvalReport {
  std::vector<SongRow> songs;
  SongRow overall;  // song_id = "Overall"
};

// Assembles a report from already-scored songs (pooling for the overall row).
EvalReport build_report(std::vector<SongRow> songs);

SongRow score_song(const std::string& id, const synth::FrameLabelTrack& pred,
                   const synth::FrameLabelTrack& truth);

// Runs the checkpointed model over every test-split clip of the task, writes
// report.txt, report.csv and per-song timeline CSVs (frame_index,truth,pred)
// under out_dir, and returns the report.
EvalReport evaluate_checkpoint(const std::string& checkpoint_path,
                               const synth::DatasetManifest& manifest, synth::Task task,
                               const dsp::StftConfig& stft, const std::string& out_dir);

std::string render_text_table(const EvalReport& report);
std::string render_csv(const EvalReport& report);

void write_timeline_csv(const std::string& path, const synth::FrameLabelTrack& truth,
                        const synth::FrameLabelTrack& pred);

// MUSDB18 adapter: walks a local decoded copy laid out as
//   <root>/<track name>/mixture.wav and <root>/<track name>/vocals.wav,
// derives frame truth by energy-thresholding the vocal stem (threshold_db
// below the stem's active level, with hangover), writes mixture-linked label
// CSVs and a manifest (task=target, split=test) under out_dir.
synth::DatasetManifest prepare_musdb(const std::string& musdb_dir, const std::string& out_dir,
                                     double threshold_db = 40.0, int hangover = 2);

}  // namespace vocalis::eval
