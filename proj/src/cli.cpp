// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vocalis/config.hpp"
#include "vocalis/manifest.hpp"
#include "vocalis/melspec.hpp"
#include "vocalis/report.hpp"
#include "vocalis/toygen.hpp"
#include "vocalis/trainer.hpp"
#include "vocalis/viz.hpp"

namespace fs = std::filesystem;

namespace vocalis::cli {

namespace {

// Guards an output directory against overlapping or interrupted runs. The
// marker stays behind after a crash, which is how partial runs are detected.
class RunMarker {
 public:
  RunMarker(const std::string& out_dir, const std::string& subcommand, bool force) {
    fs::create_directories(out_dir);
    path_ = (fs::path(out_dir) / (".vocalis-inprogress-" + subcommand)).string();
    if (fs::exists(path_) && !force) {
      throw std::runtime_error("partial run detected: marker " + path_ +
                               " exists (a previous run did not finish); rerun with --force "
                               "to overwrite");
    }
    std::ofstream f(path_);
    f << "running\n";
  }
  ~RunMarker() {
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  std::string path_;
};

// Tracks which flags the user set explicitly, for RunRecord provenance.
std::string describe_overrides(const CLI::App& cmd) {
  std::string out;
  for (const CLI::Option* opt : cmd.get_options()) {
    if (opt->count() > 0 && opt->get_name() != "--help") {
      if (!out.empty()) out += ' ';
      out += opt->get_name();
    }
  }
  return out;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw std::runtime_error("missing " + what + ": " + path);
  }
}

int run_toygen(const std::string& out_dir, int clips, int target_clips, double seconds,
               std::uint64_t seed, bool force) {
  RunMarker marker(out_dir, "toygen", force);
  synth::ToyOptions opts;
  opts.clip_count = clips;
  opts.clip_seconds = seconds;
  opts.seed = seed;
  synth::generate_toy_source_inputs((fs::path(out_dir) / "source_inputs").string(), opts);

  synth::ToyOptions target_opts = opts;
  target_opts.clip_count = target_clips;
  target_opts.seed = seed + 1;
  synth::generate_toy_target_corpus((fs::path(out_dir) / "target").string(), target_opts);
  std::cout << "toy corpus written under " << out_dir << "\n";
  return 0;
}

int run_synth(const PipelineConfig& cfg, const std::string& out_dir, bool force) {
  require_file(cfg.paths.speech_dir, "speech directory");
  require_file(cfg.paths.music_dir, "music directory");
  RunMarker marker(out_dir, "synth", force);
  synth::SynthOptions opts;
  opts.snr_db = cfg.snr_db;
  opts.seed = cfg.seed;
  const auto manifest = synth::build_manifest(cfg.paths.speech_dir, cfg.paths.music_dir, out_dir, opts);
  std::cout << "wrote " << manifest.entries.size() << " mixtures and manifest to " << out_dir
            << "\n";
  return 0;
}

int run_features(const std::string& manifest_path, const std::string& out_dir,
                 const dsp::StftConfig& stft, bool force) {
  require_file(manifest_path, "manifest");
  const auto manifest = synth::load_manifest(manifest_path);
  const std::string dir =
      out_dir.empty() ? fs::path(manifest_path).parent_path().string() : out_dir;
  RunMarker marker(dir, "features", force);
  int count = 0;
  for (const auto& e : manifest.entries) {
    const auto clip = dsp::load_audio(e.audio_path);
    const auto spec = dsp::log_mel(clip, stft, e.id);
    dsp::save_vlms((fs::path(dir) / (e.id + ".vlms")).string(), spec);
    ++count;
  }
  std::cout << "cached " << count << " spectrograms under " << dir << "\n";
  return 0;
}

int run_train_source(const PipelineConfig& cfg, const std::string& manifest_path,
                     const std::string& out_dir, const std::string& overrides, bool force) {
  require_file(manifest_path, "manifest");
  RunMarker marker(out_dir, "train-source", force);
  const auto manifest = synth::load_manifest(manifest_path);
  auto record = train::train_source(manifest, cfg.model, cfg.train, cfg.stft, out_dir);
  record.overrides = overrides;
  std::ofstream rec((fs::path(out_dir) / "source_cnn.run.json").string());
  rec << record.to_json() << '\n';
  std::cout << "source CNN: best validation F " << record.best_val_f << " at epoch "
            << record.best_epoch << "; checkpoint " << record.checkpoint_path << "\n";
  return 0;
}

int run_train_target(const PipelineConfig& cfg, const std::string& manifest_path,
                     const std::string& source_ckpt, const std::string& out_dir,
                     const std::string& overrides, bool force) {
  require_file(manifest_path, "manifest");
  const train::TransferPlan plan = train::TransferPlan::parse(
      cfg.transfer_layers, cfg.transfer_mode, static_cast<int>(cfg.model.channels.size()));
  if (!plan.is_none()) require_file(source_ckpt, "source checkpoint");
  RunMarker marker(out_dir, "train-target", force);
  const auto manifest = synth::load_manifest(manifest_path);
  auto record =
      train::train_target(manifest, source_ckpt, plan, cfg.model, cfg.train, cfg.stft, out_dir);
  record.overrides = overrides;
  std::ofstream rec((fs::path(out_dir) / "target_crnn.run.json").string());
  rec << record.to_json() << '\n';
  std::cout << "target CRNN (" << plan.describe() << "): best validation F " << record.best_val_f
            << " at epoch " << record.best_epoch << "; checkpoint " << record.checkpoint_path
            << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& manifest_path,
             const std::string& task, const dsp::StftConfig& stft, const std::string& out_dir,
             bool force) {
  require_file(checkpoint, "checkpoint");
  require_file(manifest_path, "manifest");
  RunMarker marker(out_dir, "eval", force);
  const auto manifest = synth::load_manifest(manifest_path);
  const auto report = eval::evaluate_checkpoint(checkpoint, manifest,
                                                synth::task_from_string(task), stft, out_dir);
  std::cout << eval::render_text_table(report);
  return 0;
}

int run_viz(const std::string& checkpoint, const std::string& layer, int filter, int steps,
            double eta, int time_extent, int freq_extent, std::uint64_t seed, bool raw_gradient,
            bool no_auto_eta, const std::string& out_dir, bool force) {
  require_file(checkpoint, "checkpoint");
  RunMarker marker(out_dir, "viz", force);
  viz::FilterPatternJob job;
  job.checkpoint_path = checkpoint;
  if (layer.size() != 2 || layer[0] != 'l' || layer[1] < '1' || layer[1] > '9') {
    throw std::runtime_error("bad layer name: " + layer + " (want l1|l2|l3)");
  }
  job.layer = layer[1] - '1';
  job.filter = filter;
  job.steps = steps;
  job.eta = eta;
  job.time_extent = time_extent;
  job.freq_extent = freq_extent;
  job.seed = seed;
  job.normalize_gradient = !raw_gradient;
  job.auto_eta = !no_auto_eta;

  const auto pattern = viz::filter_pattern(job);
  const std::string stem = layer + "_filter" + std::to_string(filter);
  viz::save_pgm((fs::path(out_dir) / (stem + ".pgm")).string(), pattern.image);
  viz::save_trace_csv((fs::path(out_dir) / (stem + ".trace.csv")).string(), pattern.activations);
  std::cout << "pattern " << stem << ": activation " << pattern.activations.front() << " -> "
            << pattern.activations.back() << " over " << steps << " steps (eta "
            << pattern.realized_eta << ")\n";
  return 0;
}

int run_export_features(const std::string& checkpoint, const std::string& manifest_path,
                        const std::string& task, const std::string& split,
                        const std::string& layer, int sample, std::uint64_t seed,
                        const dsp::StftConfig& stft, const std::string& out_csv) {
  require_file(checkpoint, "checkpoint");
  require_file(manifest_path, "manifest");
  if (layer.size() != 2 || layer[0] != 'l') throw std::runtime_error("bad layer name: " + layer);
  const auto manifest = synth::load_manifest(manifest_path);
  viz::export_features(checkpoint, manifest, synth::task_from_string(task),
                       synth::split_from_string(split), layer[1] - '1', sample, seed, stft,
                       out_csv);
  std::cout << "features written to " << out_csv << "\n";
  return 0;
}

int run_sweep_t(const PipelineConfig& cfg, const std::string& manifest_path,
                const std::string& out_dir, bool force) {
  require_file(manifest_path, "manifest");
  RunMarker marker(out_dir, "sweep-t", force);
  const auto manifest = synth::load_manifest(manifest_path);

  const int sweep[] = {5, 15, 25, 35, 45};
  std::ostringstream table;
  table << "T,best_val_f,best_epoch\n";
  for (const int t : sweep) {
    model::ModelConfig mc = cfg.model;
    mc.block_length = t;
    const std::string run_dir = (fs::path(out_dir) / ("t" + std::to_string(t))).string();
    const auto record = train::train_source(manifest, mc, cfg.train, cfg.stft, run_dir);
    table << t << ',' << record.best_val_f << ',' << record.best_epoch << '\n';
    std::cout << "T=" << t << ": best validation F " << record.best_val_f << "\n";
  }
  std::ofstream f((fs::path(out_dir) / "sweep_t.csv").string());
  f << table.str();
  std::cout << "sweep table written to " << (fs::path(out_dir) / "sweep_t.csv").string() << "\n";
  return 0;
}

int run_musdb_prep(const std::string& musdb_dir, const std::string& out_dir, double threshold_db,
                   int hangover, bool force) {
  require_file(musdb_dir, "MUSDB directory");
  RunMarker marker(out_dir, "musdb-prep", force);
  const auto manifest = eval::prepare_musdb(musdb_dir, out_dir, threshold_db, hangover);
  std::cout << "prepared " << manifest.entries.size() << " tracks under " << out_dir << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"vocalis: singing-voice detection via speech-to-singing transfer"};
  app.require_subcommand(1);

  // The config file seeds every bound default before flag parsing, so
  // explicit flags always win over file values.
  PipelineConfig cfg;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      continue;
    }
    try {
      cfg = load_config(path);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
    break;
  }
  app.add_option("--config", config_path, "pipeline config JSON");

  // Flags shared by several subcommands; bound per command below.
  std::string manifest_path, out_dir, checkpoint, source_ckpt;
  bool force = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_flag("--force", force, "ignore a leftover in-progress marker");
  };
  auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--lr", cfg.train.learning_rate, "learning rate");
    cmd->add_option("--batch", cfg.train.batch_size, "batch size");
    cmd->add_option("--epochs", cfg.train.max_epochs, "max epochs");
    cmd->add_option("--patience", cfg.train.patience, "early-stop patience");
    cmd->add_option("--seed", cfg.train.seed, "training seed");
    cmd->add_option("--context-t", cfg.model.block_length, "context block length (odd)");
  };

  // toygen
  auto* toygen = app.add_subcommand("toygen", "generate the bundled synthetic corpus");
  int toy_clips = 200, toy_target_clips = 20;
  double toy_seconds = 0.5;
  std::uint64_t toy_seed = 0;
  toygen->add_option("--out", out_dir, "output directory")->required();
  toygen->add_option("--clips", toy_clips, "source speech clip count");
  toygen->add_option("--target-clips", toy_target_clips, "target song count");
  toygen->add_option("--seconds", toy_seconds, "clip duration");
  toygen->add_option("--seed", toy_seed, "generator seed");
  add_common(toygen);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "mix speech + music into the source corpus");
  synth_cmd->add_option("--speech", cfg.paths.speech_dir, "clean speech directory");
  synth_cmd->add_option("--music", cfg.paths.music_dir, "instrumental music directory");
  synth_cmd->add_option("--snr", cfg.snr_db, "target SNR in dB");
  synth_cmd->add_option("--seed", cfg.seed, "pairing seed");
  synth_cmd->add_option("--out", out_dir, "output directory")->required();
  add_common(synth_cmd);

  // features
  auto* features = app.add_subcommand("features", "cache log-mel spectrograms (VLMS)");
  features->add_option("--manifest", manifest_path, "manifest JSONL")->required();
  features->add_option("--out", out_dir, "cache directory (default: alongside manifest)");
  add_common(features);

  // train-source
  auto* train_source = app.add_subcommand("train-source", "train the speech-activity CNN");
  train_source->add_option("--manifest", manifest_path, "source-task manifest")->required();
  train_source->add_option("--out", out_dir, "run directory")->required();
  add_train_flags(train_source);
  add_common(train_source);

  // train-target
  auto* train_target = app.add_subcommand("train-target", "train the singing-voice CRNN");
  train_target->add_option("--manifest", manifest_path, "target-task manifest")->required();
  train_target->add_option("--source-ckpt", source_ckpt, "source CNN checkpoint");
  train_target->add_option("--transfer-layer", cfg.transfer_layers, "l1|l2|l3|all|none");
  train_target->add_option("--mode", cfg.transfer_mode, "fixed|finetune");
  train_target->add_option("--out", out_dir, "run directory")->required();
  add_train_flags(train_target);
  add_common(train_target);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on the test split");
  std::string task = "target";
  eval_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--manifest", manifest_path, "manifest JSONL")->required();
  eval_cmd->add_option("--task", task, "source|target");
  eval_cmd->add_option("--out", out_dir, "report directory")->required();
  add_common(eval_cmd);

  // viz
  auto* viz_cmd = app.add_subcommand("viz", "gradient-ascent filter patterns");
  std::string viz_layer = "l1";
  int viz_filter = 0, viz_steps = 200, viz_time = 25, viz_freq = 64;
  double viz_eta = 0.1;
  std::uint64_t viz_seed = 0;
  bool viz_raw = false, viz_no_auto = false;
  viz_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  viz_cmd->add_option("--layer", viz_layer, "l1|l2|l3");
  viz_cmd->add_option("--filter", viz_filter, "filter index");
  viz_cmd->add_option("--steps", viz_steps, "ascent steps");
  viz_cmd->add_option("--eta", viz_eta, "ascent learning rate");
  viz_cmd->add_option("--time", viz_time, "input time extent");
  viz_cmd->add_option("--freq", viz_freq, "input frequency extent");
  viz_cmd->add_option("--seed", viz_seed, "noise seed");
  viz_cmd->add_flag("--raw-grad", viz_raw, "use the raw gradient (no RMS normalization)");
  viz_cmd->add_flag("--no-auto-eta", viz_no_auto, "do not halve eta to enforce monotone ascent");
  viz_cmd->add_option("--out", out_dir, "output directory")->required();
  add_common(viz_cmd);

  // export-features
  auto* export_cmd = app.add_subcommand("export-features", "flattened feature vectors as CSV");
  std::string exp_task = "target", exp_split = "test", exp_layer = "l3", exp_out;
  int exp_sample = 0;
  std::uint64_t exp_seed = 0;
  export_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  export_cmd->add_option("--manifest", manifest_path, "manifest JSONL")->required();
  export_cmd->add_option("--task", exp_task, "source|target");
  export_cmd->add_option("--split", exp_split, "train|validation|test");
  export_cmd->add_option("--layer", exp_layer, "l1|l2|l3");
  export_cmd->add_option("--sample", exp_sample, "sample size (0 = all blocks)");
  export_cmd->add_option("--seed", exp_seed, "sampling seed");
  export_cmd->add_option("--out", exp_out, "output CSV path")->required();

  // sweep-t
  auto* sweep = app.add_subcommand("sweep-t", "retrain the source CNN over T in {5,15,25,35,45}");
  sweep->add_option("--manifest", manifest_path, "source-task manifest")->required();
  sweep->add_option("--out", out_dir, "sweep directory")->required();
  add_train_flags(sweep);
  add_common(sweep);

  // musdb-prep
  auto* musdb = app.add_subcommand("musdb-prep", "derive labels from a local MUSDB18 copy");
  std::string musdb_dir;
  double musdb_threshold = 40.0;
  int musdb_hangover = 2;
  musdb->add_option("--musdb", musdb_dir, "decoded MUSDB directory (track folders)")->required();
  musdb->add_option("--threshold-db", musdb_threshold, "energy threshold below active level");
  musdb->add_option("--hangover", musdb_hangover, "dilation frames");
  musdb->add_option("--out", out_dir, "output directory")->required();
  add_common(musdb);

  // Accept --config in either position (before or after the subcommand);
  // the value itself was pre-scanned above.
  for (auto* sub : app.get_subcommands({})) {
    sub->add_option("--config", config_path, "pipeline config JSON");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    cfg.validate();

    if (toygen->parsed()) {
      return run_toygen(out_dir, toy_clips, toy_target_clips, toy_seconds, toy_seed, force);
    }
    if (synth_cmd->parsed()) return run_synth(cfg, out_dir, force);
    if (features->parsed()) return run_features(manifest_path, out_dir, cfg.stft, force);
    if (train_source->parsed()) {
      return run_train_source(cfg, manifest_path, out_dir, describe_overrides(*train_source),
                              force);
    }
    if (train_target->parsed()) {
      return run_train_target(cfg, manifest_path, source_ckpt, out_dir,
                              describe_overrides(*train_target), force);
    }
    if (eval_cmd->parsed()) {
      return run_eval(checkpoint, manifest_path, task, cfg.stft, out_dir, force);
    }
    if (viz_cmd->parsed()) {
      return run_viz(checkpoint, viz_layer, viz_filter, viz_steps, viz_eta, viz_time, viz_freq,
                     viz_seed, viz_raw, viz_no_auto, out_dir, force);
    }
    if (export_cmd->parsed()) {
      return run_export_features(checkpoint, manifest_path, exp_task, exp_split, exp_layer,
                                 exp_sample, exp_seed, cfg.stft, exp_out);
    }
    if (sweep->parsed()) return run_sweep_t(cfg, manifest_path, out_dir, force);
    if (musdb->parsed()) {
      return run_musdb_prep(musdb_dir, out_dir, musdb_threshold, musdb_hangover, force);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace vocalis::cli
