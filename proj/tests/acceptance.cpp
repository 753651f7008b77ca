// Copyright 2026 Vocalis Authors
//
// Acceptance suite: runs every shipping criterion end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.
//
// Licensed under the Apache License, Version 2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "test_util.hpp"
#include "vocalis/cli.hpp"
#include "vocalis/manifest.hpp"
#include "vocalis/melspec.hpp"
#include "vocalis/metrics.hpp"
#include "vocalis/mix.hpp"
#include "vocalis/model.hpp"
#include "vocalis/rng.hpp"
#include "vocalis/toygen.hpp"
#include "vocalis/trainer.hpp"
#include "vocalis/transfer.hpp"
#include "vocalis/viz.hpp"

using namespace vocalis;
using nn::Graph;
using nn::NdArray;
namespace fs = std::filesystem;

namespace {

struct Runner {
  int failures = 0;

  void run(int index, const std::string& name, const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %2d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", index, name.c_str(),
                seconds, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

model::ModelConfig tiny_config() {
  model::ModelConfig cfg;
  cfg.channels = {4, 4, 4};
  cfg.kernels = {{3, 3}, {3, 3}, {3, 3}};
  cfg.pools = {4, 2, 2};
  cfg.mel_bands = 16;
  cfg.block_length = 5;
  cfg.hidden = 6;
  return cfg;
}

// ---- criterion 1: finite-difference gradient suite ----------------------

bool gradient_suite(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  Rng rng(1000);

  // GLU convolution (both frequency paddings).
  for (int trial = 0; trial < 5; ++trial) {
    const int batch = 1 + static_cast<int>(rng.below(2));
    const int ci = 1 + static_cast<int>(rng.below(3));
    const int co = 1 + static_cast<int>(rng.below(3));
    const int t = 2 + static_cast<int>(rng.below(4));
    const int kt = (trial % 2 == 0) ? 3 : 1;
    const int kf = 3;
    const int f = kf + 2 + static_cast<int>(rng.below(4));
    const auto pad = (trial % 2 == 0) ? nn::FreqPad::kSame : nn::FreqPad::kValid;
    const auto x = testutil::random_values({batch, ci, t, f}, rng);
    const auto w = testutil::random_values({co, ci, kt, kf}, rng);
    const auto b = testutil::random_values({co}, rng);
    const auto v = testutil::random_values({co, ci, kt, kf}, rng);
    const auto c = testutil::random_values({co}, rng);
    NdArray<double> coeffs;
    {
      Graph<double> probe;
      const int y = probe.glu_gate(probe.conv2d(probe.leaf(x), probe.leaf(w), probe.leaf(b), pad),
                                   probe.conv2d(probe.leaf(x), probe.leaf(v), probe.leaf(c), pad));
      coeffs = testutil::random_values(probe.value(y).shape(), rng);
    }
    const auto report = testutil::fd_check(
        {x, w, b, v, c}, [&](Graph<double>& g, const std::vector<int>& ids) {
          return g.weighted_sum(g.glu_gate(g.conv2d(ids[0], ids[1], ids[2], pad),
                                           g.conv2d(ids[0], ids[3], ids[4], pad)),
                                coeffs);
        });
    worst = std::max(worst, report.max_rel_err);
  }

  // Frequency pooling.
  for (int trial = 0; trial < 5; ++trial) {
    const int f = 4 + static_cast<int>(rng.below(8));
    const int pool = 2 + static_cast<int>(rng.below(3));
    const auto x = testutil::gapped_values({2, 2, 3, f}, rng);
    NdArray<double> coeffs;
    {
      Graph<double> probe;
      coeffs =
          testutil::random_values(probe.value(probe.max_pool_freq(probe.leaf(x), pool)).shape(), rng);
    }
    const auto report =
        testutil::fd_check({x}, [&](Graph<double>& g, const std::vector<int>& ids) {
          return g.weighted_sum(g.max_pool_freq(ids[0], pool), coeffs);
        });
    worst = std::max(worst, report.max_rel_err);
  }

  // Recurrent cell.
  for (int trial = 0; trial < 5; ++trial) {
    const int batch = 1 + static_cast<int>(rng.below(2));
    const int steps = 1 + static_cast<int>(rng.below(4));
    const int n_in = 1 + static_cast<int>(rng.below(3));
    const int hidden = 1 + static_cast<int>(rng.below(4));
    const auto x = testutil::random_values({batch, steps, n_in}, rng);
    const auto wih = testutil::random_values({3 * hidden, n_in}, rng);
    const auto whh = testutil::random_values({3 * hidden, hidden}, rng);
    const auto bih = testutil::random_values({3 * hidden}, rng);
    const auto bhh = testutil::random_values({3 * hidden}, rng);
    NdArray<double> coeffs = testutil::random_values({batch, hidden}, rng);
    const auto report = testutil::fd_check(
        {x, wih, whh, bih, bhh}, [&](Graph<double>& g, const std::vector<int>& ids) {
          return g.weighted_sum(g.gru(ids[0], ids[1], ids[2], ids[3], ids[4]), coeffs);
        });
    worst = std::max(worst, report.max_rel_err);
  }

  // Batch normalization.
  for (int trial = 0; trial < 5; ++trial) {
    const int ch = 1 + static_cast<int>(rng.below(3));
    const auto x = testutil::random_values({2 + static_cast<int>(rng.below(2)), ch, 2, 3}, rng);
    const auto gamma = testutil::random_values({ch}, rng, 0.5, 1.5);
    const auto beta = testutil::random_values({ch}, rng);
    NdArray<double> coeffs = testutil::random_values(x.shape(), rng);
    const auto report = testutil::fd_check(
        {x, gamma, beta}, [&](Graph<double>& g, const std::vector<int>& ids) {
          return g.weighted_sum(g.batch_norm_train(ids[0], ids[1], ids[2], 1e-5), coeffs);
        });
    worst = std::max(worst, report.max_rel_err);
  }

  // Dense.
  for (int trial = 0; trial < 5; ++trial) {
    const int batch = 1 + static_cast<int>(rng.below(4));
    const int n_in = 1 + static_cast<int>(rng.below(6));
    const int m = 1 + static_cast<int>(rng.below(4));
    const auto x = testutil::random_values({batch, n_in}, rng);
    const auto w = testutil::random_values({m, n_in}, rng);
    const auto b = testutil::random_values({m}, rng);
    NdArray<double> coeffs = testutil::random_values({batch, m}, rng);
    const auto report =
        testutil::fd_check({x, w, b}, [&](Graph<double>& g, const std::vector<int>& ids) {
          return g.weighted_sum(g.dense(ids[0], ids[1], ids[2]), coeffs);
        });
    worst = std::max(worst, report.max_rel_err);
  }

  // Softmax + binary cross entropy.
  for (int trial = 0; trial < 5; ++trial) {
    const int batch = 1 + static_cast<int>(rng.below(6));
    const auto logits = testutil::random_values({batch, 2}, rng, -3.0, 3.0);
    std::vector<int> labels(static_cast<std::size_t>(batch));
    for (auto& l : labels) l = static_cast<int>(rng.below(2));
    const auto report =
        testutil::fd_check({logits}, [&](Graph<double>& g, const std::vector<int>& ids) {
          return g.softmax_bce(ids[0], labels);
        });
    worst = std::max(worst, report.max_rel_err);
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max rel err %.3g, %.1fs", worst, seconds);
  detail = buf;
  return worst < 1e-4 && seconds < 120.0;
}

// ---- criterion 2: brute-force oracle equivalence -------------------------

bool oracle_equivalence(std::string& detail) {
  Rng rng(2000);
  double worst = 0.0;

  for (int trial = 0; trial < 40; ++trial) {
    const int batch = 1 + static_cast<int>(rng.below(3));
    const int ci = 1 + static_cast<int>(rng.below(3));
    const int co = 1 + static_cast<int>(rng.below(3));
    const int t = 2 + static_cast<int>(rng.below(5));
    const int kt = (rng.below(2) == 0) ? 1 : 3;
    const int kf = (rng.below(2) == 0) ? 1 : 3;
    const int f = kf + 2 + static_cast<int>(rng.below(5));
    const bool same = rng.below(2) == 0;
    const auto x = testutil::random_values({batch, ci, t, f}, rng);
    const auto w = testutil::random_values({co, ci, kt, kf}, rng);
    const auto b = testutil::random_values({co}, rng);

    Graph<double> g;
    const int y = g.conv2d(g.leaf(x), g.leaf(w), g.leaf(b),
                           same ? nn::FreqPad::kSame : nn::FreqPad::kValid);
    const auto oracle = testutil::conv2d_oracle(x, w, b, same);
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      worst = std::max(worst, std::abs(g.value(y)[i] - oracle[i]));
    }
  }

  for (int trial = 0; trial < 30; ++trial) {
    const int f = 2 + static_cast<int>(rng.below(12));
    const int pool = 1 + static_cast<int>(rng.below(5));
    const auto x = testutil::random_values({2, 2, 3, f}, rng);
    Graph<double> g;
    const int y = g.max_pool_freq(g.leaf(x), pool);
    const auto oracle = testutil::max_pool_freq_oracle(x, pool);
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      if (g.value(y)[i] != oracle[i]) {
        detail = "pooling mismatch";
        return false;
      }
    }
  }

  for (int trial = 0; trial < 30; ++trial) {
    const int n = 200 + static_cast<int>(rng.below(800));
    synth::FrameLabelTrack pred, truth;
    for (int i = 0; i < n; ++i) {
      pred.labels.push_back(static_cast<std::uint8_t>(rng.below(2)));
      truth.labels.push_back(static_cast<std::uint8_t>(rng.below(2)));
    }
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (int i = 0; i < n; ++i) {
      if (pred.labels[i] && truth.labels[i]) ++tp;
      else if (pred.labels[i]) ++fp;
      else if (truth.labels[i]) ++fn;
      else ++tn;
    }
    const auto c = eval::score(pred, truth);
    if (c.n_tp != tp || c.n_fp != fp || c.n_fn != fn || c.n_tn != tn) {
      detail = "counting mismatch";
      return false;
    }
  }

  char buf[64];
  std::snprintf(buf, sizeof(buf), "100 instances, conv max abs diff %.3g", worst);
  detail = buf;
  return worst < 1e-6;
}

// ---- criterion 3: reference F-score fixtures ------------------------------

bool prf_fixtures(std::string& detail) {
  const auto f_of = [](double p, double r) { return 2.0 * p * r / (p + r); };
  const double f1 = f_of(0.861, 0.932);
  const double f2 = f_of(0.901, 0.960);

  // And through the ConfusionCounts path at frame scale.
  const auto via_counts = [&](double p, double r) {
    const std::int64_t tp = 100000;
    const auto fp = static_cast<std::int64_t>(std::llround(tp * (1.0 - p) / p));
    const auto fn = static_cast<std::int64_t>(std::llround(tp * (1.0 - r) / r));
    return eval::prf({tp, fp, fn, 0}).f_score;
  };
  char buf[96];
  std::snprintf(buf, sizeof(buf), "F(0.861,0.932)=%.4f F(0.901,0.960)=%.4f", f1, f2);
  detail = buf;
  return std::abs(f1 - 0.8951) < 0.0005 && std::abs(f2 - 0.9296) < 0.0005 &&
         std::abs(via_counts(0.861, 0.932) - 0.8951) < 0.0005 &&
         std::abs(via_counts(0.901, 0.960) - 0.9296) < 0.0005;
}

// ---- criterion 4: mixing fidelity ----------------------------------------

bool mixing_fidelity(std::string& detail) {
  Rng rng(4000);
  double worst = 0.0;
  for (const double snr : {-6.0, 0.0, 6.0}) {
    for (int trial = 0; trial < 4; ++trial) {
      auto [speech, plan] = synth::toy_speech_clip(rng, 0.6);
      auto music = synth::toy_music_clip(rng, 0.8);
      const auto labels = synth::labels_from_plan(plan, 16000);
      if (labels.count_on() == 0) continue;

      const auto mixed = synth::mix_at_snr(speech, music, labels, snr, 55);

      // Labels pass through exactly.
      if (mixed.labels.labels != labels.labels) {
        detail = "labels changed";
        return false;
      }

      std::vector<float> music_part(mixed.mixture.samples.size());
      for (std::size_t i = 0; i < music_part.size(); ++i) {
        music_part[i] =
            mixed.mixture.samples[i] / static_cast<float>(mixed.rescale) - speech.samples[i];
      }
      const double measured =
          20.0 * std::log10(synth::rms_over_on_frames(speech, labels, 40.0) /
                            synth::rms(music_part));
      worst = std::max(worst, std::abs(measured - snr));
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max |SNR error| %.4f dB", worst);
  detail = buf;
  return worst < 0.1;
}

// ---- criterion 5: transfer contracts --------------------------------------

bool transfer_contracts(std::string& detail) {
  const auto cfg = tiny_config();
  Rng rng_a(1), rng_b(2);
  model::SourceCnn source(cfg, rng_a);
  const auto ckpt = source.to_checkpoint();

  // Copy exactness.
  model::TargetCrnn finetuned(cfg, rng_b);
  apply_transfer(ckpt, finetuned, train::TransferPlan::parse("l1", "finetune"));
  for (int k = 0; k < 4; ++k) {
    const auto* src = source.conv_stack().layer(0).transferable()[static_cast<std::size_t>(k)];
    const auto* dst = finetuned.conv_stack().layer(0).transferable()[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < src->value.size(); ++i) {
      if (src->value[i] != dst->value[i]) {
        detail = "copied arrays not bit-equal";
        return false;
      }
    }
  }

  // Freeze exactness over 100 optimizer steps.
  Rng rng_c(3);
  model::TargetCrnn fixed(cfg, rng_c);
  apply_transfer(ckpt, fixed, train::TransferPlan::parse("l1", "fixed"));
  std::vector<NdArray<float>> frozen_before;
  for (auto* p : fixed.conv_stack().layer(0).transferable()) frozen_before.push_back(p->value);

  nn::Adam<float> adam(fixed.parameters());
  Rng data(9);
  for (int step = 0; step < 100; ++step) {
    NdArray<float> x({4, 1, cfg.block_length, cfg.mel_bands});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(data.uniform(-1.0, 1.0));
    for (auto* p : fixed.parameters()) p->zero_grad();
    Graph<float> g;
    const int logits = fixed.forward_logits(g, g.leaf(std::move(x)), true, nullptr);
    g.backward(g.softmax_bce(logits, {0, 1, 1, 0}));
    fixed.accumulate_grads(g);
    adam.step();
  }
  for (int k = 0; k < 4; ++k) {
    const auto* p = fixed.conv_stack().layer(0).transferable()[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      if (p->value[i] != frozen_before[static_cast<std::size_t>(k)][i]) {
        detail = "frozen arrays moved";
        return false;
      }
    }
  }

  // Trainable-count accounting, hand-enumerated.
  Rng rng_d(4);
  model::TargetCrnn all_fixed(cfg, rng_d);
  const std::size_t full = all_fixed.trainable_parameter_count();
  apply_transfer(ckpt, all_fixed, train::TransferPlan::parse("all", "fixed"));
  // conv1 W,V 2*4*1*9=72 + b,c 8 = 80; conv2/conv3 2*4*4*9=288 + 8 = 296.
  const std::size_t conv_params = 80 + 296 + 296;
  if (all_fixed.trainable_parameter_count() != full - conv_params) {
    detail = "trainable count mismatch (tiny)";
    return false;
  }

  // Default architecture, against the hand enumeration in the unit suite.
  model::ModelConfig def;
  Rng rng_e(5), rng_f(6);
  model::SourceCnn def_cnn(def, rng_e);
  model::TargetCrnn def_crnn(def, rng_f);
  if (def_cnn.trainable_parameter_count() != 9730u ||
      def_crnn.trainable_parameter_count() != 14562u) {
    detail = "trainable count mismatch (default)";
    return false;
  }
  detail = "copy, freeze(100 steps), counts";
  return true;
}

// ---- criterion 6: toy source task -----------------------------------------

std::string g_source_ckpt_path;  // reused by criterion 7

bool toy_source_task(std::string& detail, const std::string& work) {
  const auto start = std::chrono::steady_clock::now();

  synth::ToyOptions opts;
  opts.clip_count = 200;
  opts.clip_seconds = 0.5;
  opts.seed = 11;
  synth::generate_toy_source_inputs(work + "/toy", opts);
  synth::SynthOptions synth_opts;
  synth_opts.seed = 11;
  const auto manifest =
      synth::build_manifest(work + "/toy/speech", work + "/toy/music", work + "/source", synth_opts);

  model::ModelConfig model_cfg;  // full architecture, T=25, 64 mel bands
  train::TrainConfig train_cfg;
  train_cfg.max_epochs = 20;
  train_cfg.patience = 5;
  train_cfg.batch_size = 64;
  train_cfg.seed = 1;

  const auto record =
      train::train_source(manifest, model_cfg, train_cfg, {}, work + "/source_run");
  g_source_ckpt_path = record.checkpoint_path;

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[128];
  std::snprintf(buf, sizeof(buf), "best val F %.4f at epoch %d of %zu, %.0fs", record.best_val_f,
                record.best_epoch, record.epochs.size(), seconds);
  detail = buf;
  return record.best_val_f >= 0.95 && record.best_epoch <= 20 && seconds < 600.0;
}

// ---- criterion 7: transfer smoke test --------------------------------------

bool transfer_smoke(std::string& detail, const std::string& work) {
  if (g_source_ckpt_path.empty()) {
    detail = "no source checkpoint from criterion 6";
    return false;
  }
  synth::ToyOptions opts;
  opts.clip_count = 20;
  opts.clip_seconds = 0.5;
  opts.seed = 31;
  const auto manifest = synth::generate_toy_target_corpus(work + "/target", opts);

  model::ModelConfig model_cfg;
  const dsp::StftConfig stft;
  const auto test_clips = train::load_clips(manifest, synth::Task::kTarget,
                                            synth::Split::kTest, stft);

  const auto run_one = [&](const train::TransferPlan& plan, std::uint64_t seed) {
    const auto train_clips =
        train::load_clips(manifest, synth::Task::kTarget, synth::Split::kTrain, stft);
    const auto val_clips =
        train::load_clips(manifest, synth::Task::kTarget, synth::Split::kValidation, stft);
    train::TrainConfig tc;
    tc.max_epochs = 8;
    tc.patience = 8;
    tc.batch_size = 32;
    tc.seed = seed;
    Rng init(seed);
    model::TargetCrnn model(model_cfg, init);
    if (!plan.is_none()) {
      apply_transfer(nn::load_checkpoint(g_source_ckpt_path), model, plan);
    }
    train::fit(model, train_clips, val_clips, tc, plan.describe());
    return eval::prf(train::evaluate_clips(model, test_clips)).f_score;
  };

  std::vector<double> scratch, transfer;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    scratch.push_back(run_one(train::TransferPlan::parse("none", "finetune"), seed));
    transfer.push_back(run_one(train::TransferPlan::parse("l1", "finetune"), seed));
  }
  std::sort(scratch.begin(), scratch.end());
  std::sort(transfer.begin(), transfer.end());
  const double median_scratch = scratch[2];
  const double median_transfer = transfer[2];

  char buf[128];
  std::snprintf(buf, sizeof(buf), "median test F: transfer %.4f vs scratch %.4f", median_transfer,
                median_scratch);
  detail = buf;
  return median_transfer >= median_scratch - 0.01;
}

// ---- criterion 8: shape invariant ------------------------------------------

bool shape_invariant(std::string& detail) {
  model::ModelConfig cfg;  // T=25, 64 mel bands, pools 4/4/4
  Rng rng(8);
  model::SourceCnn model(cfg, rng);
  Rng data(80);
  const int expected_f[] = {16, 4, 1};
  for (int layer = 0; layer < 3; ++layer) {
    NdArray<float> x({2, 1, 25, 64});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(data.uniform(-1.0, 1.0));
    Graph<float> g;
    const int y = model.conv_stack().forward(g, g.leaf(std::move(x)), false, layer);
    if (g.value(y).extent(2) != 25 || g.value(y).extent(3) != expected_f[layer]) {
      detail = "layer " + std::to_string(layer + 1) + " produced " + g.value(y).shape_str();
      return false;
    }
  }
  detail = "time 25 preserved; frequency 64->16->4->1";
  return true;
}

// ---- criterion 9: visualization ascent --------------------------------------

bool viz_ascent(std::string& detail) {
  model::ModelConfig cfg;
  cfg.block_length = 15;  // smaller canvas keeps the ascent cheap
  Rng rng(9);
  model::SourceCnn model(cfg, rng);

  const int jobs[10][2] = {{0, 0}, {0, 5}, {0, 11}, {1, 1}, {1, 7},
                           {1, 14}, {2, 2}, {2, 8}, {2, 13}, {2, 15}};
  for (const auto& [layer, filter] : jobs) {
    viz::FilterPatternJob job;
    job.layer = layer;
    job.filter = filter;
    job.time_extent = cfg.block_length;
    job.freq_extent = cfg.mel_bands;
    job.steps = 25;
    job.eta = 0.2;
    job.seed = static_cast<std::uint64_t>(layer * 100 + filter);
    const auto pattern = viz::filter_pattern(model, job);
    for (std::size_t i = 1; i < pattern.activations.size(); ++i) {
      if (pattern.activations[i] < pattern.activations[i - 1] - 1e-7) {
        detail = "trace decreased (layer " + std::to_string(layer + 1) + ", filter " +
                 std::to_string(filter) + ")";
        return false;
      }
    }
  }
  detail = "10 filters across L1-L3 monotone";
  return true;
}

// ---- criterion 10: pipeline determinism --------------------------------------

bool pipeline_determinism(std::string& detail, const std::string& work) {
  const auto run_pipeline = [&](const std::string& dir) {
    const std::vector<std::vector<std::string>> commands = {
        {"toygen", "--out", dir + "/toy", "--clips", "10", "--target-clips", "6", "--seconds",
         "0.4", "--seed", "5"},
        {"synth", "--speech", dir + "/toy/source_inputs/speech", "--music",
         dir + "/toy/source_inputs/music", "--snr", "0", "--seed", "5", "--out", dir + "/source"},
        {"train-source", "--manifest", dir + "/source/manifest.jsonl", "--out", dir + "/run_src",
         "--epochs", "2", "--batch", "32", "--seed", "5"},
        {"train-target", "--manifest", dir + "/toy/target/manifest.jsonl", "--source-ckpt",
         dir + "/run_src/source_cnn.vckp", "--transfer-layer", "l1", "--mode", "finetune",
         "--out", dir + "/run_tgt", "--epochs", "2", "--batch", "32", "--seed", "5"},
        {"eval", "--checkpoint", dir + "/run_tgt/target_crnn.vckp", "--manifest",
         dir + "/toy/target/manifest.jsonl", "--out", dir + "/eval"},
    };
    for (const auto& cmd : commands) {
      if (cli::run(cmd) != 0) return false;
    }
    return true;
  };

  const std::string a = work + "/detA", b = work + "/detB";
  if (!run_pipeline(a) || !run_pipeline(b)) {
    detail = "pipeline run failed";
    return false;
  }

  // Byte-identical artifacts (checkpoints, optimizer state, reports,
  // timelines, mixtures, labels). Manifests and run JSONs embed paths or
  // wall-clock, so they are compared structurally below.
  std::vector<std::string> rel = {"run_src/source_cnn.vckp", "run_src/source_cnn.vckp.opt",
                                  "run_tgt/target_crnn.vckp", "run_tgt/target_crnn.vckp.opt",
                                  "eval/report.csv", "eval/report.txt"};
  for (const auto& e : fs::directory_iterator(a + "/source")) {
    if (e.path().extension() == ".wav" || e.path().extension() == ".csv") {
      rel.push_back("source/" + e.path().filename().string());
    }
  }
  for (const auto& e : fs::directory_iterator(a + "/eval")) {
    if (e.path().filename().string().find("timeline") != std::string::npos) {
      rel.push_back("eval/" + e.path().filename().string());
    }
  }
  for (const auto& r : rel) {
    if (!testutil::files_identical(a + "/" + r, b + "/" + r)) {
      detail = "artifact differs: " + r;
      return false;
    }
  }

  // Loss trajectories match exactly (wall-clock excluded).
  for (const char* run : {"run_src/source_cnn.run.json", "run_tgt/target_crnn.run.json"}) {
    std::ifstream fa(a + "/" + run), fb(b + "/" + run);
    const auto ja = nlohmann::json::parse(fa);
    const auto jb = nlohmann::json::parse(fb);
    if (ja["epochs"].size() != jb["epochs"].size()) {
      detail = "epoch counts differ";
      return false;
    }
    for (std::size_t i = 0; i < ja["epochs"].size(); ++i) {
      if (ja["epochs"][i]["train_loss"] != jb["epochs"][i]["train_loss"] ||
          ja["epochs"][i]["val_f"] != jb["epochs"][i]["val_f"]) {
        detail = "loss trajectories differ";
        return false;
      }
    }
  }

  char buf[64];
  std::snprintf(buf, sizeof(buf), "%zu artifacts byte-identical", rel.size());
  detail = buf;
  return true;
}

}  // namespace

int main() {
  testutil::TempDir work("acceptance");
  Runner runner;

  runner.run(1, "gradient suite: finite differences across all ops", gradient_suite);
  runner.run(2, "oracle equivalence: conv/pool/counting vs brute force", oracle_equivalence);
  runner.run(3, "reference F-score fixtures", prf_fixtures);
  runner.run(4, "mixing fidelity at -6/0/+6 dB", mixing_fidelity);
  runner.run(5, "transfer contracts: copy, freeze, counts", transfer_contracts);
  runner.run(6, "toy source task reaches F >= 0.95 within 20 epochs",
             [&](std::string& d) { return toy_source_task(d, work.path()); });
  runner.run(7, "transfer smoke test: non-inferior to from-scratch",
             [&](std::string& d) { return transfer_smoke(d, work.path()); });
  runner.run(8, "conv stack preserves T=25 and reduces 64 bands to 1", shape_invariant);
  runner.run(9, "filter-pattern ascent is non-decreasing", viz_ascent);
  runner.run(10, "full toy pipeline is byte-deterministic",
             [&](std::string& d) { return pipeline_determinism(d, work.path()); });

  if (runner.failures == 0) {
    std::printf("all 10 criteria PASS\n");
  } else {
    std::printf("%d criteria FAILED\n", runner.failures);
  }
  return runner.failures;
}
