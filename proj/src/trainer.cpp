// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/trainer.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "vocalis/nn_ops.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vocalis::train {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("train config: learning rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("train config: batch size must be positive");
  if (max_epochs < 1) throw std::runtime_error("no training performed: max epochs is 0");
  if (patience < 1) throw std::invalid_argument("train config: patience must be >= 1");
}

std::string RunRecord::to_json() const {
  json j;
  j["plan"] = plan;
  j["seed"] = seed;
  j["trainable_params"] = trainable_params;
  j["best_epoch"] = best_epoch;
  j["best_val_f"] = best_val_f;
  j["checkpoint"] = checkpoint_path;
  if (!config_json.empty()) j["config"] = json::parse(config_json);
  if (!overrides.empty()) j["overrides"] = overrides;
  j["epochs"] = json::array();
  for (const auto& e : epochs) {
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"val_precision", e.val_precision},
                           {"val_recall", e.val_recall},
                           {"val_f", e.val_f},
                           {"seconds", e.seconds}});
  }
  return j.dump(2);
}

std::vector<ClipData> load_clips(const synth::DatasetManifest& manifest, synth::Task task,
                                 synth::Split split, const dsp::StftConfig& stft) {
  const auto entries = manifest.in_split(split, task);
  if (entries.empty()) {
    throw std::runtime_error("empty split: no " + synth::to_string(task) + " " +
                             synth::to_string(split) + " entries in manifest");
  }
  std::vector<ClipData> clips;
  clips.reserve(entries.size());
  for (const auto& e : entries) {
    ClipData clip;
    clip.id = e.id;
    const dsp::AudioClip audio = dsp::load_audio(e.audio_path);
    clip.spec = dsp::log_mel(audio, stft, e.id);
    clip.labels = synth::load_labels_csv(e.label_path);
    if (static_cast<int>(clip.labels.size()) != clip.spec.frames) {
      throw std::runtime_error("label/spectrogram misalignment for clip " + e.id + ": " +
                               std::to_string(clip.labels.size()) + " labels vs " +
                               std::to_string(clip.spec.frames) + " frames");
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

namespace {

struct BlockRef {
  int clip;
  int frame;
};

// Gathers a batch of context blocks into x[B,1,T,mel].
nn::NdArray<float> gather_batch(const std::vector<ClipData>& clips,
                                const std::vector<BlockRef>& refs, std::size_t begin,
                                std::size_t end, int block_length, std::vector<int>* labels) {
  const int batch = static_cast<int>(end - begin);
  const int mel = clips.front().spec.bands;
  nn::NdArray<float> x({batch, 1, block_length, mel});
  if (labels) labels->resize(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    const BlockRef& ref = refs[begin + static_cast<std::size_t>(i)];
    const auto& clip = clips[static_cast<std::size_t>(ref.clip)];
    model::gather_block(clip.spec, ref.frame, block_length,
                        &x.at4(i, 0, 0, 0));
    if (labels) (*labels)[static_cast<std::size_t>(i)] = clip.labels.on(static_cast<std::size_t>(ref.frame)) ? 1 : 0;
  }
  return x;
}

// Snapshot of every parameter (including buffers) for best-epoch restore.
std::vector<nn::NdArray<float>> snapshot(model::Detector& model) {
  std::vector<nn::NdArray<float>> out;
  for (auto* p : model.parameters()) out.push_back(p->value);
  return out;
}

void restore(model::Detector& model, const std::vector<nn::NdArray<float>>& snap) {
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

nn::Checkpoint adam_state(const nn::Adam<float>& adam) {
  nn::Checkpoint state;
  state.put_scalar("adam.step", static_cast<float>(adam.step_count()));
  state.put_scalar("adam.learning_rate", adam.config().learning_rate);
  state.put_scalar("adam.beta1", adam.config().beta1);
  state.put_scalar("adam.beta2", adam.config().beta2);
  state.put_scalar("adam.epsilon", adam.config().epsilon);
  const auto& params = adam.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.put("adam.m." + params[k]->name, adam.first_moment(k));
    state.put("adam.v." + params[k]->name, adam.second_moment(k));
  }
  return state;
}

}  // namespace

synth::FrameLabelTrack predict_frame_labels(model::Detector& model,
                                            const dsp::LogMelSpectrogram& spec, int batch_size) {
  const int block_length = model.config().block_length;
  synth::FrameLabelTrack out;
  out.labels.resize(static_cast<std::size_t>(spec.frames));
  for (int begin = 0; begin < spec.frames; begin += batch_size) {
    const int end = std::min(begin + batch_size, spec.frames);
    const int batch = end - begin;
    nn::NdArray<float> x({batch, 1, block_length, spec.bands});
    for (int i = 0; i < batch; ++i) {
      model::gather_block(spec, begin + i, block_length, &x.at4(i, 0, 0, 0));
    }
    const auto probs = model.predict_probs(x);
    for (int i = 0; i < batch; ++i) {
      out.labels[static_cast<std::size_t>(begin + i)] =
          static_cast<std::uint8_t>(nn::decide(probs.at2(i, 0), probs.at2(i, 1)));
    }
  }
  return out;
}

eval::ConfusionCounts evaluate_clips(model::Detector& model, const std::vector<ClipData>& clips,
                                     int batch_size) {
  eval::ConfusionCounts pooled;
  for (const auto& clip : clips) {
    const auto pred = predict_frame_labels(model, clip.spec, batch_size);
    pooled += eval::score(pred, clip.labels);
  }
  return pooled;
}

RunRecord fit(model::Detector& model, const std::vector<ClipData>& train_clips,
              const std::vector<ClipData>& val_clips, const TrainConfig& cfg,
              const std::string& plan_desc) {
  return fit(model, train_clips, val_clips, cfg, plan_desc, nullptr);
}

RunRecord fit(model::Detector& model, const std::vector<ClipData>& train_clips,
              const std::vector<ClipData>& val_clips, const TrainConfig& cfg,
              const std::string& plan_desc, nn::Checkpoint* best_adam_state) {
  cfg.validate();
  if (train_clips.empty()) throw std::runtime_error("empty split: no training clips");
  if (val_clips.empty()) throw std::runtime_error("empty split: no validation clips");

  std::vector<BlockRef> refs;
  for (int c = 0; c < static_cast<int>(train_clips.size()); ++c) {
    for (int t = 0; t < train_clips[static_cast<std::size_t>(c)].spec.frames; ++t) {
      refs.push_back({c, t});
    }
  }

  Rng shuffle_rng(cfg.seed);
  Rng dropout_rng = shuffle_rng.fork(0x5eed);

  const int block_length = model.config().block_length;
  nn::Adam<float> adam(model.parameters(),
                       {static_cast<float>(cfg.learning_rate), 0.9f, 0.999f, 1e-8f});

  RunRecord record;
  record.plan = plan_desc;
  record.seed = cfg.seed;
  record.trainable_params = model.trainable_parameter_count();

  std::vector<nn::NdArray<float>> best_params = snapshot(model);
  double best_f = -1.0;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(refs);

    double loss_sum = 0.0;
    std::size_t example_count = 0;
    std::vector<int> labels;
    for (std::size_t begin = 0; begin < refs.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(begin + static_cast<std::size_t>(cfg.batch_size), refs.size());
      auto x = gather_batch(train_clips, refs, begin, end, block_length, &labels);

      for (auto* p : model.parameters()) p->zero_grad();
      nn::Graph<float> g;
      const int xi = g.leaf(std::move(x), false);
      const int logits = model.forward_logits(g, xi, /*training=*/true, &dropout_rng);
      const int loss = g.softmax_bce(logits, labels);
      g.backward(loss);
      model.accumulate_grads(g);
      adam.step();

      loss_sum += static_cast<double>(g.value(loss)[0]) * static_cast<double>(end - begin);
      example_count += end - begin;
    }

    const auto counts = evaluate_clips(model, val_clips, cfg.batch_size);
    const auto scores = eval::prf(counts);

    EpochRecord er;
    er.epoch = epoch;
    er.train_loss = loss_sum / static_cast<double>(example_count);
    er.val_precision = scores.precision;
    er.val_recall = scores.recall;
    er.val_f = scores.f_score;
    er.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    record.epochs.push_back(er);

    if (scores.f_score > best_f) {
      best_f = scores.f_score;
      best_epoch = epoch;
      best_params = snapshot(model);
      if (best_adam_state) *best_adam_state = adam_state(adam);
    } else if (epoch - best_epoch >= cfg.patience) {
      break;
    }
  }

  restore(model, best_params);
  record.best_epoch = best_epoch;
  record.best_val_f = best_f;
  return record;
}

namespace {

std::string train_config_json(const model::ModelConfig& mc, const TrainConfig& tc) {
  json j;
  j["model"] = {{"channels", mc.channels},
                {"pools", mc.pools},
                {"mel_bands", mc.mel_bands},
                {"block_length", mc.block_length},
                {"hidden", mc.hidden},
                {"dropout", mc.dropout},
                {"batch_norm", mc.batch_norm}};
  json kernels = json::array();
  for (const auto& [kt, kf] : mc.kernels) kernels.push_back({kt, kf});
  j["model"]["kernels"] = kernels;
  j["train"] = {{"learning_rate", tc.learning_rate},
                {"batch_size", tc.batch_size},
                {"max_epochs", tc.max_epochs},
                {"patience", tc.patience},
                {"seed", tc.seed}};
  return j.dump();
}

void save_run(const std::string& out_dir, const std::string& stem, model::Detector& model,
              RunRecord& record, const nn::Checkpoint& adam) {
  fs::create_directories(out_dir);
  const std::string ckpt_path = (fs::path(out_dir) / (stem + ".vckp")).string();
  nn::Checkpoint ckpt = model.to_checkpoint();
  nn::save_checkpoint(ckpt_path, ckpt);
  nn::save_checkpoint(ckpt_path + ".opt", adam);
  record.checkpoint_path = ckpt_path;

  std::ofstream rec((fs::path(out_dir) / (stem + ".run.json")).string());
  rec << record.to_json() << '\n';
}

}  // namespace

RunRecord train_source(const synth::DatasetManifest& manifest, const model::ModelConfig& model_cfg,
                       const TrainConfig& train_cfg, const dsp::StftConfig& stft,
                       const std::string& out_dir) {
  train_cfg.validate();
  const auto train_clips = load_clips(manifest, synth::Task::kSource, synth::Split::kTrain, stft);
  const auto val_clips = load_clips(manifest, synth::Task::kSource, synth::Split::kValidation, stft);

  Rng init_rng(train_cfg.seed);
  model::SourceCnn model(model_cfg, init_rng);
  nn::Checkpoint adam;
  RunRecord record = fit(model, train_clips, val_clips, train_cfg, "none", &adam);
  record.config_json = train_config_json(model_cfg, train_cfg);
  save_run(out_dir, "source_cnn", model, record, adam);
  return record;
}

RunRecord train_target(const synth::DatasetManifest& manifest, const std::string& source_ckpt_path,
                       const TransferPlan& plan, const model::ModelConfig& model_cfg,
                       const TrainConfig& train_cfg, const dsp::StftConfig& stft,
                       const std::string& out_dir) {
  train_cfg.validate();
  const auto train_clips = load_clips(manifest, synth::Task::kTarget, synth::Split::kTrain, stft);
  const auto val_clips = load_clips(manifest, synth::Task::kTarget, synth::Split::kValidation, stft);

  Rng init_rng(train_cfg.seed);
  model::TargetCrnn model(model_cfg, init_rng);
  if (!plan.is_none()) {
    const nn::Checkpoint source = nn::load_checkpoint(source_ckpt_path);
    apply_transfer(source, model, plan);
  }
  nn::Checkpoint adam;
  RunRecord record = fit(model, train_clips, val_clips, train_cfg, plan.describe(), &adam);
  record.config_json = train_config_json(model_cfg, train_cfg);
  save_run(out_dir, "target_crnn", model, record, adam);
  return record;
}

}  // namespace vocalis::train
