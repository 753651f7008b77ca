// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "test_util.hpp"
#include "vocalis/checkpoint.hpp"
#include "vocalis/model.hpp"
#include "vocalis/nn_ops.hpp"

using namespace vocalis;
using nn::Graph;
using nn::NdArray;

namespace {

dsp::LogMelSpectrogram fake_spec(int frames, int bands, Rng& rng) {
  dsp::LogMelSpectrogram spec;
  spec.frames = frames;
  spec.bands = bands;
  spec.values.resize(static_cast<std::size_t>(frames) * bands);
  for (auto& v : spec.values) v = rng.uniform(-3.0, 3.0);
  return spec;
}

synth::FrameLabelTrack random_labels(int frames, Rng& rng) {
  synth::FrameLabelTrack t;
  t.labels.resize(static_cast<std::size_t>(frames));
  for (auto& l : t.labels) l = static_cast<std::uint8_t>(rng.below(2));
  return t;
}

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

NdArray<float> random_blocks(int batch, int t, int f, Rng& rng) {
  NdArray<float> x({batch, 1, t, f});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  return x;
}

}  // namespace

TEST_CASE("make_blocks yields one block per frame with the right shape") {
  Rng rng(1);
  const auto spec = fake_spec(100, 64, rng);
  const auto labels = random_labels(100, rng);
  const auto blocks = model::make_blocks(spec, labels, {25});
  REQUIRE(blocks.size() == 100);
  for (const auto& b : blocks) {
    CHECK(b.values.extent(0) == 25);
    CHECK(b.values.extent(1) == 64);
  }
  for (int t = 0; t < 100; ++t) {
    CHECK(blocks[static_cast<std::size_t>(t)].label == labels.labels[static_cast<std::size_t>(t)]);
  }
}

TEST_CASE("make_blocks with T=1 returns the frames themselves") {
  Rng rng(2);
  const auto spec = fake_spec(7, 8, rng);
  const auto labels = random_labels(7, rng);
  const auto blocks = model::make_blocks(spec, labels, {1});
  REQUIRE(blocks.size() == 7);
  for (int t = 0; t < 7; ++t) {
    for (int m = 0; m < 8; ++m) {
      CHECK(blocks[static_cast<std::size_t>(t)].values.at2(0, m) ==
            doctest::Approx(spec.at(t, m)));
    }
  }
}

TEST_CASE("edge blocks replicate the boundary frame") {
  Rng rng(3);
  const auto spec = fake_spec(40, 16, rng);
  const auto labels = random_labels(40, rng);
  const auto blocks = model::make_blocks(spec, labels, {25});
  // Block 0 with L=12: the first 12 rows all equal row 0.
  for (int k = 0; k < 12; ++k) {
    for (int m = 0; m < 16; ++m) {
      CHECK(blocks[0].values.at2(k, m) == blocks[0].values.at2(12, m));
      CHECK(blocks[0].values.at2(12, m) == doctest::Approx(spec.at(0, m)));
    }
  }
  // Last block mirrors at the other end.
  const auto& last = blocks.back();
  for (int k = 13; k < 25; ++k) {
    for (int m = 0; m < 16; ++m) {
      CHECK(last.values.at2(k, m) == last.values.at2(12, m));
    }
  }
}

TEST_CASE("make_blocks validates alignment and oddness") {
  Rng rng(4);
  const auto spec = fake_spec(10, 8, rng);
  const auto labels = random_labels(9, rng);
  CHECK_THROWS_AS(model::make_blocks(spec, labels, {5}), std::invalid_argument);
  const auto aligned = random_labels(10, rng);
  CHECK_THROWS_AS(model::make_blocks(spec, aligned, {4}), std::invalid_argument);
}

TEST_CASE("block/label bijection holds for any clip length and odd T") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int frames = 1 + static_cast<int>(rng.below(60));
    const int t_len = 1 + 2 * static_cast<int>(rng.below(15));
    const auto spec = fake_spec(frames, 8, rng);
    const auto labels = random_labels(frames, rng);
    const auto blocks = model::make_blocks(spec, labels, {t_len});
    CHECK(blocks.size() == static_cast<std::size_t>(frames));
  }
}

TEST_CASE("source forward yields valid probabilities in input order") {
  Rng rng(6);
  const auto cfg = tiny_config();
  model::SourceCnn model(cfg, rng);

  const auto batch = random_blocks(6, cfg.block_length, cfg.mel_bands, rng);
  const auto probs = model.predict_probs(batch);
  REQUIRE(probs.shape() == std::vector<int>{6, 2});
  for (int n = 0; n < 6; ++n) {
    CHECK(probs.at2(n, 0) + probs.at2(n, 1) == doctest::Approx(1.0f).epsilon(1e-6));
    CHECK(probs.at2(n, 0) > 0.0f);
  }

  // Same blocks presented one at a time give the same decisions in order.
  for (int n = 0; n < 6; ++n) {
    NdArray<float> one({1, 1, cfg.block_length, cfg.mel_bands});
    for (int k = 0; k < cfg.block_length; ++k) {
      for (int m = 0; m < cfg.mel_bands; ++m) {
        one.at4(0, 0, k, m) = batch.at4(n, 0, k, m);
      }
    }
    const auto p = model.predict_probs(one);
    CHECK(nn::decide(p.at2(0, 0), p.at2(0, 1)) == nn::decide(probs.at2(n, 0), probs.at2(n, 1)));
  }
}

TEST_CASE("decision rule: larger probability wins, exact tie resolves to off") {
  CHECK(nn::decide(0.3, 0.7) == 1);
  CHECK(nn::decide(0.7, 0.3) == 0);
  CHECK(nn::decide(0.5, 0.5) == 0);
}

TEST_CASE("adding a constant to both logits never changes the decision") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    NdArray<double> logits({1, 2}, {rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)});
    NdArray<double> shifted({1, 2});
    const double c = rng.uniform(-10.0, 10.0);
    shifted.at2(0, 0) = logits.at2(0, 0) + c;
    shifted.at2(0, 1) = logits.at2(0, 1) + c;
    const auto p = nn::softmax2(logits);
    const auto q = nn::softmax2(shifted);
    CHECK(nn::decide(p.at2(0, 0), p.at2(0, 1)) == nn::decide(q.at2(0, 0), q.at2(0, 1)));
  }
}

TEST_CASE("the conv trunk feeds the recurrent layer a (batch, T, C) sequence") {
  Rng rng(8);
  const auto cfg = tiny_config();
  model::TargetCrnn model(cfg, rng);

  Graph<float> g;
  const int x = g.leaf(random_blocks(3, cfg.block_length, cfg.mel_bands, rng));
  const int trunk = model.conv_stack().forward(g, x, false);
  REQUIRE(g.value(trunk).shape() == std::vector<int>{3, 4, cfg.block_length, 1});
  const int seq = g.to_sequence(trunk);
  CHECK(g.value(seq).shape() == std::vector<int>{3, cfg.block_length, 4});
}

TEST_CASE("zero recurrent weights make the output depend only on the head bias") {
  Rng rng(9);
  const auto cfg = tiny_config();
  model::TargetCrnn model(cfg, rng);
  model.recurrent().wih.value.fill(0.0f);
  model.recurrent().whh.value.fill(0.0f);
  model.recurrent().bih.value.fill(0.0f);
  model.recurrent().bhh.value.fill(0.0f);

  const auto p1 = model.predict_probs(random_blocks(2, cfg.block_length, cfg.mel_bands, rng));
  const auto p2 = model.predict_probs(random_blocks(2, cfg.block_length, cfg.mel_bands, rng));
  for (int n = 0; n < 2; ++n) {
    CHECK(p1.at2(n, 0) == p1.at2(0, 0));
    CHECK(p1.at2(n, 0) == p2.at2(n, 0));
    CHECK(p1.at2(n, 1) == p2.at2(n, 1));
  }
}

TEST_CASE("gradient reaches every conv parameter of the unfrozen CRNN") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto cfg = tiny_config();
    model::TargetCrnn model(cfg, rng);
    for (auto* p : model.parameters()) p->zero_grad();

    Graph<float> g;
    const int x = g.leaf(random_blocks(4, cfg.block_length, cfg.mel_bands, rng));
    const int logits = model.forward_logits(g, x, true, nullptr);
    g.backward(g.softmax_bce(logits, {0, 1, 1, 0}));
    model.accumulate_grads(g);

    for (int layer = 0; layer < 3; ++layer) {
      for (auto* p : model.conv_stack().layer(layer).transferable()) {
        bool nonzero = false;
        for (std::size_t i = 0; i < p->grad.size(); ++i) {
          if (p->grad[i] != 0.0f) nonzero = true;
        }
        CHECK_MESSAGE(nonzero, "seed ", seed, " layer ", layer, " param ", p->name);
      }
    }
  }
}

TEST_CASE("source and target conv stacks are bit-identical given the same seed") {
  const auto cfg = tiny_config();
  Rng rng_a(123), rng_b(123);
  model::SourceCnn cnn(cfg, rng_a);
  model::TargetCrnn crnn(cfg, rng_b);

  Rng data(7);
  const auto x = random_blocks(2, cfg.block_length, cfg.mel_bands, data);
  Graph<float> ga, gb;
  const int fa = cnn.conv_stack().forward(ga, ga.leaf(x), false);
  const int fb = crnn.conv_stack().forward(gb, gb.leaf(x), false);
  const auto& va = ga.value(fa);
  const auto& vb = gb.value(fb);
  REQUIRE(va.shape() == vb.shape());
  for (std::size_t i = 0; i < va.size(); ++i) CHECK(va[i] == vb[i]);
}

// Trainable parameter enumeration for the default architecture, by hand:
//   conv1: W 16*1*3*3 = 144, V 144, b 16, c 16, bn gamma 16, bn beta 16 -> 352
//   conv2: W 16*16*3*3 = 2304, V 2304, b 16, c 16, bn 32            -> 4672
//   conv3: same as conv2                                             -> 4672
//   source head: 2*16 + 2                                            ->   34
//   GRU: 3*32*16 + 3*32*32 + 96 + 96                                 -> 4800
//   target head: 2*32 + 2                                            ->   66
TEST_CASE("trainable parameter counts match the hand enumeration") {
  model::ModelConfig cfg;  // defaults: 16/16/16, 3x3, pools 4/4/4, hidden 32
  Rng rng(1);
  model::SourceCnn cnn(cfg, rng);
  CHECK(cnn.trainable_parameter_count() == 352u + 4672u + 4672u + 34u);  // 9730

  Rng rng2(1);
  model::TargetCrnn crnn(cfg, rng2);
  CHECK(crnn.trainable_parameter_count() == 352u + 4672u + 4672u + 4800u + 66u);  // 14562
}

TEST_CASE("default architecture reduces 64 bands to 1 while preserving T=25") {
  model::ModelConfig cfg;
  Rng rng(11);
  model::SourceCnn model(cfg, rng);
  Rng data(3);
  Graph<float> g;
  const int x = g.leaf(random_blocks(2, 25, 64, data));
  const int expected_f[] = {16, 4, 1};
  for (int layer = 0; layer < 3; ++layer) {
    Graph<float> gl;
    const int xi = gl.leaf(random_blocks(1, 25, 64, data));
    const int y = model.conv_stack().forward(gl, xi, false, layer);
    CHECK(gl.value(y).extent(2) == 25);
    CHECK(gl.value(y).extent(3) == expected_f[layer]);
  }
  (void)x;
}

TEST_CASE("checkpoints round-trip the full model") {
  testutil::TempDir tmp("ckpt");
  const auto cfg = tiny_config();
  Rng rng(21);
  model::TargetCrnn model(cfg, rng);
  Rng data(5);
  const auto blocks = random_blocks(3, cfg.block_length, cfg.mel_bands, data);
  const auto before = model.predict_probs(blocks);

  nn::save_checkpoint(tmp.file("m.vckp"), model.to_checkpoint());
  const auto loaded_ckpt = nn::load_checkpoint(tmp.file("m.vckp"));
  auto restored = model::detector_from_checkpoint(loaded_ckpt);
  CHECK(restored->kind() == model::ModelKind::kTargetCrnn);
  const auto after = restored->predict_probs(blocks);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);

  CHECK_THROWS_WITH_AS(nn::load_checkpoint(tmp.file("absent.vckp")),
                       doctest::Contains("checkpoint not found"), std::runtime_error);
}

TEST_CASE("VCKP byte layout: named, shaped f32 arrays, little-endian") {
  testutil::TempDir tmp("vckp-bytes");
  nn::Checkpoint ckpt;
  ckpt.put("ab", NdArray<float>({1, 2}, {1.0f, -2.0f}));
  nn::save_checkpoint(tmp.file("x.vckp"), ckpt);

  std::ifstream f(tmp.file("x.vckp"), std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  const std::vector<unsigned char> expected = {
      'V', 'C', 'K', 'P',      // magic
      0x01, 0x00,              // version u16
      0x01, 0x00, 0x00, 0x00,  // array count u32
      0x02, 0x00, 0x00, 0x00,  // name length u32
      'a', 'b',                // name bytes
      0x02, 0x00, 0x00, 0x00,  // rank u32
      0x01, 0x00, 0x00, 0x00,  // extent 1
      0x02, 0x00, 0x00, 0x00,  // extent 2
      0x00, 0x00, 0x80, 0x3f,  // 1.0f
      0x00, 0x00, 0x00, 0xc0,  // -2.0f
  };
  CHECK(bytes == expected);
}

TEST_CASE("checkpoint/config mismatches are reported") {
  const auto cfg = tiny_config();
  Rng rng(31);
  model::SourceCnn model(cfg, rng);
  auto ckpt = model.to_checkpoint();
  // Corrupt one array's shape.
  ckpt.put("conv1.w", NdArray<float>({4, 1, 1, 1}, 0.0f));
  model::ModelConfig cfg2 = cfg;
  Rng rng2(32);
  model::SourceCnn other(cfg2, rng2);
  CHECK_THROWS_WITH_AS(other.load_parameters(ckpt), doctest::Contains("mismatch"),
                       std::runtime_error);
}

TEST_CASE("model config validation rejects inconsistent stacks") {
  model::ModelConfig cfg = tiny_config();
  cfg.pools = {4, 2, 1};  // leaves 2 bands, not 1
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  model::ModelConfig even = tiny_config();
  even.block_length = 24;
  CHECK_THROWS_AS(even.validate(), std::invalid_argument);
}
