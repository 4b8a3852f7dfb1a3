#include <benchmark/benchmark.h>

#include "septda/losses.hpp"
#include "septda/model.hpp"

using namespace septda;

namespace {

Tensor<float> rand_tensor(Rng& rng, std::vector<int> shape, float scale = 1.0f) {
  std::vector<float> d(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : d) v = scale * static_cast<float>(rng.uniform(-1.0, 1.0));
  return Tensor<float>(std::move(shape), std::move(d));
}

void bm_encoder(benchmark::State& state) {
  Rng rng(1);
  const int t = static_cast<int>(state.range(0));
  auto x = rand_tensor(rng, {t}, 0.5f);
  auto w = rand_tensor(rng, {16, 256}, 0.1f);
  auto b = rand_tensor(rng, {256}, 0.1f);
  for (auto _ : state) benchmark::DoNotOptimize(encode_frames(x, w, b));
  state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(bm_encoder)->Arg(8000)->Arg(32000);

void bm_segment_overlap_add(benchmark::State& state) {
  Rng rng(2);
  const int tp = static_cast<int>(state.range(0));
  auto frames = rand_tensor(rng, {tp, 128});
  for (auto _ : state) benchmark::DoNotOptimize(overlap_add(segment(frames, 96)));
  state.SetItemsProcessed(state.iterations() * tp);
}
BENCHMARK(bm_segment_overlap_add)->Arg(500)->Arg(2000);

void bm_attention(benchmark::State& state) {
  Rng rng(3);
  Attention<float> attn;
  attn.init(rng, 128, 8, true);
  const int t = static_cast<int>(state.range(0));
  auto x = rand_tensor(rng, {4, t, 128}, 0.5f);
  for (auto _ : state) benchmark::DoNotOptimize(attn.forward(x, x, Tensor<float>()));
  state.SetItemsProcessed(state.iterations() * 4 * t);
}
BENCHMARK(bm_attention)->Arg(96)->Arg(192);

void bm_lstm_attention_block(benchmark::State& state) {
  Rng rng(4);
  LstmAttentionBlock<float> block;
  block.init(rng, 128, 64, 8, 4, 32, 128);
  auto x = rand_tensor(rng, {8, 96, 128}, 0.5f);
  for (auto _ : state) benchmark::DoNotOptimize(block(x));
}
BENCHMARK(bm_lstm_attention_block);

void bm_si_sdr(benchmark::State& state) {
  Rng rng(5);
  const int t = static_cast<int>(state.range(0));
  std::vector<double> y(static_cast<std::size_t>(t)), e(static_cast<std::size_t>(t));
  for (auto& v : y) v = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = y[i] + 0.3 * rng.uniform(-1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(si_sdr_value(y, e));
  state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(bm_si_sdr)->Arg(8000)->Arg(32000);

void bm_pit_assign(benchmark::State& state) {
  Rng rng(6);
  const int c = static_cast<int>(state.range(0));
  std::vector<std::vector<double>> refs(static_cast<std::size_t>(c)),
      ests(static_cast<std::size_t>(c));
  for (auto& r : refs) {
    r.resize(4000);
    for (auto& v : r) v = rng.uniform(-1, 1);
  }
  for (int j = 0; j < c; ++j) {
    ests[static_cast<std::size_t>(j)] = refs[static_cast<std::size_t>((j + 1) % c)];
    for (auto& v : ests[static_cast<std::size_t>(j)]) v += 0.1 * rng.uniform(-1, 1);
  }
  for (auto _ : state) benchmark::DoNotOptimize(pit_assign(refs, ests));
}
BENCHMARK(bm_pit_assign)->Arg(2)->Arg(5);

void bm_model_forward(benchmark::State& state) {
  ModelConfig cfg;
  cfg.model_dim = 32;
  cfg.latent_dim = 64;
  cfg.lstm_hidden = 32;
  cfg.chunk = 16;
  cfg.triple_blocks = 2;
  cfg.tda_layers = 1;
  cfg.heads = 2;
  cfg.max_speakers = 2;
  SepTdaModel<float> model(cfg, 7);
  Rng rng(8);
  auto mix = rand_tensor(rng, {4000}, 0.3f);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(mix, 2, false));
}
BENCHMARK(bm_model_forward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
