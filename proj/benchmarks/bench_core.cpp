#include <benchmark/benchmark.h>

#include "sdil/autodiff.hpp"
#include "sdil/data.hpp"
#include "sdil/model.hpp"
#include "sdil/trainer.hpp"

namespace {

using namespace sdil;

TensorPtr random_tensor(std::vector<int> shape, Rng& rng, bool grad) {
  auto t = grad ? param(shape) : tensor(shape);
  for (double& v : t->data) v = rng.normal(0.0, 0.5);
  return t;
}

void BM_MatmulForward(benchmark::State& state) {
  const int n = int(state.range(0));
  Rng rng(7);
  auto a = random_tensor({n, n}, rng, false);
  auto b = random_tensor({n, n}, rng, false);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b, nullptr));
}
BENCHMARK(BM_MatmulForward)->Arg(20)->Arg(64);

void BM_MatmulBackward(benchmark::State& state) {
  const int n = int(state.range(0));
  Rng rng(7);
  auto a = random_tensor({n, n}, rng, true);
  auto b = random_tensor({n, n}, rng, true);
  for (auto _ : state) {
    Tape tape;
    auto c = sum_all(matmul(a, b, &tape), &tape);
    tape.backward(c);
    a->zero_grad();
    b->zero_grad();
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(20)->Arg(64);

// One attention+FFN block over a 20-slot context.
void BM_EncoderLayer(benchmark::State& state) {
  const int d = int(state.range(0));
  Rng rng(11);
  auto block = make_encoder_layer(d, true, rng);
  auto x = random_tensor({20, d}, rng, false);
  std::vector<double> mask(20, 1.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        encoder_layer(x, block, mask, 4, 0.0, nullptr, false, nullptr));
}
BENCHMARK(BM_EncoderLayer)->Arg(16)->Arg(64);

Dataset bench_dataset() {
  Dataset d;
  d.n_users = 4;
  d.n_items = 50;
  d.max_len = 20;
  d.price_bins = 10;
  d.n_categories = 5;
  d.n_brands = 5;
  d.items.resize(d.n_items + 1);
  for (int v = 1; v <= d.n_items; ++v) {
    d.items[v].category = 1 + v % 5;
    d.items[v].brand = 1 + (v / 5) % 5;
    d.items[v].price = v;
    d.items[v].has_price = true;
    d.items[v].price_bin = v % 10;
  }
  for (int v = 1; v + 1 <= d.n_items; v += 2)
    d.relations.add_edge(v, v + 1, Relation::AlsoBuy);
  for (int v = 1; v + 5 <= d.n_items; v += 3)
    d.relations.add_edge(v, v + 5, Relation::AlsoView);
  SplitInstance inst;
  inst.user = 0;
  const std::int64_t day = 86400;
  for (int i = 0; i < 20; ++i) {
    inst.ctx_items.push_back(1 + i * 2);
    inst.ctx_ts.push_back(1500000000 + i * day);
  }
  inst.valid = 20;
  inst.target = 2;
  inst.target_ts = 1500000000 + 21 * day;
  d.train.push_back(inst);
  d.history = {{1, 2}, {}, {}, {}};
  return d;
}

void BM_ExcitationEval(benchmark::State& state) {
  Dataset data = bench_dataset();
  auto kernels = make_kernel_params(data.n_items, KernelInit{});
  const SplitInstance& inst = data.train[0];
  for (auto _ : state) {
    double v = positive_excitation(kernels, data.relations, inst.ctx_items,
                                   inst.ctx_ts, inst.target, inst.target_ts) -
               negative_excitation(kernels, data.relations, inst.ctx_items,
                                   inst.ctx_ts, inst.target, inst.target_ts);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_ExcitationEval);

// Encode-once-score-many, the inner loop of evaluation.
void BM_ScoreCandidates(benchmark::State& state) {
  Dataset data = bench_dataset();
  ModelConfig mc;
  mc.d = int(state.range(0));
  mc.max_len = 20;
  mc.layers = 2;
  mc.sim_heads = 4;
  mc.dropout = 0.0;
  SdilModel m = make_model(data, mc, Variant::SDIL, 3);
  const SplitInstance& inst = data.train[0];
  auto st = encode_instance(m, data, inst.ctx_items, nullptr, false, nullptr);
  for (auto _ : state) {
    double acc = 0;
    for (int cand = 1; cand <= data.n_items; ++cand)
      acc += score_value(m, data, st, inst, cand);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_ScoreCandidates)->Arg(16)->Arg(64);

void BM_TrainStep(benchmark::State& state) {
  Dataset data = bench_dataset();
  ModelConfig mc;
  mc.d = 16;
  mc.max_len = 20;
  mc.layers = 1;
  mc.sim_heads = 2;
  mc.dropout = 0.0;
  SdilModel m = make_model(data, mc, Variant::SDIL, 3);
  const SplitInstance& inst = data.train[0];
  for (auto _ : state) {
    Tape tape;
    auto loss = pair_loss(m, data, inst, 5, nullptr, false, &tape);
    tape.backward(loss);
    benchmark::DoNotOptimize(loss->data[0]);
    for (auto& [name, t] : m.named_params()) t->zero_grad();
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
