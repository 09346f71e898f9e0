/*
 * Copyright 2026 The fscl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <random>

#include <benchmark/benchmark.h>

#include "fscl/features.hpp"
#include "fscl/fed/fedavg.hpp"
#include "fscl/nn/model.hpp"
#include "fscl/transport/wire.hpp"

namespace {

using namespace fscl;

nn::ModelConfig bench_config(std::size_t vocab) {
  nn::ModelConfig c;
  c.input_dim = vocab;
  return c;
}

nn::Batch random_batch(std::size_t steps, std::size_t b, std::size_t v) {
  Rng rng(1);
  std::uniform_real_distribution<double> unit(0.0, 0.1);
  nn::Batch batch;
  batch.steps = steps;
  batch.batch_size = b;
  batch.inputs.resize(static_cast<Eigen::Index>(steps * b), static_cast<Eigen::Index>(v));
  for (Eigen::Index i = 0; i < batch.inputs.size(); ++i) batch.inputs.data()[i] = unit(rng);
  batch.labels = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b));
  for (std::size_t i = 0; i < b; i += 2) batch.labels[static_cast<Eigen::Index>(i)] = 1.0;
  return batch;
}

void BM_ForwardEval(benchmark::State& state) {
  const auto vocab = static_cast<std::size_t>(state.range(0));
  const auto cfg = bench_config(vocab);
  const auto params = nn::init_params(cfg, 1);
  const auto batch = random_batch(10, 32, vocab);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(batch, params, cfg, {}).probs);
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ForwardEval)->Arg(120)->Arg(1000);

void BM_TrainStep(benchmark::State& state) {
  const auto vocab = static_cast<std::size_t>(state.range(0));
  const auto cfg = bench_config(vocab);
  const auto params = nn::init_params(cfg, 1);
  const auto batch = random_batch(10, 32, vocab);
  Rng rng(2);
  for (auto _ : state) {
    const auto r = nn::forward(batch, params, cfg, {nn::Mode::Train, &rng});
    benchmark::DoNotOptimize(nn::backward(r.cache, params, cfg, batch.labels));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStep)->Arg(120)->Arg(1000);

void BM_FedAvg(benchmark::State& state) {
  const auto cfg = bench_config(1000);
  std::vector<fed::ClientUpdate> updates;
  for (int k = 0; k < state.range(0); ++k) {
    fed::ClientUpdate u;
    u.client_id = static_cast<std::size_t>(k);
    u.n_samples = 100 + static_cast<std::size_t>(k);
    u.weights = nn::init_params(cfg, static_cast<std::uint64_t>(k));
    updates.push_back(std::move(u));
  }
  for (auto _ : state) benchmark::DoNotOptimize(fed::fedavg_aggregate(updates));
}
BENCHMARK(BM_FedAvg)->Arg(3)->Arg(10);

void BM_WireEncode(benchmark::State& state) {
  const transport::GlobalWeights msg{1, nn::init_params(bench_config(1000), 1)};
  for (auto _ : state) benchmark::DoNotOptimize(transport::encode(msg));
}
BENCHMARK(BM_WireEncode);

void BM_WireDecode(benchmark::State& state) {
  const auto bytes = transport::encode(transport::GlobalWeights{1, nn::init_params(bench_config(1000), 1)});
  for (auto _ : state) benchmark::DoNotOptimize(transport::decode(bytes));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_WireDecode);

void BM_Featurize(benchmark::State& state) {
  std::vector<Trace> traces(1);
  const std::vector<std::string> alphabet = make_alphabet(120);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) traces[0].tokens.push_back(alphabet[rng() % alphabet.size()]);
  traces[0].label = Label::Benign;
  traces[0].id = "t";
  const auto vocab = fit_vocab(traces);
  for (auto _ : state) benchmark::DoNotOptimize(build_dataset(traces, vocab, FeatureConfig{}));
}
BENCHMARK(BM_Featurize);

}  // namespace
BENCHMARK_MAIN();
