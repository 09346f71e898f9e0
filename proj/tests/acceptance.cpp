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

// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fscl/error.hpp"
#include "fscl/experiment.hpp"
#include "fscl/fed/engine.hpp"
#include "fscl/fed/fedavg.hpp"
#include "fscl/fed/partition.hpp"
#include "fscl/metrics.hpp"
#include "fscl/nn/gradcheck.hpp"
#include "fscl/transport/channel.hpp"
#include "fscl/transport/wire.hpp"
#include "support.hpp"

namespace {

using namespace fscl;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- 1
Outcome gradients() {
  const auto t0 = Clock::now();
  const auto cases = nn::gradient_check_suite(5, 7, 1e-5);
  double worst = 0.0;
  for (const auto& c : cases) worst = std::max(worst, c.result.max_rel_error);
  const double secs = seconds_since(t0);
  return {cases.size() == 5 && worst < 1e-4 && secs < 30.0,
          "max rel error " + fmt("%.3g", worst) + " over 5 configs in " + fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------- 2
fed::ClientUpdate scalar_update(std::size_t id, double w, std::size_t n) {
  fed::ClientUpdate u;
  u.client_id = id;
  u.n_samples = n;
  u.weights.add("s/weight", {1}, nn::ParamKind::Weight).values = {w};
  return u;
}

Outcome fedavg_algebra() {
  bool ok = true;
  {
    std::vector<fed::ClientUpdate> one = {scalar_update(0, 0.3141592653589793, 9)};
    ok &= fed::fedavg_aggregate(one) == one[0].weights;
    std::vector<fed::ClientUpdate> two = {scalar_update(0, 0.0, 4), scalar_update(1, 2.0, 4)};
    ok &= fed::fedavg_aggregate(two)[0].values[0] == 1.0;
    std::vector<fed::ClientUpdate> skew = {scalar_update(0, 0.0, 1), scalar_update(1, 4.0, 3)};
    ok &= fed::fedavg_aggregate(skew)[0].values[0] == 3.0;
  }
  const bool examples = ok;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 5.0);
  std::size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<fed::ClientUpdate> trio;
    for (std::size_t k = 0; k < 3; ++k) {
      fed::ClientUpdate u;
      u.client_id = k;
      u.n_samples = 1 + rng() % 1000;
      for (const char* name : {"l/weight", "l/bias", "bn/gamma"}) {
        auto& t = u.weights.add(name, {3, 5}, nn::infer_kind(name));
        for (double& v : t.values) v = normal(rng);
      }
      trio.push_back(std::move(u));
    }
    const auto avg = fed::fedavg_aggregate(trio);
    for (std::size_t t = 0; t < avg.size(); ++t)
      for (std::size_t i = 0; i < avg[t].numel(); ++i) {
        double lo = trio[0].weights[t].values[i], hi = lo;
        for (const auto& u : trio) {
          lo = std::min(lo, u.weights[t].values[i]);
          hi = std::max(hi, u.weights[t].values[i]);
        }
        violations += avg[t].values[i] < lo || avg[t].values[i] > hi;
      }
  }
  return {examples && violations == 0,
          std::string("examples ") + (examples ? "exact" : "WRONG") + ", " +
              std::to_string(violations) + " out-of-range scalars over 1000 trios"};
}

// ---------------------------------------------------------------- 3
Outcome degenerate_equivalence(const std::vector<Trace>& corpus, const ExperimentConfig& base) {
  auto fc = base.fed_config();
  fc.n_clients = 1;
  fc.rounds = 1;
  const auto fed_run = fed::run_federated(corpus, fc, base.pipeline());
  auto cc = base.centralized_config();
  cc.max_epochs = fc.local_epochs;
  cc.early_stopping = false;
  const auto central = fed::run_centralized(corpus, base.pipeline(), cc);
  const double diff = nn::max_abs_difference(fed_run.final_params, central.params);
  return {fed_run.final_params == central.params,
          "E=" + std::to_string(fc.local_epochs) + ", max |diff| " + fmt("%.3g", diff)};
}

// ---------------------------------------------------------------- 4
Outcome presets() {
  // Per-client class counts C1..C10.
  const std::size_t iid_b[10] = {65, 62, 66, 60, 61, 63, 59, 64, 67, 62};
  const std::size_t iid_m[10] = {60, 63, 61, 65, 64, 62, 66, 61, 60, 64};
  const std::size_t non_b[10] = {40, 30, 122, 61, 45, 91, 153, 122, 34, 301};
  const std::size_t non_m[10] = {61, 71, 30, 40, 15, 112, 152, 81, 36, 158};
  const auto traces = testing::labelled_traces(1200, 1000, 4);
  std::size_t matched = 0;
  for (auto variant : {fed::Fig1Variant::IID, fed::Fig1Variant::NonIID}) {
    const auto p = fed::partition_preset_fig1(traces, variant);
    const bool iid = variant == fed::Fig1Variant::IID;
    for (std::size_t k = 0; k < 10 && k < p.shards.size(); ++k) {
      std::size_t b = 0, m = 0;
      for (auto i : p.shards[k]) ++(traces[i].label == Label::Benign ? b : m);
      matched += b == (iid ? iid_b : non_b)[k];
      matched += m == (iid ? iid_m : non_m)[k];
    }
  }
  return {matched == 40, std::to_string(matched) + "/40 per-client class counts exact"};
}

// ---------------------------------------------------------------- 5-7
struct DefaultRuns {
  fed::CentralizedResult central;
  fed::FederatedResult iid;
  fed::FederatedResult noniid;
  double seconds = 0.0;
};

DefaultRuns default_runs(const std::vector<Trace>& corpus, const ExperimentConfig& base) {
  DefaultRuns r;
  const auto t0 = Clock::now();
  const auto log_round = [](const char* tag) {
    return [tag](const fed::RoundReport& rep) {
      std::printf("  %s round %zu: val trace acc %.4f, train trace acc %.4f\n", tag, rep.round,
                  rep.global.trace.accuracy, rep.train_accuracy);
      std::fflush(stdout);
    };
  };
  r.central = fed::run_centralized(corpus, base.pipeline(), base.centralized_config());
  std::printf("  centralized: %zu epochs, val trace acc %.4f\n", r.central.history.size(),
              r.central.validation.trace.accuracy);
  auto fc = base.fed_config();
  fc.partition.kind = fed::PartitionKind::IID;
  r.iid = fed::run_federated(corpus, fc, base.pipeline(), log_round("iid"));
  // Fixed-count non-IID class shares, scaled to the corpus size.
  fc.partition.kind = fed::PartitionKind::ScaledFig1NonIID;
  r.noniid = fed::run_federated(corpus, fc, base.pipeline(), log_round("non-iid"));
  r.seconds = seconds_since(t0);
  return r;
}

Outcome ordering(const DefaultRuns& r) {
  const double c = r.central.validation.trace.accuracy;
  const double i = r.iid.rounds.back().global.trace.accuracy;
  const double n = r.noniid.rounds.back().global.trace.accuracy;
  const bool pass = c >= i && i >= n - 0.02 && i >= 0.85 && i - n >= 0.0 && i - n <= 0.10 &&
                    r.seconds < 15 * 60;
  return {pass, "centralized " + fmt("%.4f", c) + ", FL-IID " + fmt("%.4f", i) +
                    ", FL-nonIID " + fmt("%.4f", n) + ", runtime " + fmt("%.0f", r.seconds) +
                    " s"};
}

Outcome convergence(const DefaultRuns& r) {
  const auto& rounds = r.iid.rounds;
  if (rounds.size() < 7)
    return {false, "IID run stopped after round " + std::to_string(rounds.back().round)};
  int increases = 0;
  for (std::size_t k = 2; k <= 6; ++k)
    increases += rounds[k].global.trace.accuracy > rounds[k - 1].global.trace.accuracy;
  const double gain = rounds[6].global.trace.accuracy - rounds[1].global.trace.accuracy;
  return {increases >= 4 && gain >= 0.25,
          std::to_string(increases) + "/5 increasing transitions, round6 - round1 = " +
              fmt("%.4f", gain)};
}

Outcome round_zero(const DefaultRuns& r) {
  const double acc = r.iid.rounds.front().global.trace.accuracy;
  const double win = r.iid.rounds.front().global.window.accuracy;
  return {acc < 0.65 && r.iid.rounds.front().round == 0,
          "untrained model: trace acc " + fmt("%.4f", acc) + ", window acc " + fmt("%.4f", win)};
}

// ---------------------------------------------------------------- 8
Outcome null_leakage(const ExperimentConfig& base) {
  auto spec = base.generator;
  spec.separability = 0.0;
  spec.attack_injection_rate = 0.0;
  spec.n_benign = 250;
  spec.n_malicious = 250;
  const auto corpus = generate_corpus(spec, base.seed);
  const auto r = fed::run_federated(corpus, base.fed_config(), base.pipeline());
  const double ba = r.rounds.back().global.trace.balanced_accuracy();
  return {ba >= 0.45 && ba <= 0.55, "balanced trace acc " + fmt("%.4f", ba) + " after round " +
                                        std::to_string(r.rounds.back().round)};
}

// ---------------------------------------------------------------- 9
transport::WireMessage random_message(std::mt19937_64& rng) {
  using namespace transport;
  auto params = [&] {
    nn::ParamSet p;
    std::normal_distribution<float> normal(0.0f, 2.0f);
    const std::size_t n = rng() % 4;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string name = (i % 2 ? "t" : "u") + std::to_string(i) + (i % 3 ? "/weight" : "/bias");
      auto& t = p.add(name, {static_cast<std::uint32_t>(1 + rng() % 5),
                             static_cast<std::uint32_t>(1 + rng() % 5)},
                      nn::infer_kind(name));
      for (double& v : t.values) v = normal(rng);
    }
    return p;
  };
  switch (rng() % 5) {
    case 0: return Hello{static_cast<std::uint32_t>(rng())};
    case 1: return GlobalWeights{static_cast<std::uint32_t>(rng()), params()};
    case 2:
      return ClientUpdateMsg{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                             rng(), params()};
    case 3: return RoundDone{static_cast<std::uint32_t>(rng())};
    default: return Shutdown{};
  }
}

std::pair<transport::Channel, transport::Channel> make_pair(bool tcp) {
  using namespace transport;
  if (!tcp) return channel_pair();
  auto listener = TcpListener::listen("127.0.0.1", 0);
  std::optional<Channel> server;
  std::thread t([&] { server.emplace(listener.accept()); });
  Channel client = tcp_connect("127.0.0.1", listener.port());
  t.join();
  return {std::move(client), std::move(*server)};
}

// Returns the names of the failed contract clauses.
std::vector<std::string> channel_contract(bool tcp) {
  using namespace transport;
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const char* clause) {
    if (!ok) failed.push_back(clause);
  };
  std::mt19937_64 rng(tcp ? 31 : 30);
  {
    auto [a, b] = make_pair(tcp);
    std::vector<WireMessage> sent;
    for (int i = 0; i < 100; ++i) sent.push_back(random_message(rng));
    std::thread writer([&, &a = a] {
      for (const auto& m : sent) a.send(m);
    });
    bool in_order = true;
    for (const auto& m : sent) in_order &= b.recv() == std::optional<WireMessage>(m);
    writer.join();
    expect(in_order, "fifo");
    a.close();
    expect(!b.recv().has_value(), "close");
  }
  {
    auto [a, b] = make_pair(tcp);
    const auto bytes = encode(RoundDone{1});
    a.send_raw(std::span(bytes).first(bytes.size() - 2));
    a.close();
    bool truncated = false;
    try {
      b.recv();
    } catch (const WireError& e) {
      truncated = e.code() == WireErrorCode::Truncated;
    }
    expect(truncated, "mid-frame close");
  }
  return failed;
}

Outcome wire_format() {
  using namespace transport;
  std::mt19937_64 rng(9);
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto msg = random_message(rng);
    mismatches += decode(encode(msg)) != msg;
  }
  std::size_t undetected = 0, corruptions = 0;
  for (int i = 0; i < 200; ++i) {
    const auto bytes = encode(random_message(rng));
    for (std::size_t pos = 0; pos < bytes.size(); ++pos) {
      auto bad = bytes;
      bad[pos] ^= static_cast<std::uint8_t>(1 + rng() % 255);
      ++corruptions;
      try {
        decode(bad);
        ++undetected;
      } catch (const WireError&) {
      }
    }
  }
  std::string contract;
  bool contract_ok = true;
  for (bool tcp : {false, true}) {
    const auto failed = channel_contract(tcp);
    contract += std::string(tcp ? "tcp " : "memory ") + (failed.empty() ? "ok" : "FAILED");
    for (const auto& f : failed) contract += " [" + f + "]";
    contract += tcp ? "" : ", ";
    contract_ok &= failed.empty();
  }
  bool refused = false;
  {
    std::uint16_t port;
    {
      auto l = TcpListener::listen("127.0.0.1", 0);
      port = l.port();
    }
    try {
      tcp_connect("127.0.0.1", port);
    } catch (const WireError& e) {
      refused = e.code() == WireErrorCode::ConnectionRefused;
    }
  }
  return {mismatches == 0 && undetected == 0 && contract_ok && refused,
          std::to_string(mismatches) + "/10000 round-trip mismatches, " +
              std::to_string(undetected) + "/" + std::to_string(corruptions) +
              " corruptions undetected, contract: " + contract +
              (refused ? "" : ", connection refusal not reported")};
}

// ---------------------------------------------------------------- 10
std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  testing::TempDir dir("fscl_accept");
  ExperimentConfig c;
  c.generator.n_benign = 60;
  c.generator.n_malicious = 60;
  c.fed.n_clients = 3;
  c.fed.rounds = 3;
  c.fed.local_epochs = 2;
  c.fed.client_parallelism = 3;
  c.corpus_dir = dir / "corpus";
  gen_data(c, c.corpus_dir);
  std::ostringstream log;
  c.output_dir = dir / "a";
  train(c, log);
  c.output_dir = dir / "b";
  train(c, log);
  const auto a = read_file(dir / "a" / "rounds.jsonl");
  const auto b = read_file(dir / "b" / "rounds.jsonl");
  const auto lines = std::count(a.begin(), a.end(), '\n');
  return {!a.empty() && a == b,
          std::to_string(lines) + "-line rounds.jsonl " + (a == b ? "byte-identical" : "DIFFERS")};
}

// ---------------------------------------------------------------- 11
Outcome metric_formulas() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    std::vector<double> probs(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      probs[i] = rng() % 10 == 0 ? 0.5 : unit(rng);
      labels[i] = static_cast<int>(rng() % 2);
    }
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pred = !(probs[i] < 0.5);
      if (pred && labels[i] == 1) ++tp;
      if (pred && labels[i] == 0) ++fp;
      if (!pred && labels[i] == 1) ++fn;
      if (!pred && labels[i] == 0) ++tn;
    }
    auto ratio = [](double a, double b) { return b == 0.0 ? 0.0 : a / b; };
    const double acc = ratio(double(tp + tn), double(n));
    const double prec = ratio(double(tp), double(tp + fp));
    const double rec = ratio(double(tp), double(tp + fn));
    const double f1 = ratio(2.0 * prec * rec, prec + rec);
    const auto m = evaluate(probs, labels);
    const bool same = m.confusion.tp == tp && m.confusion.fp == fp && m.confusion.fn == fn &&
                      m.confusion.tn == tn && m.accuracy == acc && m.precision == prec &&
                      m.recall == rec && std::abs(m.f1 - f1) <= 1e-15;
    mismatches += !same;
  }
  return {mismatches == 0, std::to_string(mismatches) + "/1000 vectors disagree with the counter"};
}

}  // namespace

int main() {
  const fscl::ExperimentConfig base;
  std::vector<std::pair<int, std::function<Outcome()>>> checks;
  std::optional<std::vector<fscl::Trace>> corpus;
  std::optional<DefaultRuns> runs;
  auto default_corpus = [&]() -> const std::vector<fscl::Trace>& {
    if (!corpus) corpus = fscl::generate_corpus(base.generator, base.seed);
    return *corpus;
  };
  auto default_runs_once = [&]() -> const DefaultRuns& {
    if (!runs) runs = default_runs(default_corpus(), base);
    return *runs;
  };

  checks.emplace_back(1, gradients);
  checks.emplace_back(2, fedavg_algebra);
  checks.emplace_back(3, [&] { return degenerate_equivalence(default_corpus(), base); });
  checks.emplace_back(4, presets);
  checks.emplace_back(5, [&] { return ordering(default_runs_once()); });
  checks.emplace_back(6, [&] { return convergence(default_runs_once()); });
  checks.emplace_back(7, [&] { return round_zero(default_runs_once()); });
  checks.emplace_back(8, [&] { return null_leakage(base); });
  checks.emplace_back(9, wire_format);
  checks.emplace_back(10, determinism);
  checks.emplace_back(11, metric_formulas);

  int failures = 0;
  for (auto& [id, run] : checks) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failures,
              checks.size());
  return failures == 0 ? 0 : 1;
}
