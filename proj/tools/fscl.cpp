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

// fscl: command-line driver for corpus generation, training and reporting.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fscl/error.hpp"
#include "fscl/experiment.hpp"
#include "fscl/nn/gradcheck.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr double kGradTolerance = 1e-4;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

fscl::ExperimentConfig resolve(const Common& common) {
  fscl::ExperimentConfig config =
      common.config_path.empty() ? fscl::ExperimentConfig{} : fscl::load_config(common.config_path);
  if (common.seed) config.seed = *common.seed;
  return config;
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("-c,--config", common.config_path, "JSON config file (defaults if omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", common.seed, "Override the config seed");
}

int run_gradcheck(std::size_t n_configs, std::uint64_t seed, double delta) {
  const auto start = std::chrono::steady_clock::now();
  const auto cases = fscl::nn::gradient_check_suite(n_configs, seed, delta);
  double worst = 0.0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    std::printf("case %zu: V=%zu W=%zu H1=%zu H2=%zu B=%zu  max rel error %.3e (%s, %zu checked)\n",
                i + 1, c.config.input_dim, c.steps, c.config.gru1_units, c.config.gru2_units,
                c.batch_size, c.result.max_rel_error, c.result.worst_tensor.c_str(),
                c.result.checked);
    worst = std::max(worst, c.result.max_rel_error);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("max relative error %.3e (tolerance %.0e) in %.2f s\n", worst, kGradTolerance, secs);
  return worst < kGradTolerance ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fscl: federated syscall-trace classifier"};
  app.require_subcommand(1);

  Common gen_common;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic labelled trace corpus");
  add_common(gen, gen_common);
  gen->add_option("-o,--out", gen_out, "Corpus directory (default: config corpus_dir)");

  Common train_common;
  std::string train_corpus, train_out, train_mode, train_transport;
  auto* train = app.add_subcommand("train", "Train centrally or federated and write reports");
  add_common(train, train_common);
  train->add_option("--corpus", train_corpus, "Corpus directory (default: config corpus_dir)");
  train->add_option("-o,--out", train_out,
                    "Output directory (default: $FSCL_OUTPUT_DIR, then config output_dir)");
  train->add_option("--mode", train_mode, "centralized or federated")
      ->check(CLI::IsMember({"centralized", "federated"}));
  train->add_option("--transport", train_transport, "direct, memory or tcp")
      ->check(CLI::IsMember({"direct", "memory", "tcp"}));

  std::vector<std::string> compare_dirs;
  std::vector<std::size_t> compare_rounds;
  auto* compare = app.add_subcommand("compare", "Merge run summaries into one CSV table");
  compare->add_option("runs", compare_dirs, "Run output directories")->required();
  compare->add_option("--rounds", compare_rounds, "Report these rounds from rounds.jsonl")
      ->delimiter(',');

  std::size_t grad_configs = 5;
  std::uint64_t grad_seed = 7;
  double grad_delta = 1e-5;
  auto* grad = app.add_subcommand("gradcheck", "Check BPTT gradients against finite differences");
  grad->add_option("--configs", grad_configs, "Number of random tiny configurations");
  grad->add_option("--seed", grad_seed, "Seed for the configurations");
  grad->add_option("--delta", grad_delta, "Central-difference step");

  Common show_common;
  auto* show = app.add_subcommand("config", "Print the resolved configuration");
  add_common(show, show_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*gen) {
      auto config = resolve(gen_common);
      const fs::path out = gen_out.empty() ? config.corpus_dir : fs::path(gen_out);
      const auto report = fscl::gen_data(config, out);
      std::printf("wrote %zu traces (%zu benign, %zu malicious) to %s\n",
                  report.n_benign + report.n_malicious, report.n_benign, report.n_malicious,
                  out.string().c_str());
      return 0;
    }
    if (*train) {
      auto config = resolve(train_common);
      if (const char* env = std::getenv("FSCL_OUTPUT_DIR"); env != nullptr && *env != '\0')
        config.output_dir = env;
      if (!train_out.empty()) config.output_dir = train_out;
      if (!train_corpus.empty()) config.corpus_dir = train_corpus;
      if (!train_mode.empty())
        config.mode =
            train_mode == "centralized" ? fscl::RunMode::Centralized : fscl::RunMode::Federated;
      if (train_transport == "memory") config.transport = fscl::TransportMode::Memory;
      if (train_transport == "tcp") config.transport = fscl::TransportMode::Tcp;
      if (train_transport == "direct") config.transport = fscl::TransportMode::Direct;
      fscl::train(config, std::cerr);
      return 0;
    }
    if (*compare) {
      std::vector<fs::path> dirs(compare_dirs.begin(), compare_dirs.end());
      std::cout << fscl::compare_runs(dirs, {compare_rounds});
      return 0;
    }
    if (*grad) return run_gradcheck(grad_configs, grad_seed, grad_delta);
    if (*show) {
      std::cout << resolve(show_common).to_json_text();
      return 0;
    }
  } catch (const fscl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
