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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fscl/features.hpp"
#include "fscl/fed/engine.hpp"
#include "fscl/nn/model.hpp"
#include "fscl/traces.hpp"

namespace fscl {

// Stamped into every JSON file the driver writes.
inline constexpr int kSchemaVersion = 1;

enum class RunMode { Centralized, Federated };
// How federated clients are reached: direct calls, in-memory channels or
// loopback TCP.
enum class TransportMode { Direct, Memory, Tcp };

std::string_view to_string(RunMode mode) noexcept;
std::string_view to_string(TransportMode mode) noexcept;

struct ExperimentConfig {
  GeneratorSpec generator;
  SplitSpec split;
  FeatureConfig features;
  nn::ModelConfig model;  // input_dim is taken from the fitted vocabulary
  fed::FedConfig fed;
  fed::CentralizedConfig centralized;
  TransportMode transport = TransportMode::Direct;
  RunMode mode = RunMode::Federated;
  std::filesystem::path corpus_dir = "data/corpus";
  std::filesystem::path output_dir = "runs/default";
  // Master seed; split, init, partition and training seeds derive from it.
  std::uint64_t seed = 42;

  // Throws ValidationError listing every invalid field.
  void validate() const;

  // Canonical JSON text (the config file format).
  std::string to_json_text() const;
  // Hex fingerprint of the canonical JSON.
  std::string hash() const;

  fed::PipelineConfig pipeline() const;
  fed::FedConfig fed_config() const;
  fed::CentralizedConfig centralized_config() const;
};

// Defaults overlaid with the keys present in `text`. Unknown keys and type
// errors are reported together with the validation issues.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct GenDataReport {
  std::filesystem::path manifest;
  std::size_t n_benign = 0;
  std::size_t n_malicious = 0;
};

GenDataReport gen_data(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct TrainReport {
  std::filesystem::path output_dir;
  nn::Evaluation final;
  std::size_t steps = 0;  // rounds completed (federated) or epochs (centralized)
  bool early_stopped = false;
};

// Reads the corpus from config.corpus_dir, trains, and writes summary.json,
// confusion.json, curves.csv, vocab.json, model.fscp and either rounds.jsonl
// (federated) or history.csv (centralized). Progress goes to `log`.
TrainReport train(const ExperimentConfig& config, std::ostream& log);

struct CompareOptions {
  // Rounds to report from rounds.jsonl; empty means the final result only.
  std::vector<std::size_t> at_rounds;
};

// CSV with columns clients,rounds,distribution,A,P,R,F1 (trace level), one
// row per run (or per requested round).
std::string compare_runs(std::span<const std::filesystem::path> run_dirs,
                         const CompareOptions& options = {});

}  // namespace fscl
