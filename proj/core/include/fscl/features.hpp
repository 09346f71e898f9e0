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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "fscl/random.hpp"
#include "fscl/traces.hpp"

namespace fscl {

// Reserved right-padding token; never part of a vocabulary.
inline constexpr std::string_view kPadToken = "<pad>";

// Removes the leading "<seconds>[.<fraction>]" timestamp from a log line.
// Throws ParseError with the offending line when the line is malformed.
std::string strip_timestamp(std::string_view line);

struct TfIdfVocab {
  std::vector<std::string> terms;
  std::unordered_map<std::string, std::uint32_t> term_index;
  std::vector<std::uint64_t> doc_freq;
  std::vector<double> idf;
  std::uint64_t n_docs = 0;

  std::size_t size() const noexcept { return terms.size(); }
  std::optional<std::uint32_t> column(std::string_view term) const;

  // {"version":1,"n_docs":..,"terms":[..],"doc_freq":[..],"idf":[..]}
  std::string to_json() const;
  static TfIdfVocab from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static TfIdfVocab load(const std::filesystem::path& path);
};

// Keeps the max_terms most frequent terms (ties broken lexicographically);
// idf = ln((1 + n_docs) / (1 + df)) + 1.
TfIdfVocab fit_vocab(std::span<const Trace> training_traces, std::size_t max_terms = 1000);

using TokenWindow = std::vector<std::string_view>;

// Windows start at 0, stride, 2*stride, ...; a sequence shorter than `width`
// yields one window right-padded with kPadToken. The returned views point
// into `tokens`.
std::vector<TokenWindow> sliding_windows(std::span<const std::string> tokens,
                                         std::size_t width = 10, std::size_t stride = 2);

// Featurized window, stored sparsely: each row carries at most one nonzero.
struct WindowFeatures {
  std::size_t width = 0;
  std::size_t dim = 0;
  std::vector<std::int32_t> column;  // per row; -1 marks an all-zero row
  std::vector<double> value;         // per row

  Eigen::MatrixXd dense() const;
  std::size_t nonzeros() const noexcept;
};

// Row t holds tf * idf of token t at its vocabulary column, tf being the
// token's count within the window divided by the window width. The whole
// (width x dim) matrix is then L2-normalized when its norm is positive.
WindowFeatures featurize_window(std::span<const std::string_view> window,
                                const TfIdfVocab& vocab, std::size_t width = 10);

// Adds i.i.d. N(0, sigma^2) noise to every entry.
void inject_noise_inplace(Eigen::Ref<Eigen::MatrixXd> features, double sigma, Rng& rng);
Eigen::MatrixXd inject_noise(const Eigen::MatrixXd& features, double sigma, Rng& rng);

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  bool stratified = true;

  void validate() const;
};

struct TrainValSplit {
  std::vector<Trace> train;
  std::vector<Trace> val;
};

// Splits whole traces so no trace contributes windows to both sides.
// Each side keeps the corpus order of its traces.
TrainValSplit split_train_val(std::span<const Trace> traces, const SplitSpec& spec);

struct FeatureConfig {
  std::size_t window = 10;
  std::size_t stride = 2;
  std::size_t max_terms = 1000;
  double noise_sigma = 0.02;

  void validate() const;
};

struct Sample {
  WindowFeatures features;
  int label = 0;  // 1 = malicious
  std::string trace_id;
  std::size_t window_index = 0;
};

// All windows of a set of traces, with the window -> trace mapping needed for
// trace-level aggregation.
struct WindowDataset {
  std::size_t width = 0;
  std::size_t dim = 0;
  std::vector<Sample> samples;
  std::vector<std::size_t> sample_trace;  // index into trace_ids / trace_labels
  std::vector<std::string> trace_ids;
  std::vector<int> trace_labels;

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t trace_count() const noexcept { return trace_ids.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

WindowDataset build_dataset(std::span<const Trace> traces, const TfIdfVocab& vocab,
                            const FeatureConfig& config);

// Dense row-major CSV dump of one sample, for debugging.
void write_sample_csv(const Sample& sample, const std::filesystem::path& path);

}  // namespace fscl
