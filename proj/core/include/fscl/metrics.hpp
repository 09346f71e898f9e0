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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fscl {

enum class MetricLevel { Window, Trace };

std::string_view to_string(MetricLevel level) noexcept;

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

// Malicious is the positive class. Zero denominators yield 0.
struct MetricSet {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion confusion;
  MetricLevel level = MetricLevel::Trace;
  double threshold = 0.5;

  static MetricSet from_confusion(const Confusion& c, MetricLevel level, double threshold = 0.5);

  // Mean of the per-class recalls.
  double balanced_accuracy() const noexcept;

  // {"level","threshold","accuracy","precision","recall","f1","confusion":{..}}
  std::string to_json() const;
};

MetricSet evaluate(std::span<const double> probs, std::span<const int> labels,
                   double threshold = 0.5, MetricLevel level = MetricLevel::Trace);

// Mean of window probabilities per trace. `window_trace[i]` is the trace index
// of window i; every trace in [0, n_traces) must own at least one window.
std::vector<double> aggregate_trace_level(std::span<const double> window_probs,
                                          std::span<const std::size_t> window_trace,
                                          std::size_t n_traces);

// Keyed variant: groups by trace id. Returns (trace_probs, labels) in key order.
std::pair<std::vector<double>, std::vector<int>> aggregate_trace_level(
    const std::map<std::string, std::vector<double>>& window_probs,
    const std::map<std::string, int>& trace_labels);

}  // namespace fscl
