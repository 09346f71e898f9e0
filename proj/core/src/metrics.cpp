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

#include "fscl/metrics.hpp"

#include <numeric>

#include "fscl/error.hpp"
#include "json.hpp"

namespace fscl {
namespace {

double safe_ratio(double num, double den) noexcept { return den > 0.0 ? num / den : 0.0; }

}  // namespace

std::string_view to_string(MetricLevel level) noexcept {
  return level == MetricLevel::Window ? "window" : "trace";
}

MetricSet MetricSet::from_confusion(const Confusion& c, MetricLevel level, double threshold) {
  MetricSet m;
  m.confusion = c;
  m.level = level;
  m.threshold = threshold;
  const auto tp = static_cast<double>(c.tp);
  m.accuracy = safe_ratio(tp + static_cast<double>(c.tn), static_cast<double>(c.total()));
  m.precision = safe_ratio(tp, tp + static_cast<double>(c.fp));
  m.recall = safe_ratio(tp, tp + static_cast<double>(c.fn));
  m.f1 = safe_ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

double MetricSet::balanced_accuracy() const noexcept {
  const double tpr = safe_ratio(static_cast<double>(confusion.tp),
                                static_cast<double>(confusion.tp + confusion.fn));
  const double tnr = safe_ratio(static_cast<double>(confusion.tn),
                                static_cast<double>(confusion.tn + confusion.fp));
  return 0.5 * (tpr + tnr);
}

std::string MetricSet::to_json() const {
  nlohmann::ordered_json j;
  j["level"] = std::string(to_string(level));
  j["threshold"] = threshold;
  j["accuracy"] = accuracy;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  j["confusion"] = {{"tp", confusion.tp}, {"fp", confusion.fp},
                    {"fn", confusion.fn}, {"tn", confusion.tn}};
  return j.dump();
}

MetricSet evaluate(std::span<const double> probs, std::span<const int> labels, double threshold,
                   MetricLevel level) {
  if (probs.size() != labels.size())
    throw ShapeError("evaluate: " + std::to_string(probs.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  if (probs.empty()) throw Error("evaluate: empty input");
  Confusion c;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error("evaluate: labels must be 0 or 1");
    const bool predicted = probs[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return MetricSet::from_confusion(c, level, threshold);
}

std::vector<double> aggregate_trace_level(std::span<const double> window_probs,
                                          std::span<const std::size_t> window_trace,
                                          std::size_t n_traces) {
  if (window_probs.size() != window_trace.size())
    throw ShapeError("aggregate_trace_level: probability/trace index length mismatch");
  std::vector<double> sums(n_traces, 0.0);
  std::vector<std::size_t> counts(n_traces, 0);
  for (std::size_t i = 0; i < window_probs.size(); ++i) {
    if (window_trace[i] >= n_traces) throw Error("aggregate_trace_level: trace index out of range");
    sums[window_trace[i]] += window_probs[i];
    ++counts[window_trace[i]];
  }
  for (std::size_t t = 0; t < n_traces; ++t) {
    if (counts[t] == 0)
      throw Error("aggregate_trace_level: trace " + std::to_string(t) + " has no windows");
    sums[t] /= static_cast<double>(counts[t]);
  }
  return sums;
}

std::pair<std::vector<double>, std::vector<int>> aggregate_trace_level(
    const std::map<std::string, std::vector<double>>& window_probs,
    const std::map<std::string, int>& trace_labels) {
  std::pair<std::vector<double>, std::vector<int>> out;
  for (const auto& [id, label] : trace_labels) {
    auto it = window_probs.find(id);
    if (it == window_probs.end() || it->second.empty())
      throw Error("aggregate_trace_level: no windows for trace '" + id + "'");
    const auto& probs = it->second;
    out.first.push_back(std::accumulate(probs.begin(), probs.end(), 0.0) /
                        static_cast<double>(probs.size()));
    out.second.push_back(label);
  }
  return out;
}

}  // namespace fscl
