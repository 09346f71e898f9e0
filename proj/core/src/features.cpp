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

#include "fscl/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "fscl/error.hpp"
#include "json.hpp"

namespace fscl {

std::string strip_timestamp(std::string_view line) {
  static const std::regex kLine(R"(^\s*\d+(\.\d+)?\s+(\S+)\s*$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(line.begin(), line.end(), m, kLine))
    throw ParseError("malformed trace line: '" + std::string(line) + "'");
  return m[2].str();
}

std::optional<std::uint32_t> TfIdfVocab::column(std::string_view term) const {
  auto it = term_index.find(std::string(term));
  if (it == term_index.end()) return std::nullopt;
  return it->second;
}

std::string TfIdfVocab::to_json() const {
  nlohmann::json j{{"version", 1},       {"n_docs", n_docs}, {"terms", terms},
                   {"doc_freq", doc_freq}, {"idf", idf}};
  return j.dump();
}

TfIdfVocab TfIdfVocab::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed vocabulary JSON: ") + e.what());
  }
  if (j.value("version", 0) != 1) throw ParseError("unsupported vocabulary version");
  TfIdfVocab vocab;
  try {
    vocab.n_docs = j.at("n_docs").get<std::uint64_t>();
    vocab.terms = j.at("terms").get<std::vector<std::string>>();
    vocab.doc_freq = j.at("doc_freq").get<std::vector<std::uint64_t>>();
    vocab.idf = j.at("idf").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed vocabulary JSON: ") + e.what());
  }
  if (vocab.doc_freq.size() != vocab.terms.size() || vocab.idf.size() != vocab.terms.size())
    throw ParseError("vocabulary arrays are not index-aligned");
  for (std::uint32_t i = 0; i < vocab.terms.size(); ++i) {
    if (!vocab.term_index.emplace(vocab.terms[i], i).second)
      throw ParseError("duplicate vocabulary term: " + vocab.terms[i]);
  }
  return vocab;
}

void TfIdfVocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json() << '\n';
}

TfIdfVocab TfIdfVocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read vocabulary " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

TfIdfVocab fit_vocab(std::span<const Trace> training_traces, std::size_t max_terms) {
  struct Counts {
    std::uint64_t total = 0;
    std::uint64_t docs = 0;
    std::size_t last_doc = static_cast<std::size_t>(-1);
  };
  std::unordered_map<std::string, Counts> counts;
  std::uint64_t n_docs = 0;
  for (std::size_t d = 0; d < training_traces.size(); ++d) {
    const auto& tokens = training_traces[d].tokens;
    if (tokens.empty()) continue;
    ++n_docs;
    for (const auto& token : tokens) {
      if (token == kPadToken) continue;
      auto& c = counts[token];
      ++c.total;
      if (c.last_doc != d) {
        c.last_doc = d;
        ++c.docs;
      }
    }
  }
  if (n_docs == 0) throw Error("cannot fit vocabulary on an empty corpus");

  std::vector<const std::pair<const std::string, Counts>*> ranked;
  ranked.reserve(counts.size());
  for (const auto& entry : counts) ranked.push_back(&entry);
  std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    if (a->second.total != b->second.total) return a->second.total > b->second.total;
    return a->first < b->first;
  });
  if (ranked.size() > max_terms) ranked.resize(max_terms);

  TfIdfVocab vocab;
  vocab.n_docs = n_docs;
  for (const auto* entry : ranked) {
    const auto index = static_cast<std::uint32_t>(vocab.terms.size());
    vocab.terms.push_back(entry->first);
    vocab.term_index.emplace(entry->first, index);
    vocab.doc_freq.push_back(entry->second.docs);
    vocab.idf.push_back(std::log((1.0 + static_cast<double>(n_docs)) /
                                 (1.0 + static_cast<double>(entry->second.docs))) +
                        1.0);
  }
  return vocab;
}

std::vector<TokenWindow> sliding_windows(std::span<const std::string> tokens, std::size_t width,
                                         std::size_t stride) {
  if (width == 0 || stride == 0) throw Error("window width and stride must be >= 1");
  if (tokens.empty()) throw Error("cannot window an empty token sequence");

  std::vector<TokenWindow> windows;
  if (tokens.size() < width) {
    TokenWindow window(tokens.begin(), tokens.end());
    window.resize(width, kPadToken);
    windows.push_back(std::move(window));
    return windows;
  }
  const std::size_t count = (tokens.size() - width) / stride + 1;
  windows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    auto first = tokens.begin() + static_cast<std::ptrdiff_t>(k * stride);
    windows.emplace_back(first, first + static_cast<std::ptrdiff_t>(width));
  }
  return windows;
}

Eigen::MatrixXd WindowFeatures::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(width),
                                              static_cast<Eigen::Index>(dim));
  for (std::size_t t = 0; t < width; ++t) {
    if (column[t] >= 0) out(static_cast<Eigen::Index>(t), column[t]) = value[t];
  }
  return out;
}

std::size_t WindowFeatures::nonzeros() const noexcept {
  std::size_t n = 0;
  for (std::size_t t = 0; t < width; ++t) n += (column[t] >= 0 && value[t] != 0.0) ? 1 : 0;
  return n;
}

WindowFeatures featurize_window(std::span<const std::string_view> window, const TfIdfVocab& vocab,
                                std::size_t width) {
  if (window.size() != width)
    throw ShapeError("window has " + std::to_string(window.size()) + " tokens, expected " +
                     std::to_string(width));
  WindowFeatures out;
  out.width = width;
  out.dim = vocab.size();
  out.column.assign(width, -1);
  out.value.assign(width, 0.0);

  double sq_norm = 0.0;
  for (std::size_t t = 0; t < width; ++t) {
    if (window[t] == kPadToken) continue;
    auto col = vocab.column(window[t]);
    if (!col) continue;
    const auto count = std::count(window.begin(), window.end(), window[t]);
    const double tf = static_cast<double>(count) / static_cast<double>(width);
    out.column[t] = static_cast<std::int32_t>(*col);
    out.value[t] = tf * vocab.idf[*col];
    sq_norm += out.value[t] * out.value[t];
  }
  if (sq_norm > 0.0) {
    const double inv = 1.0 / std::sqrt(sq_norm);
    for (double& v : out.value) v *= inv;
  }
  return out;
}

void inject_noise_inplace(Eigen::Ref<Eigen::MatrixXd> features, double sigma, Rng& rng) {
  if (sigma < 0.0) throw Error("noise sigma must be >= 0");
  if (sigma == 0.0) return;
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index c = 0; c < features.cols(); ++c)
    for (Eigen::Index r = 0; r < features.rows(); ++r) features(r, c) += noise(rng);
}

Eigen::MatrixXd inject_noise(const Eigen::MatrixXd& features, double sigma, Rng& rng) {
  Eigen::MatrixXd out = features;
  inject_noise_inplace(out, sigma, rng);
  return out;
}

void SplitSpec::validate() const {
  IssueList issues;
  issues.check(train_fraction > 0.0 && train_fraction < 1.0,
               "split.train_fraction must be in (0, 1)");
  issues.throw_if_any();
}

TrainValSplit split_train_val(std::span<const Trace> traces, const SplitSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {stream::kSplit}));
  std::vector<char> in_train(traces.size(), 0);

  auto take = [&](std::vector<std::size_t> indices) {
    std::shuffle(indices.begin(), indices.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(indices.size())));
    for (std::size_t k = 0; k < n_train && k < indices.size(); ++k) in_train[indices[k]] = 1;
  };

  if (spec.stratified) {
    std::vector<std::size_t> benign;
    std::vector<std::size_t> malicious;
    for (std::size_t i = 0; i < traces.size(); ++i)
      (traces[i].label == Label::Malicious ? malicious : benign).push_back(i);
    if (benign.size() < 2 || malicious.size() < 2)
      throw Error("stratified split needs at least 2 traces per class (have " +
                  std::to_string(benign.size()) + " benign, " +
                  std::to_string(malicious.size()) + " malicious)");
    take(std::move(benign));
    take(std::move(malicious));
  } else {
    if (traces.size() < 2) throw Error("split needs at least 2 traces");
    std::vector<std::size_t> all(traces.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    take(std::move(all));
  }

  TrainValSplit out;
  for (std::size_t i = 0; i < traces.size(); ++i)
    (in_train[i] ? out.train : out.val).push_back(traces[i]);
  return out;
}

void FeatureConfig::validate() const {
  IssueList issues;
  issues.check(window >= 1, "features.window must be >= 1");
  issues.check(stride >= 1, "features.stride must be >= 1");
  issues.check(max_terms >= 1, "features.max_terms must be >= 1");
  issues.check(noise_sigma >= 0.0, "features.noise_sigma must be >= 0");
  issues.throw_if_any();
}

WindowDataset build_dataset(std::span<const Trace> traces, const TfIdfVocab& vocab,
                            const FeatureConfig& config) {
  WindowDataset ds;
  ds.width = config.window;
  ds.dim = vocab.size();
  for (std::size_t ti = 0; ti < traces.size(); ++ti) {
    const auto& trace = traces[ti];
    ds.trace_ids.push_back(trace.id);
    ds.trace_labels.push_back(label_value(trace.label));
    const auto windows = sliding_windows(trace.tokens, config.window, config.stride);
    for (std::size_t k = 0; k < windows.size(); ++k) {
      Sample s;
      s.features = featurize_window(windows[k], vocab, config.window);
      s.label = label_value(trace.label);
      s.trace_id = trace.id;
      s.window_index = k;
      ds.samples.push_back(std::move(s));
      ds.sample_trace.push_back(ti);
    }
  }
  return ds;
}

void write_sample_csv(const Sample& sample, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  const Eigen::MatrixXd m = sample.features.dense();
  out.precision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << '\n';
  }
}

}  // namespace fscl
