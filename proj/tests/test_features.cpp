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

#include <cmath>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "fscl/error.hpp"
#include "fscl/features.hpp"
#include "support.hpp"

namespace fscl {
namespace {

using testing::make_trace;

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

TokenWindow view(const std::vector<std::string>& tokens) {
  return TokenWindow(tokens.begin(), tokens.end());
}

TEST(StripTimestamp, Examples) {
  EXPECT_EQ(strip_timestamp("1625184000.123 openat"), "openat");
  EXPECT_EQ(strip_timestamp("42 futex"), "futex");
  EXPECT_EQ(strip_timestamp("  7.5\tread  "), "read");
  EXPECT_THROW(strip_timestamp("openat"), ParseError);
  EXPECT_THROW(strip_timestamp("12.x read"), ParseError);
  EXPECT_THROW(strip_timestamp("12 read write"), ParseError);
}

TEST(StripTimestamp, ErrorCarriesLine) {
  try {
    strip_timestamp("garbage");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("garbage"), std::string::npos);
  }
}

TEST(FitVocab, SmoothIdfHandValues) {
  const std::vector<Trace> docs = {
      make_trace("d0", Label::Benign, split_words("a a b")),
      make_trace("d1", Label::Malicious, split_words("a c")),
  };
  const auto vocab = fit_vocab(docs);
  ASSERT_EQ(vocab.size(), 3u);
  EXPECT_EQ(vocab.n_docs, 2u);
  const auto a = *vocab.column("a");
  const auto b = *vocab.column("b");
  const auto c = *vocab.column("c");
  EXPECT_EQ(vocab.doc_freq[a], 2u);
  EXPECT_EQ(vocab.doc_freq[b], 1u);
  EXPECT_EQ(vocab.doc_freq[c], 1u);
  EXPECT_NEAR(vocab.idf[a], 1.0, 1e-12);
  EXPECT_NEAR(vocab.idf[b], 1.405465, 1e-6);
  EXPECT_NEAR(vocab.idf[c], std::log(3.0 / 2.0) + 1.0, 1e-12);
  EXPECT_FALSE(vocab.column("zzz").has_value());
}

TEST(FitVocab, KeepsMostFrequentAndDropsRarest) {
  // Term k occurs k + 1 times, so the five terms with the lowest k are rarest.
  std::vector<std::string> tokens;
  for (int k = 0; k < 1005; ++k)
    for (int rep = 0; rep <= k % 1005; ++rep) tokens.push_back("t" + std::to_string(k));
  const auto vocab = fit_vocab(std::vector<Trace>{make_trace("x", Label::Benign, tokens)}, 1000);
  EXPECT_EQ(vocab.size(), 1000u);
  for (int k = 0; k < 5; ++k) EXPECT_FALSE(vocab.column("t" + std::to_string(k)).has_value());
  for (int k = 5; k < 1005; ++k) EXPECT_TRUE(vocab.column("t" + std::to_string(k)).has_value());
}

TEST(FitVocab, TieBreakIsLexicographic) {
  const std::vector<Trace> docs = {
      make_trace("d", Label::Benign, split_words("write read open open open")),
  };
  const auto vocab = fit_vocab(docs, 2);
  EXPECT_TRUE(vocab.column("open").has_value());
  EXPECT_TRUE(vocab.column("read").has_value());
  EXPECT_FALSE(vocab.column("write").has_value());
}

TEST(FitVocab, Invariants) {
  const auto traces = generate_corpus(testing::small_spec(), 4);
  const auto vocab = fit_vocab(traces, 50);
  EXPECT_LE(vocab.size(), 50u);
  std::set<std::string> unique(vocab.terms.begin(), vocab.terms.end());
  EXPECT_EQ(unique.size(), vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    EXPECT_EQ(vocab.term_index.at(vocab.terms[i]), i);
    EXPECT_GE(vocab.doc_freq[i], 1u);
    EXPECT_GT(vocab.idf[i], 0.0);
    EXPECT_DOUBLE_EQ(vocab.idf[i], std::log((1.0 + vocab.n_docs) / (1.0 + vocab.doc_freq[i])) + 1.0);
  }
  EXPECT_FALSE(vocab.column(kPadToken).has_value());
}

TEST(FitVocab, EmptyCorpusRejected) {
  EXPECT_THROW(fit_vocab(std::vector<Trace>{}), Error);
}

TEST(FitVocab, JsonRoundTrip) {
  const auto vocab = fit_vocab(generate_corpus(testing::small_spec(), 4), 30);
  const auto back = TfIdfVocab::from_json(vocab.to_json());
  EXPECT_EQ(back.terms, vocab.terms);
  EXPECT_EQ(back.doc_freq, vocab.doc_freq);
  EXPECT_EQ(back.idf, vocab.idf);
  EXPECT_EQ(back.n_docs, vocab.n_docs);
  EXPECT_THROW(TfIdfVocab::from_json("{\"version\":2}"), ParseError);
}

TEST(SlidingWindows, Examples) {
  std::vector<std::string> tokens(14);
  for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = "s" + std::to_string(i);
  const auto w = sliding_windows(tokens, 10, 2);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0][0], "s0");
  EXPECT_EQ(w[1][0], "s2");
  EXPECT_EQ(w[2][0], "s4");
  EXPECT_EQ(w[2][9], "s13");

  std::vector<std::string> ten(tokens.begin(), tokens.begin() + 10);
  ASSERT_EQ(sliding_windows(ten, 10, 2).size(), 1u);

  std::vector<std::string> seven(tokens.begin(), tokens.begin() + 7);
  const auto padded = sliding_windows(seven, 10, 2);
  ASSERT_EQ(padded.size(), 1u);
  ASSERT_EQ(padded[0].size(), 10u);
  EXPECT_EQ(padded[0][6], "s6");
  for (std::size_t i = 7; i < 10; ++i) EXPECT_EQ(padded[0][i], kPadToken);

  EXPECT_THROW(sliding_windows(std::vector<std::string>{}, 10, 2), Error);
}

TEST(SlidingWindows, CountFormulaProperty) {
  Rng rng(123);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t width = 1 + rng() % 12;
    const std::size_t stride = 1 + rng() % 5;
    const std::size_t len = width + rng() % 40;
    std::vector<std::string> tokens(len, "x");
    const auto windows = sliding_windows(tokens, width, stride);
    ASSERT_EQ(windows.size(), (len - width) / stride + 1) << len << " " << width << " " << stride;
    for (const auto& w : windows) ASSERT_EQ(w.size(), width);
  }
}

TEST(FeaturizeWindow, RepeatedTokenNormalizesToInverseSqrtW) {
  const std::vector<Trace> docs = {make_trace("d0", Label::Benign, split_words("u v")),
                                   make_trace("d1", Label::Benign, split_words("v"))};
  const auto vocab = fit_vocab(docs);
  const std::vector<std::string> window(10, "u");
  const auto f = featurize_window(view(window), vocab, 10);
  const Eigen::MatrixXd dense = f.dense();
  ASSERT_EQ(dense.rows(), 10);
  ASSERT_EQ(dense.cols(), static_cast<Eigen::Index>(vocab.size()));
  const auto col = *vocab.column("u");
  for (int t = 0; t < 10; ++t) {
    EXPECT_NEAR(dense(t, col), 1.0 / std::sqrt(10.0), 1e-12);
    EXPECT_NEAR(dense(t, col), 0.316228, 1e-6);
  }
  EXPECT_EQ(f.nonzeros(), 10u);
}

TEST(FeaturizeWindow, OutOfVocabularyIsZero) {
  const auto vocab = fit_vocab(std::vector<Trace>{make_trace("d", Label::Benign, split_words("a b"))});
  const std::vector<std::string> window(10, "zzz");
  const auto f = featurize_window(view(window), vocab, 10);
  EXPECT_EQ(f.nonzeros(), 0u);
  EXPECT_EQ(f.dense().norm(), 0.0);
}

TEST(FeaturizeWindow, TwoDistinctTokensTwoCells) {
  const auto vocab = fit_vocab(std::vector<Trace>{make_trace("d", Label::Benign, split_words("a b a"))});
  std::vector<std::string> window(10, "oov");
  window[0] = "a";
  window[1] = "b";
  const auto f = featurize_window(view(window), vocab, 10);
  EXPECT_EQ(f.nonzeros(), 2u);
  const Eigen::MatrixXd d = f.dense();
  EXPECT_EQ((d.array() != 0.0).count(), 2);
  EXPECT_NEAR(d.norm(), 1.0, 1e-12);
  // Equal tf and idf ratio: a has df 1 like b, so both cells are equal.
  EXPECT_NEAR(d(0, *vocab.column("a")), d(1, *vocab.column("b")), 1e-12);
}

TEST(FeaturizeWindow, TfCountsWithinWindow) {
  const std::vector<Trace> docs = {make_trace("d0", Label::Benign, split_words("a b")),
                                   make_trace("d1", Label::Benign, split_words("b"))};
  const auto vocab = fit_vocab(docs);
  std::vector<std::string> window(10, "oov");
  window[0] = "a";
  window[1] = "a";
  window[2] = "b";
  const auto f = featurize_window(view(window), vocab, 10);
  // Unnormalized cells: a -> (2/10) idf(a) twice, b -> (1/10) idf(b).
  const double ia = vocab.idf[*vocab.column("a")];
  const double ib = vocab.idf[*vocab.column("b")];
  const double va = 0.2 * ia, vb = 0.1 * ib;
  const double norm = std::sqrt(2 * va * va + vb * vb);
  const Eigen::MatrixXd d = f.dense();
  EXPECT_NEAR(d(0, *vocab.column("a")), va / norm, 1e-12);
  EXPECT_NEAR(d(1, *vocab.column("a")), va / norm, 1e-12);
  EXPECT_NEAR(d(2, *vocab.column("b")), vb / norm, 1e-12);
}

TEST(FeaturizeWindow, WrongLengthRejected) {
  const auto vocab = fit_vocab(std::vector<Trace>{make_trace("d", Label::Benign, split_words("a"))});
  const std::vector<std::string> window(9, "a");
  EXPECT_THROW(featurize_window(view(window), vocab, 10), ShapeError);
}

TEST(FeaturizeWindow, NormIsZeroOrOneAndSparse) {
  const auto traces = generate_corpus(testing::small_spec(), 8);
  const auto vocab = fit_vocab(std::span(traces).first(20), 40);
  for (const auto& t : traces) {
    for (const auto& w : sliding_windows(t.tokens, 10, 2)) {
      const auto f = featurize_window(w, vocab, 10);
      const double n = f.dense().norm();
      EXPECT_TRUE(std::abs(n) < 1e-12 || std::abs(n - 1.0) < 1e-6);
      EXPECT_LE(f.nonzeros(), 10u);
      EXPECT_TRUE(f.dense().allFinite());
      EXPECT_GE(f.dense().minCoeff(), 0.0);
    }
  }
}

TEST(InjectNoise, SigmaZeroIsIdentity) {
  Rng rng(1);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 7);
  EXPECT_EQ(inject_noise(x, 0.0, rng), x);
}

TEST(InjectNoise, MomentsOverAMillionEntries) {
  Rng rng(2024);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1000, 1000, 0.25);
  const Eigen::MatrixXd d = inject_noise(x, 0.02, rng) - x;
  const double mean = d.mean();
  const double var = (d.array() - mean).square().sum() / static_cast<double>(d.size() - 1);
  EXPECT_NEAR(mean, 0.0, 0.0005);
  EXPECT_NEAR(std::sqrt(var), 0.02, 0.0005);
}

TEST(InjectNoise, ReproducibleAndInPlaceAgree) {
  Rng a(5), b(5);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 6);
  Eigen::MatrixXd y = x;
  inject_noise_inplace(y, 0.1, b);
  EXPECT_EQ(inject_noise(x, 0.1, a), y);
  EXPECT_THROW(inject_noise(x, -1.0, a), Error);
}

TEST(Split, StratifiedCounts) {
  const auto traces = testing::labelled_traces(10, 10);
  const auto split = split_train_val(traces, SplitSpec{0.7, 1, true});
  auto count = [](const std::vector<Trace>& v, Label l) {
    return std::count_if(v.begin(), v.end(), [&](const Trace& t) { return t.label == l; });
  };
  EXPECT_EQ(count(split.train, Label::Benign), 7);
  EXPECT_EQ(count(split.train, Label::Malicious), 7);
  EXPECT_EQ(count(split.val, Label::Benign), 3);
  EXPECT_EQ(count(split.val, Label::Malicious), 3);
}

TEST(Split, RoundsPerClass) {
  const auto traces = testing::labelled_traces(510, 690);
  const auto split = split_train_val(traces, SplitSpec{0.7, 42, true});
  EXPECT_EQ(split.train.size(), 357u + 483u);
  EXPECT_EQ(split.val.size(), 153u + 207u);
}

TEST(Split, DeterministicDisjointAndOrdered) {
  const auto traces = testing::labelled_traces(25, 31);
  const auto a = split_train_val(traces, SplitSpec{0.7, 9, true});
  const auto b = split_train_val(traces, SplitSpec{0.7, 9, true});
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].id, b.train[i].id);

  std::set<std::string> train_ids, val_ids;
  for (const auto& t : a.train) train_ids.insert(t.id);
  for (const auto& t : a.val) {
    EXPECT_FALSE(train_ids.count(t.id)) << t.id;
    val_ids.insert(t.id);
  }
  EXPECT_EQ(train_ids.size() + val_ids.size(), traces.size());

  auto index_of = [](const std::string& id) { return std::stoi(id.substr(1)); };
  for (std::size_t i = 1; i < a.train.size(); ++i)
    EXPECT_LT(index_of(a.train[i - 1].id), index_of(a.train[i].id));
}

TEST(Split, TooFewPerClassRejected) {
  EXPECT_THROW(split_train_val(testing::labelled_traces(1, 5), SplitSpec{}), Error);
  EXPECT_THROW(SplitSpec{1.0}.validate(), ValidationError);
}

TEST(BuildDataset, WindowsInheritLabelsAndStayWithTheirTrace) {
  const auto traces = generate_corpus(testing::small_spec(6, 6), 3);
  const auto split = split_train_val(traces, SplitSpec{0.7, 3, true});
  const auto vocab = fit_vocab(split.train);
  const FeatureConfig cfg;
  const auto train = build_dataset(split.train, vocab, cfg);
  const auto val = build_dataset(split.val, vocab, cfg);

  std::size_t expected = 0;
  for (const auto& t : split.train)
    expected += t.tokens.size() < cfg.window ? 1 : (t.tokens.size() - cfg.window) / cfg.stride + 1;
  EXPECT_EQ(train.size(), expected);
  EXPECT_EQ(train.trace_count(), split.train.size());
  EXPECT_EQ(train.dim, vocab.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& s = train.samples[i];
    const auto t = train.sample_trace[i];
    EXPECT_EQ(s.trace_id, train.trace_ids[t]);
    EXPECT_EQ(s.label, train.trace_labels[t]);
    EXPECT_EQ(s.features.width, cfg.window);
  }
  std::set<std::string> train_ids(train.trace_ids.begin(), train.trace_ids.end());
  for (const auto& id : val.trace_ids) EXPECT_FALSE(train_ids.count(id));
}

TEST(FeatureConfig, ValidationListsEveryIssue) {
  FeatureConfig cfg;
  cfg.window = 0;
  cfg.stride = 0;
  cfg.noise_sigma = -1;
  try {
    cfg.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.issues().size(), 3u);
  }
}

}  // namespace
}  // namespace fscl
