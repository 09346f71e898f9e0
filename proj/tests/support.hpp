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

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "fscl/traces.hpp"

namespace fscl::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "fscl") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Trace make_trace(std::string id, Label label, std::vector<std::string> tokens) {
  Trace t;
  t.id = std::move(id);
  t.label = label;
  t.tokens = std::move(tokens);
  return t;
}

// n_benign + n_malicious placeholder traces; token content is irrelevant.
inline std::vector<Trace> labelled_traces(std::size_t n_benign, std::size_t n_malicious,
                                          std::size_t length = 12) {
  std::vector<Trace> out;
  for (std::size_t i = 0; i < n_benign + n_malicious; ++i) {
    std::vector<std::string> tokens(length, i < n_benign ? "read" : "write");
    out.push_back(make_trace("t" + std::to_string(i),
                             i < n_benign ? Label::Benign : Label::Malicious, std::move(tokens)));
  }
  return out;
}

// Small generated corpus for fast end-to-end tests.
inline GeneratorSpec small_spec(std::size_t n_benign = 30, std::size_t n_malicious = 30) {
  GeneratorSpec spec;
  spec.n_benign = n_benign;
  spec.n_malicious = n_malicious;
  spec.min_length = 20;
  spec.max_length = 30;
  return spec;
}

}  // namespace fscl::testing
