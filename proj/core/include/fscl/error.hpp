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

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fscl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a configuration or spec fails validation. Carries one message
// per offending field so callers can report all of them at once.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& issue : issues) {
      out += "\n  - ";
      out += issue;
    }
    return out;
  }

  std::vector<std::string> issues_;
};

// Collects validation issues and throws them together.
class IssueList {
 public:
  void check(bool ok, std::string message) {
    if (!ok) issues_.push_back(std::move(message));
  }
  void append(const std::vector<std::string>& prefixed) {
    issues_.insert(issues_.end(), prefixed.begin(), prefixed.end());
  }
  bool empty() const noexcept { return issues_.empty(); }
  const std::vector<std::string>& items() const noexcept { return issues_; }
  void throw_if_any() const {
    if (!issues_.empty()) throw ValidationError(issues_);
  }

 private:
  std::vector<std::string> issues_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace fscl
