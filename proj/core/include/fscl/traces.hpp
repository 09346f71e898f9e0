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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fscl {

enum class Label : std::uint8_t { Benign = 0, Malicious = 1 };

std::string_view to_string(Label label) noexcept;
// Accepts "benign" / "malicious"; throws ParseError otherwise.
Label parse_label(std::string_view text);

inline int label_value(Label label) noexcept { return label == Label::Malicious ? 1 : 0; }

// Syscall-name grammar: [a-z_][a-z0-9_]*
bool is_syscall_name(std::string_view token) noexcept;

struct Trace {
  std::string id;
  Label label = Label::Benign;
  std::vector<std::string> tokens;
  // Timestamped source lines, populated when the trace was read from disk.
  std::vector<std::string> raw_lines;
};

struct GeneratorSpec {
  std::size_t alphabet_size = 120;
  std::uint64_t benign_transition_seed = 0xB3A1;
  std::uint64_t malicious_transition_seed = 0x3A11;
  std::vector<std::vector<std::string>> attack_ngrams = {
      {"ptrace", "mprotect", "execve"},
      {"setuid", "setgid", "execve"},
      {"socket", "connect", "sendto", "ptrace"},
  };
  double attack_injection_rate = 0.01;
  std::size_t min_length = 40;
  std::size_t max_length = 100;
  std::size_t n_benign = 510;
  std::size_t n_malicious = 690;
  double separability = 0.6;

  // Throws ValidationError naming every offending field.
  void validate() const;
};

// Built-in list of real Linux/Android syscall names used for the alphabet.
std::span<const std::string_view> builtin_syscalls() noexcept;

// First `size` built-in names, then sc_<n> for the remainder.
std::vector<std::string> make_alphabet(std::size_t size);

// Benign traces come from a first-order Markov chain over the alphabet;
// malicious traces from the row-renormalized mix
// (1 - separability) * benign + separability * random, with attack n-grams
// spliced in. Trace i draws from its own stream derived from (seed, i).
std::vector<Trace> generate_corpus(const GeneratorSpec& spec, std::uint64_t seed);

inline constexpr std::string_view kManifestName = "manifest.json";

// One "<epoch_seconds>.<millis> <syscall>" file per trace plus manifest.json.
// Returns the manifest path.
std::filesystem::path write_corpus(std::span<const Trace> traces,
                                   const std::filesystem::path& dir);

std::vector<Trace> read_corpus(const std::filesystem::path& dir);

}  // namespace fscl
