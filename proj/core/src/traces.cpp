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

#include "fscl/traces.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "fscl/error.hpp"
#include "fscl/features.hpp"
#include "fscl/random.hpp"
#include "json.hpp"

namespace fscl {
namespace {

constexpr std::string_view kSyscalls[] = {
    "read",          "write",        "openat",        "close",         "fstat",
    "mmap",          "munmap",       "mprotect",      "brk",           "ioctl",
    "futex",         "epoll_pwait",  "clock_gettime", "getpid",        "gettid",
    "rt_sigaction",  "rt_sigprocmask", "writev",      "readv",         "pread64",
    "pwrite64",      "lseek",        "fcntl",         "dup",           "dup3",
    "pipe2",         "socket",       "connect",       "sendto",        "recvfrom",
    "sendmsg",       "recvmsg",      "bind",          "listen",        "accept4",
    "getsockopt",    "setsockopt",   "getsockname",   "getpeername",   "shutdown",
    "execve",        "clone",        "wait4",         "exit",          "exit_group",
    "kill",          "tgkill",       "ptrace",        "setuid",        "setgid",
    "getuid",        "geteuid",      "getgid",        "getegid",       "setresuid",
    "setresgid",     "prctl",        "madvise",       "mremap",        "msync",
    "faccessat",     "newfstatat",   "readlinkat",    "getdents64",    "mkdirat",
    "unlinkat",      "renameat",     "fchmodat",      "fchownat",      "symlinkat",
    "linkat",        "ftruncate",    "fsync",         "fdatasync",     "statfs",
    "fstatfs",       "chdir",        "fchdir",        "getcwd",        "umask",
    "nanosleep",     "clock_nanosleep", "sched_yield", "sched_getaffinity", "getpriority",
    "setpriority",   "getrlimit",    "setrlimit",     "prlimit64",     "getrusage",
    "sysinfo",       "uname",        "gettimeofday",  "times",         "capget",
    "capset",        "personality",  "inotify_init1", "inotify_add_watch", "eventfd2",
    "timerfd_create", "timerfd_settime", "signalfd4", "epoll_create1", "epoll_ctl",
    "ppoll",         "pselect6",     "getrandom",     "memfd_create",  "membarrier",
    "mount",         "umount2",      "pivot_root",    "chroot",        "init_module",
    "delete_module", "finit_module", "process_vm_readv", "process_vm_writev", "keyctl",
    "add_key",       "request_key",  "seccomp",       "bpf",           "perf_event_open",
    "setns",         "unshare",      "sethostname",   "getxattr",      "setxattr",
    "listxattr",     "removexattr",  "flock",         "splice",        "tee",
    "sync",          "syncfs",       "io_setup",      "io_submit",     "io_getevents",
};

// One row-stochastic matrix stored as cumulative rows for sampling.
class MarkovChain {
 public:
  explicit MarkovChain(std::vector<std::vector<double>> rows) : cumulative_(std::move(rows)) {
    for (auto& row : cumulative_) {
      double acc = 0.0;
      for (double& p : row) {
        acc += p;
        p = acc;
      }
      for (double& p : row) p /= acc;
      row.back() = 1.0;
    }
  }

  std::size_t next(std::size_t state, Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& row = cumulative_[state];
    auto it = std::upper_bound(row.begin(), row.end(), unit(rng));
    return std::min<std::size_t>(static_cast<std::size_t>(it - row.begin()), row.size() - 1);
  }

 private:
  std::vector<std::vector<double>> cumulative_;
};

// Random transition rows: each state favours about a dozen successors over a
// uniform floor, which resembles the bursty structure of real syscall logs.
std::vector<std::vector<double>> random_transitions(std::size_t n, std::uint64_t seed) {
  constexpr std::size_t kSuccessors = 12;
  constexpr double kFloor = 0.10;
  Rng rng(seed);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, kFloor / static_cast<double>(n)));
  for (auto& row : rows) {
    std::array<double, kSuccessors> w{};
    double total = 0.0;
    for (double& x : w) total += (x = gamma(rng));
    for (double x : w) row[pick(rng)] += (1.0 - kFloor) * x / total;
  }
  return rows;
}

std::vector<std::vector<double>> mix_transitions(const std::vector<std::vector<double>>& base,
                                                 const std::vector<std::vector<double>>& other,
                                                 double s) {
  auto out = base;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < out[i].size(); ++j) {
      out[i][j] = (1.0 - s) * base[i][j] + s * other[i][j];
      total += out[i][j];
    }
    for (double& p : out[i]) p /= total;
  }
  return out;
}

std::string format_timestamp(std::uint64_t millis) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llu.%03llu",
                static_cast<unsigned long long>(millis / 1000),
                static_cast<unsigned long long>(millis % 1000));
  return buf;
}

}  // namespace

std::string_view to_string(Label label) noexcept {
  return label == Label::Malicious ? "malicious" : "benign";
}

Label parse_label(std::string_view text) {
  if (text == "benign") return Label::Benign;
  if (text == "malicious") return Label::Malicious;
  throw ParseError("unknown label: '" + std::string(text) + "'");
}

bool is_syscall_name(std::string_view token) noexcept {
  if (token.empty()) return false;
  auto lower_or_us = [](char c) { return (c >= 'a' && c <= 'z') || c == '_'; };
  if (!lower_or_us(token.front())) return false;
  return std::all_of(token.begin() + 1, token.end(),
                     [&](char c) { return lower_or_us(c) || (c >= '0' && c <= '9'); });
}

void GeneratorSpec::validate() const {
  IssueList issues;
  issues.check(alphabet_size >= 20, "generator.alphabet_size must be >= 20");
  issues.check(min_length >= 20, "generator.min_length must be >= 20 (2 * window)");
  issues.check(max_length >= min_length, "generator.max_length must be >= min_length");
  issues.check(attack_injection_rate >= 0.0 && attack_injection_rate <= 1.0,
               "generator.attack_injection_rate must be in [0, 1]");
  issues.check(separability >= 0.0 && separability <= 1.0,
               "generator.separability must be in [0, 1]");
  issues.check(n_benign >= 1, "generator.n_benign must be >= 1");
  issues.check(n_malicious >= 1, "generator.n_malicious must be >= 1");
  issues.check(attack_injection_rate == 0.0 || !attack_ngrams.empty(),
               "generator.attack_ngrams must be non-empty when attack_injection_rate > 0");
  for (const auto& gram : attack_ngrams) {
    bool ok = !gram.empty() && std::all_of(gram.begin(), gram.end(), is_syscall_name);
    issues.check(ok, "generator.attack_ngrams contains an empty n-gram or invalid syscall name");
    if (!ok) break;
  }
  issues.throw_if_any();
}

std::span<const std::string_view> builtin_syscalls() noexcept { return kSyscalls; }

std::vector<std::string> make_alphabet(std::size_t size) {
  std::vector<std::string> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    out.emplace_back(i < std::size(kSyscalls) ? std::string(kSyscalls[i])
                                          : "sc_" + std::to_string(i));
  }
  return out;
}

std::vector<Trace> generate_corpus(const GeneratorSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto alphabet = make_alphabet(spec.alphabet_size);
  const std::size_t n = alphabet.size();

  const auto benign_rows = random_transitions(n, spec.benign_transition_seed);
  const auto random_rows = random_transitions(n, spec.malicious_transition_seed);
  const MarkovChain benign(benign_rows);
  const MarkovChain malicious(mix_transitions(benign_rows, random_rows, spec.separability));

  auto alphabet_index = [&](const std::string& token) -> std::ptrdiff_t {
    auto it = std::find(alphabet.begin(), alphabet.end(), token);
    return it == alphabet.end() ? -1 : it - alphabet.begin();
  };

  const std::size_t total = spec.n_benign + spec.n_malicious;
  std::vector<Trace> traces(total);
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng(derive_seed(seed, {stream::kTrace, i}));
    Trace& trace = traces[i];
    char id[32];
    std::snprintf(id, sizeof id, "trace_%05zu", i);
    trace.id = id;
    trace.label = i < spec.n_benign ? Label::Benign : Label::Malicious;
    const bool is_malicious = trace.label == Label::Malicious;
    const MarkovChain& chain = is_malicious ? malicious : benign;

    std::uniform_int_distribution<std::size_t> length_dist(spec.min_length, spec.max_length);
    std::uniform_int_distribution<std::size_t> start_dist(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t length = length_dist(rng);

    trace.tokens.reserve(length);
    std::size_t state = start_dist(rng);
    trace.tokens.push_back(alphabet[state]);
    while (trace.tokens.size() < length) {
      if (is_malicious && spec.attack_injection_rate > 0.0 &&
          unit(rng) < spec.attack_injection_rate) {
        std::uniform_int_distribution<std::size_t> gram_dist(0, spec.attack_ngrams.size() - 1);
        const auto& gram = spec.attack_ngrams[gram_dist(rng)];
        for (const auto& token : gram) {
          if (trace.tokens.size() == length) break;
          trace.tokens.push_back(token);
        }
        auto idx = alphabet_index(trace.tokens.back());
        state = idx >= 0 ? static_cast<std::size_t>(idx) : start_dist(rng);
        continue;
      }
      state = chain.next(state, rng);
      trace.tokens.push_back(alphabet[state]);
    }
  }
  return traces;
}

std::filesystem::path write_corpus(std::span<const Trace> traces,
                                   const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create corpus directory " + dir.string() + ": " + ec.message());

  nlohmann::json files = nlohmann::json::array();
  std::uint64_t base_millis = 1625184000000ULL;
  for (const auto& trace : traces) {
    if (trace.id.empty() || trace.id.find_first_of("/\\") != std::string::npos)
      throw Error("trace id is not a valid file name: '" + trace.id + "'");
    const std::string name = trace.id + ".log";
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / name).string());
    std::uint64_t millis = base_millis;
    for (std::size_t k = 0; k < trace.tokens.size(); ++k) {
      millis += 1 + (k * 7) % 13;
      out << format_timestamp(millis) << ' ' << trace.tokens[k] << '\n';
    }
    if (!out) throw Error("write failed for " + (dir / name).string());
    base_millis += 60'000;
    files.push_back({{"name", name}, {"label", std::string(to_string(trace.label))}});
  }

  const fs::path manifest = dir / kManifestName;
  std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + manifest.string());
  out << nlohmann::json{{"files", files}}.dump(2) << '\n';
  if (!out) throw Error("write failed for " + manifest.string());
  return manifest;
}

std::vector<Trace> read_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = dir / kManifestName;
  std::ifstream manifest_in(manifest_path, std::ios::binary);
  if (!manifest_in) throw ParseError("missing manifest: " + manifest_path.string());

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!manifest.contains("files") || !manifest["files"].is_array())
    throw ParseError("manifest " + manifest_path.string() + " has no 'files' array");

  std::vector<Trace> traces;
  traces.reserve(manifest["files"].size());
  for (const auto& entry : manifest["files"]) {
    if (!entry.contains("name") || !entry.contains("label") || !entry["name"].is_string() ||
        !entry["label"].is_string())
      throw ParseError("manifest entry missing 'name' or 'label': " + entry.dump());
    const auto name = entry["name"].get<std::string>();
    Trace trace;
    trace.id = fs::path(name).stem().string();
    trace.label = parse_label(entry["label"].get<std::string>());

    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw ParseError("corpus file not found: " + name);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      std::string token;
      try {
        token = strip_timestamp(line);
      } catch (const ParseError& e) {
        throw ParseError(name + ":" + std::to_string(line_no) + ": " + e.what());
      }
      if (!is_syscall_name(token))
        throw ParseError(name + ":" + std::to_string(line_no) + ": invalid syscall name '" +
                         token + "'");
      trace.tokens.push_back(std::move(token));
      trace.raw_lines.push_back(line);
    }
    if (trace.tokens.empty()) throw ParseError("corpus file has no system calls: " + name);
    traces.push_back(std::move(trace));
  }
  return traces;
}

}  // namespace fscl
