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

#include "fscl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fscl/error.hpp"
#include "fscl/fed/remote.hpp"
#include "fscl/hash.hpp"
#include "fscl/transport/checkpoint.hpp"

namespace fscl {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kSummarySchema = "fscl/summary";
constexpr const char* kRoundSchema = "fscl/round";
constexpr const char* kConfusionSchema = "fscl/confusion";

// One JSON object being overlaid onto defaults; remembers which keys it has
// consumed so leftovers can be reported as unknown.
class Section {
 public:
  Section(const Json* obj, std::string prefix, IssueList& issues)
      : obj_(obj), prefix_(std::move(prefix)), issues_(issues) {}

  void count(const char* key, std::size_t& out) {
    if (const Json* v = find(key)) {
      if (v->is_number_unsigned()) out = v->get<std::size_t>();
      else issues_.check(false, path(key) + " must be a non-negative integer");
    }
  }
  void u64(const char* key, std::uint64_t& out) {
    if (const Json* v = find(key)) {
      if (v->is_number_unsigned()) out = v->get<std::uint64_t>();
      else issues_.check(false, path(key) + " must be a non-negative integer");
    }
  }
  void real(const char* key, double& out) {
    if (const Json* v = find(key)) {
      if (v->is_number()) out = v->get<double>();
      else issues_.check(false, path(key) + " must be a number");
    }
  }
  void boolean(const char* key, bool& out) {
    if (const Json* v = find(key)) {
      if (v->is_boolean()) out = v->get<bool>();
      else issues_.check(false, path(key) + " must be true or false");
    }
  }
  // Calls parse(text) for string values; ParseError becomes an issue.
  template <typename Parse>
  void text(const char* key, Parse&& parse) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) {
        issues_.check(false, path(key) + " must be a string");
        return;
      }
      try {
        parse(v->get<std::string>());
      } catch (const ParseError& e) {
        issues_.check(false, path(key) + ": " + e.what());
      }
    }
  }
  void ngrams(const char* key, std::vector<std::vector<std::string>>& out) {
    const Json* v = find(key);
    if (v == nullptr) return;
    bool ok = v->is_array();
    std::vector<std::vector<std::string>> grams;
    for (const auto& gram : ok ? *v : Json::array()) {
      ok = ok && gram.is_array();
      std::vector<std::string> tokens;
      for (const auto& tok : ok ? gram : Json::array()) {
        ok = ok && tok.is_string();
        if (ok) tokens.push_back(tok.get<std::string>());
      }
      grams.push_back(std::move(tokens));
    }
    if (ok) out = std::move(grams);
    else issues_.check(false, path(key) + " must be a list of lists of syscall names");
  }

  Section child(const char* key) {
    const Json* v = find(key);
    if (v != nullptr && !v->is_object()) {
      issues_.check(false, path(key) + " must be an object");
      v = nullptr;
    }
    return Section(v, path(key), issues_);
  }

  void reject_unknown() const {
    if (obj_ == nullptr) return;
    for (const auto& item : obj_->items())
      if (std::find(known_.begin(), known_.end(), item.key()) == known_.end())
        issues_.check(false, "unknown key " + path(item.key()));
  }

 private:
  const Json* find(const char* key) {
    known_.emplace_back(key);
    if (obj_ == nullptr) return nullptr;
    auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }
  std::string path(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  const Json* obj_;
  std::string prefix_;
  IssueList& issues_;
  std::vector<std::string> known_;
};

template <typename F>
void collect(IssueList& issues, F&& validate) {
  try {
    validate();
  } catch (const ValidationError& e) {
    issues.append(e.issues());
  }
}

RunMode parse_mode(std::string_view text) {
  if (text == "federated") return RunMode::Federated;
  if (text == "centralized") return RunMode::Centralized;
  throw ParseError("expected 'federated' or 'centralized', got '" + std::string(text) + "'");
}

TransportMode parse_transport(std::string_view text) {
  for (auto mode : {TransportMode::Direct, TransportMode::Memory, TransportMode::Tcp})
    if (text == to_string(mode)) return mode;
  throw ParseError("expected 'direct', 'memory' or 'tcp', got '" + std::string(text) + "'");
}

// Everything that defines the experiment, without filesystem locations.
Json experiment_json(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = c.seed;
  j["mode"] = std::string(to_string(c.mode));
  const auto& g = c.generator;
  j["generator"] = {{"alphabet_size", g.alphabet_size},
                    {"benign_transition_seed", g.benign_transition_seed},
                    {"malicious_transition_seed", g.malicious_transition_seed},
                    {"attack_ngrams", g.attack_ngrams},
                    {"attack_injection_rate", g.attack_injection_rate},
                    {"min_length", g.min_length},
                    {"max_length", g.max_length},
                    {"n_benign", g.n_benign},
                    {"n_malicious", g.n_malicious},
                    {"separability", g.separability}};
  j["split"] = {{"train_fraction", c.split.train_fraction},
                {"stratified", c.split.stratified}};
  const auto& f = c.features;
  j["features"] = {{"window", f.window},
                   {"stride", f.stride},
                   {"max_terms", f.max_terms},
                   {"noise_sigma", f.noise_sigma}};
  const auto& m = c.model;
  j["model"] = {{"gru1_units", m.gru1_units},     {"gru2_units", m.gru2_units},
                {"dense_hidden", m.dense_hidden}, {"dropout_rate", m.dropout_rate},
                {"bn_momentum", m.bn_momentum},   {"bn_epsilon", m.bn_epsilon},
                {"learning_rate", m.learning_rate}, {"weight_decay", m.weight_decay},
                {"adam_beta1", m.adam_beta1},     {"adam_beta2", m.adam_beta2},
                {"adam_epsilon", m.adam_epsilon}, {"batch_size", m.batch_size}};
  const auto& fc = c.fed;
  j["fed"] = {{"n_clients", fc.n_clients},
              {"rounds", fc.rounds},
              {"local_epochs", fc.local_epochs},
              {"partition", std::string(fed::to_string(fc.partition.kind))},
              {"alpha", fc.partition.alpha},
              {"early_stop_threshold", fc.early_stop_threshold},
              {"client_parallelism", fc.client_parallelism},
              {"participation_fraction", fc.participation_fraction},
              {"transport", std::string(to_string(c.transport))}};
  const auto& cc = c.centralized;
  j["centralized"] = {{"max_epochs", cc.max_epochs},
                      {"early_stop_threshold", cc.early_stop_threshold},
                      {"early_stopping", cc.early_stopping}};
  return j;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json metric_json(const MetricSet& m) { return Json::parse(m.to_json()); }

Json evaluation_json(const nn::Evaluation& e) {
  return {{"window", metric_json(e.window)}, {"trace", metric_json(e.trace)}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string distribution_name(const ExperimentConfig& c) {
  if (c.mode == RunMode::Centralized) return "centralized";
  switch (c.fed.partition.kind) {
    case fed::PartitionKind::IID:
    case fed::PartitionKind::PresetFig1IID:
    case fed::PartitionKind::ScaledFig1IID:
      return "iid";
    default:
      return "non-iid";
  }
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

Json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed " + path.string() + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(RunMode mode) noexcept {
  return mode == RunMode::Centralized ? "centralized" : "federated";
}

std::string_view to_string(TransportMode mode) noexcept {
  switch (mode) {
    case TransportMode::Direct: return "direct";
    case TransportMode::Memory: return "memory";
    case TransportMode::Tcp: return "tcp";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  IssueList issues;
  collect(issues, [&] { generator.validate(); });
  collect(issues, [&] { split.validate(); });
  collect(issues, [&] { features.validate(); });
  collect(issues, [&] { model.validate(); });
  collect(issues, [&] { fed.validate(); });
  issues.check(centralized.max_epochs >= 1, "centralized.max_epochs must be >= 1");
  issues.check(centralized.early_stop_threshold > 0.0 && centralized.early_stop_threshold <= 1.0,
               "centralized.early_stop_threshold must be in (0, 1]");
  issues.check(!corpus_dir.empty(), "corpus_dir must not be empty");
  issues.check(!output_dir.empty(), "output_dir must not be empty");
  issues.throw_if_any();
}

std::string ExperimentConfig::to_json_text() const {
  Json j = experiment_json(*this);
  j["corpus_dir"] = corpus_dir.generic_string();
  j["output_dir"] = output_dir.generic_string();
  return j.dump(2) + "\n";
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(experiment_json(*this).dump())); }

fed::PipelineConfig ExperimentConfig::pipeline() const {
  fed::PipelineConfig p{split, features, model};
  p.split.seed = seed;
  return p;
}

fed::FedConfig ExperimentConfig::fed_config() const {
  fed::FedConfig f = fed;
  f.seed = seed;
  return f;
}

fed::CentralizedConfig ExperimentConfig::centralized_config() const {
  fed::CentralizedConfig c = centralized;
  c.seed = seed;
  return c;
}

ExperimentConfig parse_config(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError({std::string("config is not valid JSON: ") + e.what()});
  }
  if (!root.is_object()) throw ValidationError({"config must be a JSON object"});

  ExperimentConfig c;
  IssueList issues;
  Section top(&root, "", issues);
  std::size_t version = kSchemaVersion;
  top.count("schema_version", version);
  issues.check(version == kSchemaVersion,
               "schema_version " + std::to_string(version) + " is not supported (expected " +
                   std::to_string(kSchemaVersion) + ")");
  top.u64("seed", c.seed);
  top.text("mode", [&](const std::string& s) { c.mode = parse_mode(s); });
  top.text("corpus_dir", [&](const std::string& s) { c.corpus_dir = s; });
  top.text("output_dir", [&](const std::string& s) { c.output_dir = s; });

  Section gen = top.child("generator");
  auto& g = c.generator;
  gen.count("alphabet_size", g.alphabet_size);
  gen.u64("benign_transition_seed", g.benign_transition_seed);
  gen.u64("malicious_transition_seed", g.malicious_transition_seed);
  gen.ngrams("attack_ngrams", g.attack_ngrams);
  gen.real("attack_injection_rate", g.attack_injection_rate);
  gen.count("min_length", g.min_length);
  gen.count("max_length", g.max_length);
  gen.count("n_benign", g.n_benign);
  gen.count("n_malicious", g.n_malicious);
  gen.real("separability", g.separability);
  gen.reject_unknown();

  Section split = top.child("split");
  split.real("train_fraction", c.split.train_fraction);
  split.boolean("stratified", c.split.stratified);
  split.reject_unknown();

  Section feat = top.child("features");
  feat.count("window", c.features.window);
  feat.count("stride", c.features.stride);
  feat.count("max_terms", c.features.max_terms);
  feat.real("noise_sigma", c.features.noise_sigma);
  feat.reject_unknown();

  Section model = top.child("model");
  auto& m = c.model;
  model.count("gru1_units", m.gru1_units);
  model.count("gru2_units", m.gru2_units);
  model.count("dense_hidden", m.dense_hidden);
  model.real("dropout_rate", m.dropout_rate);
  model.real("bn_momentum", m.bn_momentum);
  model.real("bn_epsilon", m.bn_epsilon);
  model.real("learning_rate", m.learning_rate);
  model.real("weight_decay", m.weight_decay);
  model.real("adam_beta1", m.adam_beta1);
  model.real("adam_beta2", m.adam_beta2);
  model.real("adam_epsilon", m.adam_epsilon);
  model.count("batch_size", m.batch_size);
  model.reject_unknown();

  Section fedsec = top.child("fed");
  auto& f = c.fed;
  fedsec.count("n_clients", f.n_clients);
  fedsec.count("rounds", f.rounds);
  fedsec.count("local_epochs", f.local_epochs);
  fedsec.text("partition",
              [&](const std::string& s) { f.partition.kind = fed::parse_partition_kind(s); });
  fedsec.real("alpha", f.partition.alpha);
  fedsec.real("early_stop_threshold", f.early_stop_threshold);
  fedsec.count("client_parallelism", f.client_parallelism);
  fedsec.real("participation_fraction", f.participation_fraction);
  fedsec.text("transport", [&](const std::string& s) { c.transport = parse_transport(s); });
  fedsec.reject_unknown();

  Section cent = top.child("centralized");
  cent.count("max_epochs", c.centralized.max_epochs);
  cent.real("early_stop_threshold", c.centralized.early_stop_threshold);
  cent.boolean("early_stopping", c.centralized.early_stopping);
  cent.reject_unknown();

  top.reject_unknown();
  collect(issues, [&] { c.validate(); });
  issues.throw_if_any();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError({"cannot read config file " + path.string()});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

GenDataReport gen_data(const ExperimentConfig& config, const fs::path& out_dir) {
  config.validate();
  const auto traces = generate_corpus(config.generator, config.seed);
  GenDataReport report;
  report.manifest = write_corpus(traces, out_dir);
  for (const auto& t : traces) ++(t.label == Label::Benign ? report.n_benign : report.n_malicious);
  return report;
}

TrainReport train(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec || !fs::is_directory(config.output_dir))
    throw ValidationError({"output_dir " + config.output_dir.string() + " cannot be created: " +
                           ec.message()});
  if (!fs::is_directory(config.corpus_dir))
    throw Error("corpus directory " + config.corpus_dir.string() +
                " not found (generate one with gen-data)");

  const auto start = std::chrono::steady_clock::now();
  const auto corpus = read_corpus(config.corpus_dir);
  const auto pipeline = config.pipeline();
  // Cheap to redo; gives the vocabulary and sizes for the summary.
  const fed::PreparedData data = fed::prepare_data(corpus, pipeline);
  log << "corpus: " << corpus.size() << " traces, train " << data.train.size() << " / val "
      << data.val.size() << ", vocabulary " << data.vocab.size() << ", windows "
      << data.train_set.size() << " / " << data.val_set.size() << "\n";

  TrainReport report;
  report.output_dir = config.output_dir;
  const fs::path dir = config.output_dir;
  Json summary;
  summary["schema"] = kSummarySchema;
  summary["schema_version"] = kSchemaVersion;
  summary["config_hash"] = config.hash();
  summary["mode"] = std::string(to_string(config.mode));
  summary["distribution"] = distribution_name(config);
  std::vector<double> step_times;
  nn::ParamSet final_params;
  Json data_json = {{"traces", corpus.size()},
                    {"train_traces", data.train.size()},
                    {"val_traces", data.val.size()},
                    {"train_windows", data.train_set.size()},
                    {"val_windows", data.val_set.size()},
                    {"vocab_size", data.vocab.size()}};

  std::string curves;
  if (config.mode == RunMode::Federated) {
    const auto fc = config.fed_config();
    std::ofstream rounds_out(dir / "rounds.jsonl", std::ios::binary | std::ios::trunc);
    if (!rounds_out) throw Error("cannot write " + (dir / "rounds.jsonl").string());
    curves = "round,val_trace_accuracy,val_window_accuracy,train_trace_accuracy\n";
    auto on_round = [&](const fed::RoundReport& r) {
      Json line;
      line["schema"] = kRoundSchema;
      line["schema_version"] = kSchemaVersion;
      line["round"] = r.round;
      line["train_accuracy"] = r.train_accuracy;
      line["window"] = metric_json(r.global.window);
      line["trace"] = metric_json(r.global.trace);
      Json clients = Json::array();
      for (const auto& c : r.per_client)
        clients.push_back({{"client_id", c.client_id},
                           {"n_samples", c.n_samples},
                           {"local_accuracy", c.local_accuracy}});
      line["clients"] = std::move(clients);
      rounds_out << line.dump() << '\n';
      rounds_out.flush();
      curves += std::to_string(r.round) + "," + fmt("%.6f", r.global.trace.accuracy) + "," +
                fmt("%.6f", r.global.window.accuracy) + "," + fmt("%.6f", r.train_accuracy) +
                "\n";
      step_times.push_back(r.wall_time);
      log << "round " << r.round << ": val trace acc " << fmt("%.4f", r.global.trace.accuracy)
          << ", window acc " << fmt("%.4f", r.global.window.accuracy) << ", train trace acc "
          << fmt("%.4f", r.train_accuracy) << " (" << fmt("%.1f", r.wall_time) << " s)\n";
      log.flush();
    };
    fed::FederatedResult result =
        config.transport == TransportMode::Direct
            ? fed::run_federated(corpus, fc, pipeline, on_round)
            : fed::run_federated_remote(corpus, fc, pipeline,
                                        config.transport == TransportMode::Memory
                                            ? fed::TransportKind::Memory
                                            : fed::TransportKind::Tcp,
                                        on_round);
    if (!rounds_out) throw Error("write failed for " + (dir / "rounds.jsonl").string());
    report.final = result.rounds.back().global;
    report.steps = result.rounds.back().round;
    report.early_stopped = result.early_stopped;
    final_params = std::move(result.final_params);
    summary["clients"] = fc.n_clients;
    summary["rounds"] = report.steps;
    data_json["shard_traces"] = result.shard_sizes;
  } else {
    auto result = fed::run_centralized(corpus, pipeline, config.centralized_config());
    std::string history = "epoch,loss,window_accuracy,train_trace_accuracy,val_trace_accuracy\n";
    curves = "epoch,val_trace_accuracy,train_trace_accuracy,loss\n";
    auto opt = [](const std::optional<double>& v) { return v ? fmt("%.6f", *v) : std::string(); };
    for (const auto& h : result.history) {
      history += std::to_string(h.epoch) + "," + fmt("%.6f", h.loss) + "," +
                 fmt("%.6f", h.window_accuracy) + "," + opt(h.train_accuracy) + "," +
                 opt(h.val_accuracy) + "\n";
      curves += std::to_string(h.epoch) + "," + opt(h.val_accuracy) + "," +
                opt(h.train_accuracy) + "," + fmt("%.6f", h.loss) + "\n";
      log << "epoch " << h.epoch << ": loss " << fmt("%.4f", h.loss) << ", val trace acc "
          << opt(h.val_accuracy) << "\n";
    }
    write_text(dir / "history.csv", history);
    report.final = result.validation;
    report.steps = result.history.size();
    report.early_stopped = result.early_stopped;
    final_params = std::move(result.params);
    summary["clients"] = 1;
    summary["epochs"] = report.steps;
  }
  summary["early_stopped"] = report.early_stopped;
  summary["data"] = std::move(data_json);
  summary["final"] = evaluation_json(report.final);
  summary["config"] = experiment_json(config);

  write_text(dir / "curves.csv", curves);
  Json confusion;
  confusion["schema"] = kConfusionSchema;
  confusion["schema_version"] = kSchemaVersion;
  const auto counts = [](const Confusion& c) {
    return Json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
  };
  confusion["window"] = counts(report.final.window.confusion);
  confusion["trace"] = counts(report.final.trace.confusion);
  write_text(dir / "confusion.json", confusion.dump(2) + "\n");
  data.vocab.save(dir / "vocab.json");
  transport::save_checkpoint(dir / "model.fscp", final_params,
                             static_cast<std::uint32_t>(report.steps), data.model);

  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  summary["wall_time"] = {{"total_seconds", total}, {"per_round_seconds", step_times}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  log << "final: trace acc " << fmt("%.4f", report.final.trace.accuracy) << ", f1 "
      << fmt("%.4f", report.final.trace.f1) << ", window acc "
      << fmt("%.4f", report.final.window.accuracy) << " -> " << dir.string() << "\n";
  return report;
}

std::string compare_runs(std::span<const fs::path> run_dirs, const CompareOptions& options) {
  if (run_dirs.size() < 2) throw ValidationError({"compare needs at least two run directories"});

  std::vector<Json> summaries;
  for (const auto& dir : run_dirs) {
    Json s = read_json(dir / "summary.json");
    if (!s.is_object() || s.value("schema", "") != kSummarySchema)
      throw Error(dir.string() + "/summary.json is not a run summary");
    summaries.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const Json& v = summaries[i]["schema_version"];
    if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
      throw Error("incompatible summaries: " + run_dirs[i].string() + " has schema_version " +
                  v.dump() + ", expected " + std::to_string(kSchemaVersion));
  }

  std::string out = "clients,rounds,distribution,A,P,R,F1\n";
  auto row = [&](const Json& s, const std::string& rounds, const Json& trace) {
    out += s.at("clients").dump() + "," + rounds + "," + s.at("distribution").get<std::string>();
    for (const char* key : {"accuracy", "precision", "recall", "f1"})
      out += "," + fmt("%.4f", trace.at(key).get<double>());
    out += "\n";
  };
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const Json& s = summaries[i];
    try {
      const bool federated = s.at("mode") == "federated";
      if (!federated || options.at_rounds.empty()) {
        row(s, federated ? s.at("rounds").dump() : "", s.at("final").at("trace"));
        continue;
      }
      std::ifstream in(run_dirs[i] / "rounds.jsonl", std::ios::binary);
      if (!in) throw Error("missing " + (run_dirs[i] / "rounds.jsonl").string());
      std::string line;
      while (std::getline(in, line)) {
        Json r = Json::parse(line);
        const auto round = r.at("round").get<std::size_t>();
        if (std::find(options.at_rounds.begin(), options.at_rounds.end(), round) !=
            options.at_rounds.end())
          row(s, std::to_string(round), r.at("trace"));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error("incompatible summary in " + run_dirs[i].string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace fscl
