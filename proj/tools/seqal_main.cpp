// Copyright 2026 The seqal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// seqal command-line driver.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "seqal/corpus.hpp"
#include "seqal/crf.hpp"
#include "seqal/crf_io.hpp"
#include "seqal/crf_train.hpp"
#include "seqal/experiment.hpp"
#include "seqal/features.hpp"
#include "seqal/metrics.hpp"
#include "seqal/report.hpp"
#include "seqal/service.hpp"
#include "seqal/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

// Raised for conditions that map to exit code 2 outside of config parsing.
struct UsageError : seqal::Error {
  using seqal::Error::Error;
};

json stats_json(const seqal::CorpusStats& s) {
  return {{"sentences", s.n_sentences},
          {"tokens", s.n_tokens},
          {"entity_types", s.n_entity_types},
          {"entities", s.n_entities},
          {"avg_sentence_length", s.avg_sentence_len},
          {"avg_entities_per_sentence", s.avg_entities_per_sentence},
          {"avg_entity_length", s.avg_entity_len},
          {"pct_positive_tokens", s.pct_positive_tokens},
          {"pct_sentences_with_entity", s.pct_sentences_with_entity},
          {"pct_sentences_with_2plus_entities", s.pct_sentences_with_2plus_entities}};
}

void print_stats_table(std::ostream& out, const std::string& name, const seqal::CorpusStats& s) {
  out << fmt::format("{:<24}{:>8}{:>9}{:>5}{:>8}{:>7}{:>7}{:>7}{:>8}{:>8}{:>8}\n", "dataset", "#S", "#T", "#E",
                     "#ENT", "ASL", "ASE", "AEL", "%PT", "%AC", "%DAC");
  out << fmt::format("{:<24}{:>8}{:>9}{:>5}{:>8}{:>7.1f}{:>7.2f}{:>7.2f}{:>7.1f}%{:>7.1f}%{:>7.1f}%\n", name,
                     s.n_sentences, s.n_tokens, s.n_entity_types, s.n_entities, s.avg_sentence_len,
                     s.avg_entities_per_sentence, s.avg_entity_len, 100 * s.pct_positive_tokens,
                     100 * s.pct_sentences_with_entity, 100 * s.pct_sentences_with_2plus_entities);
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw seqal::Error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string features_path(const std::string& model) { return model + ".features"; }

// -- stats ------------------------------------------------------------------

struct StatsArgs {
  std::string corpus;
  std::string format = "table";
  std::string json_out;
  bool repair = false;
};

int run_stats(const StatsArgs& a) {
  const auto d = seqal::read_conll_file(a.corpus, {a.repair});
  const auto s = seqal::dataset_stats(d);
  const auto j = stats_json(s);
  if (a.format == "json") {
    std::cout << j.dump(2) << '\n';
  } else {
    print_stats_table(std::cout, fs::path(a.corpus).filename().string(), s);
  }
  if (!a.json_out.empty()) seqal::write_json_atomic(a.json_out, j);
  return kOk;
}

// -- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sentences;
};

int run_generate(const GenerateArgs& a) {
  auto kv = seqal::KeyValueConfig::from_file(a.config);
  auto cfg = seqal::synthetic_config_from(kv);
  kv.reject_unknown_keys();
  if (a.seed) cfg.seed = *a.seed;
  if (a.sentences) cfg.n_sentences = *a.sentences;
  const auto d = seqal::generate_synthetic(cfg);
  seqal::write_text_atomic(a.out, seqal::serialize_conll(d));
  std::cerr << fmt::format("wrote {} sentences to {}\n", d.size(), a.out);
  return kOk;
}

// -- train ------------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string features = "all";
  double l2_sigma = 1.0;
  std::size_t max_iterations = 100;
  double tolerance = 1e-5;
  bool bio_constraints = false;
  bool repair = false;
};

int run_train(const TrainArgs& a) {
  const auto tpl = seqal::FeatureTemplate::parse(a.features);
  if (!(a.l2_sigma > 0)) throw UsageError("--l2-sigma must be > 0");
  const auto d = seqal::read_conll_file(a.corpus, {a.repair});
  const auto idx = seqal::build_feature_index(d, tpl);
  auto init = seqal::CrfModel::zeros(seqal::labels_for_schema(d.schema), idx.size(), a.l2_sigma);
  init.bio_constraints = a.bio_constraints;
  const auto examples = seqal::make_examples(init, d, seqal::featurize_dataset(d, idx));
  seqal::TrainOptions opts;
  opts.max_iterations = a.max_iterations;
  opts.gradient_tolerance = a.tolerance;
  seqal::TrainStats stats;
  const auto model = seqal::train(init, examples, opts, &stats);
  seqal::save_model(model, a.out);
  seqal::save_feature_index(idx, features_path(a.out));
  std::cerr << fmt::format("trained on {} sentences, {} features, {} labels: {} iterations, objective {:.6g}, |grad| {:.3g}\n",
                           d.size(), idx.size(), model.n_labels(), stats.iterations, stats.objective,
                           stats.gradient_norm);
  return kOk;
}

// -- decode -----------------------------------------------------------------

struct DecodeArgs {
  std::string model;
  std::string corpus;
  std::string out;
  std::string emissions;
  bool repair = false;
};

int run_decode(const DecodeArgs& a) {
  const auto model = seqal::load_model(a.model);
  const auto d = seqal::read_conll_file(a.corpus, {a.repair});
  std::vector<seqal::TagSequence> pred, gold;
  if (!a.emissions.empty()) {
    const auto table = seqal::load_emission_matrix(a.emissions, model, d);
    for (const auto& s : d.sentences) {
      auto lat = seqal::lattice_from_emissions(model, table.at(s.id));
      pred.push_back(model.decode_labels(seqal::viterbi(lat).path));
      gold.push_back(s.tags);
    }
  } else {
    const auto idx = seqal::load_feature_index(features_path(a.model));
    if (idx.size() != model.n_features()) throw seqal::ShapeError("feature index does not match the model");
    for (const auto& s : d.sentences) {
      const auto fs = seqal::featurize_sentence(s, idx);
      pred.push_back(model.decode_labels(seqal::viterbi(seqal::build_lattice(model, fs)).path));
      gold.push_back(s.tags);
    }
  }
  if (!a.out.empty()) {
    seqal::Dataset out;
    out.schema = d.schema;
    for (std::size_t k = 0; k < d.size(); ++k) {
      out.sentences.push_back({d.sentences[k].id, d.sentences[k].tokens, seqal::repair_bio(pred[k])});
    }
    seqal::write_text_atomic(a.out, seqal::serialize_conll(out));
  }
  const auto t = seqal::token_f1(pred, gold);
  const auto e = seqal::entity_f1(pred, gold);
  json j{{"sentences", d.size()},
         {"token", seqal::prf_to_json(t)},
         {"entity", seqal::prf_to_json(e)},
         {"sentence_accuracy", seqal::sentence_accuracy(pred, gold)}};
  std::cout << j.dump(2) << '\n';
  return kOk;
}

// -- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string out_root = "runs";
  std::string run_dir;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int run_simulate(const SimulateArgs& a) {
  auto cfg = seqal::load_experiment_config(a.config);
  if (a.seed) cfg.base_seed = *a.seed;
  cfg.learner.jobs = std::max<std::size_t>(1, a.jobs);
  const auto data = seqal::load_corpora(cfg);
  seqal::check_experiment_fits(cfg, data);

  fs::path dir = a.run_dir.empty() ? fs::path(a.out_root) / (timestamp() + "-" + fs::path(a.config).stem().string())
                                   : fs::path(a.run_dir);
  fs::create_directories(dir);
  const auto cfg_copy = dir / "experiment.cfg";
  std::string text = read_file(a.config);
  if (a.seed) text += fmt::format("\n# --seed override\n# base_seed = {}\n", *a.seed);
  if (fs::exists(cfg_copy) && read_file(cfg_copy) != text) {
    throw UsageError(dir.string() + " belongs to a different configuration");
  }
  seqal::write_text_atomic(cfg_copy, text);

  seqal::RunHooks hooks;
  hooks.snapshot_dir = dir / "state";
  if (!a.quiet) hooks.progress = [](const std::string& line) { std::cerr << line << '\n'; };
  const auto t0 = std::chrono::steady_clock::now();
  const auto log = seqal::run_experiment(cfg, data, hooks);
  seqal::write_experiment_outputs(dir, log);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  seqal::write_json_atomic(dir / "state" / "timing.json", {{"seconds", secs}});
  std::cout << dir.string() << '\n';
  return kOk;
}

// -- serve ------------------------------------------------------------------

struct ServeArgs {
  std::string state_dir = "session";
  std::string host = "127.0.0.1";
  int port = 8080;
};

int run_serve(const ServeArgs& a) {
  seqal::AnnotationServer server(seqal::Session::Options{a.state_dir});
  if (!server.bind(a.host, a.port)) {
    std::cerr << fmt::format("error: cannot listen on {}:{}\n", a.host, a.port);
    return kUsage;
  }
  std::cerr << fmt::format("annotation service on http://{}:{} (state in {})\n", a.host, a.port, a.state_dir);
  return server.listen() ? kOk : kRuntime;
}

// -- report -----------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> logs;
  std::string out_dir;
};

int run_report(const ReportArgs& a) {
  std::vector<seqal::LearningCurve> curves;
  for (const auto& path : a.logs) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    curves.push_back(seqal::learning_curve_report(seqal::read_log_csv(in)));
  }
  std::ostringstream table;
  seqal::write_comparison_csv(table, curves);
  std::cout << table.str();
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    for (const auto& c : curves) {
      std::ostringstream cs;
      seqal::write_curve_csv(cs, c);
      seqal::write_text_atomic(fs::path(a.out_dir) / ("curve_" + seqal::to_string(c.strategy) + ".csv"), cs.str());
    }
    seqal::write_text_atomic(fs::path(a.out_dir) / "comparison.csv", table.str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active learning for linear-chain CRF sequence labeling"};
  app.require_subcommand(1);

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Corpus statistics");
  c_stats->add_option("corpus", stats.corpus, "CoNLL file")->required()->check(CLI::ExistingFile);
  c_stats->add_option("--format", stats.format, "table or json")->check(CLI::IsMember({"table", "json"}));
  c_stats->add_option("--json-out", stats.json_out, "Also write the statistics as JSON here");
  c_stats->add_flag("--repair", stats.repair, "Map orphan I-X to B-X while reading");

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Write a synthetic corpus");
  c_gen->add_option("--config", gen.config, "Generator config file")->required()->check(CLI::ExistingFile);
  c_gen->add_option("--out", gen.out, "Output CoNLL file")->required();
  c_gen->add_option("--seed", gen.seed, "Override the config seed");
  c_gen->add_option("--sentences", gen.sentences, "Override n_sentences");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Fit a CRF on a labeled corpus");
  c_train->add_option("corpus", tr.corpus, "CoNLL file")->required()->check(CLI::ExistingFile);
  c_train->add_option("--out", tr.out, "Model file (feature index goes to <out>.features)")->required();
  c_train->add_option("--features", tr.features, "Feature template: all, none or a comma list");
  c_train->add_option("--l2-sigma", tr.l2_sigma, "Gaussian prior width");
  c_train->add_option("--max-iterations", tr.max_iterations, "L-BFGS iterations");
  c_train->add_option("--tolerance", tr.tolerance, "Relative gradient-norm tolerance");
  c_train->add_flag("--bio-constraints", tr.bio_constraints, "Forbid invalid BIO transitions");
  c_train->add_flag("--repair", tr.repair, "Map orphan I-X to B-X while reading");

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "Tag a corpus with a trained model and score it");
  c_dec->add_option("--model", dec.model, "Model file")->required()->check(CLI::ExistingFile);
  c_dec->add_option("corpus", dec.corpus, "CoNLL file with gold tags")->required()->check(CLI::ExistingFile);
  c_dec->add_option("--out", dec.out, "Write predictions as CoNLL");
  c_dec->add_option("--emissions", dec.emissions, "Precomputed emission matrices instead of features")
      ->check(CLI::ExistingFile);
  c_dec->add_flag("--repair", dec.repair, "Map orphan I-X to B-X while reading");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run a multi-seed active learning experiment");
  c_sim->add_option("--config", sim.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--out-root", sim.out_root, "Parent of the run-stamped output directory");
  c_sim->add_option("--run-dir", sim.run_dir, "Exact output directory (resumes when it holds snapshots)");
  c_sim->add_option("--jobs", sim.jobs, "Worker threads for decoding");
  c_sim->add_option("--seed", sim.seed, "Override base_seed");
  c_sim->add_flag("--quiet", sim.quiet, "No progress output");

  ServeArgs srv;
  auto* c_srv = app.add_subcommand("serve", "Start the annotation service");
  c_srv->add_option("--state-dir", srv.state_dir, "Session persistence directory");
  c_srv->add_option("--host", srv.host, "Bind address");
  c_srv->add_option("--port", srv.port, "TCP port")->check(CLI::Range(1, 65535));

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Learning curves and comparison table from experiment logs");
  c_rep->add_option("logs", rep.logs, "log_<STRATEGY>.csv files")->required()->check(CLI::ExistingFile);
  c_rep->add_option("--out-dir", rep.out_dir, "Write curve_*.csv and comparison.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*c_stats) return run_stats(stats);
    if (*c_gen) return run_generate(gen);
    if (*c_train) return run_train(tr);
    if (*c_dec) return run_decode(dec);
    if (*c_sim) return run_simulate(sim);
    if (*c_srv) return run_serve(srv);
    if (*c_rep) return run_report(rep);
  } catch (const seqal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const seqal::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kUsage;
  } catch (const seqal::ValidationError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
