// Copyright 2026 the revgraph authors
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

// Command line front end. One binary, one subcommand per pipeline stage:
//
//   build-graph   ingest events into a corpus + graph artifact
//   train         fit link prediction weights on an artifact
//   evaluate      score a trained model, or run the full retrospective pipeline
//   recommend     rank reviewers for one new pull request
//   serve         expose /recommend over http
//   synth         generate a planted-community event log
//   ablate        retrain per relation subset and tabulate ranking metrics
//
// Settings resolve as: flags > --config file > RECOMMENDER_SEED > defaults.
// Exit codes: 0 ok, 1 bad usage or config, 2 runtime failure.

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "revgraph/eval.hpp"
#include "revgraph/serve.hpp"

namespace {

using namespace revgraph;

enum class OutFmt { kTsv, kText, kJson };

struct CommonConfigs {
  IngestConfig ingest;
  ModelConfig model;
  TrainConfig train;
};

std::uint64_t env_default_seed() {
  const char* s = std::getenv("RECOMMENDER_SEED");
  if (!s || !*s) return 1;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (errno != 0 || end == s || *end != '\0')
    throw InvalidConfig("RECOMMENDER_SEED must be an unsigned integer");
  return v;
}

// ---- config file -------------------------------------------------------------

void apply_ingest_json(const nlohmann::json& j, IngestConfig& c) {
  for (const auto& [k, v] : j.items()) {
    if (k == "window")
      c.window = v.get<std::uint32_t>();
    else if (k == "min_token_count")
      c.min_token_count = v.get<std::uint32_t>();
    else if (k == "stopwords_file")
      c.stopwords = StopwordList::from_file(v.get<std::string>());
    else
      throw InvalidConfig("config: unknown ingest key '" + k + "'");
  }
}

void apply_model_json(const nlohmann::json& j, ModelConfig& c) {
  for (const auto& [k, v] : j.items()) {
    if (k == "base_dim")
      c.base_dim = v.get<std::size_t>();
    else if (k == "hidden_dim")
      c.hidden_dim = v.get<std::size_t>();
    else if (k == "out_dim")
      c.out_dim = v.get<std::size_t>();
    else if (k == "relu_output")
      c.relu_output = v.get<bool>();
    else if (k == "include_commenters")
      c.include_commenters = v.get<bool>();
    else if (k == "relations") {
      RelationSet rels;
      for (const auto& r : v) rels.push_back(parse_model_relation(r.get<std::string>()));
      c.relations = normalize_relations(rels);
    } else {
      throw InvalidConfig("config: unknown model key '" + k + "'");
    }
  }
}

void apply_train_json(const nlohmann::json& j, TrainConfig& c) {
  for (const auto& [k, v] : j.items()) {
    if (k == "negative_ratio")
      c.negative_ratio = v.get<std::size_t>();
    else if (k == "batch_size")
      c.batch_size = v.get<std::size_t>();
    else if (k == "learning_rate")
      c.learning_rate = v.get<double>();
    else if (k == "optimizer") {
      const std::string o = v.get<std::string>();
      if (o == "adam")
        c.optimizer = OptimizerKind::kAdam;
      else if (o == "sgd")
        c.optimizer = OptimizerKind::kSgd;
      else
        throw InvalidConfig("config: optimizer must be 'adam' or 'sgd'");
    } else if (k == "adam_beta1")
      c.adam_beta1 = v.get<double>();
    else if (k == "adam_beta2")
      c.adam_beta2 = v.get<double>();
    else if (k == "adam_eps")
      c.adam_eps = v.get<double>();
    else if (k == "max_epochs")
      c.max_epochs = v.get<std::size_t>();
    else if (k == "patience")
      c.patience = v.get<std::size_t>();
    else if (k == "min_delta")
      c.min_delta = v.get<double>();
    else if (k == "heldout_fraction")
      c.heldout_fraction = v.get<double>();
    else if (k == "weight_decay")
      c.weight_decay = v.get<double>();
    else if (k == "seed")
      c.seed = v.get<std::uint64_t>();
    else
      throw InvalidConfig("config: unknown train key '" + k + "'");
  }
}

void load_config_file(const std::string& path, CommonConfigs& cc) {
  std::ifstream is(path);
  if (!is) throw InvalidConfig("cannot read config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw InvalidConfig("config file must hold a JSON object");
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "ingest")
        apply_ingest_json(v, cc.ingest);
      else if (k == "model")
        apply_model_json(v, cc.model);
      else if (k == "train")
        apply_train_json(v, cc.train);
      else
        throw InvalidConfig("config: unknown section '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig("config file " + path + ": " + e.what());
  }
}

// the config file must be applied before option defaults are captured, so it
// is pulled out of argv ahead of the real parse
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return std::string(a.substr(9));
  }
  return {};
}

// ---- shared plumbing -----------------------------------------------------------

RelationSet relations_from_flags(const std::vector<std::string>& names,
                                 const std::string& ablation, const RelationSet& fallback) {
  if (!names.empty() && !ablation.empty())
    throw InvalidConfig("--relations and --ablation are mutually exclusive");
  if (!ablation.empty()) return ablation_relations(parse_ablation_config(ablation));
  if (names.empty()) return fallback;
  RelationSet rels;
  for (const auto& n : names) rels.push_back(parse_model_relation(n));
  return normalize_relations(rels);
}

std::vector<std::size_t> checked_k_list(const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw InvalidConfig("k list must not be empty");
  for (std::size_t k : ks)
    if (k == 0) throw InvalidConfig("k values must be >= 1");
  return ks;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  return os;
}

ProgressFn progress_logger(bool quiet) {
  if (quiet) return {};
  return [](std::size_t epoch, double loss, double sec) {
    std::fprintf(stderr, "epoch %zu loss %.6f (%.1fs)\n", epoch, loss, sec);
  };
}

void print_train_report(const TrainReport& r) {
  std::fprintf(stderr, "stopped after %zu epochs; best epoch %zu, monitored loss %.6f\n",
               r.stopped_epoch, r.best_epoch, r.best_loss);
  if (r.n_heldout_triplets > 0)
    std::fprintf(stderr, "heldout: loss %.6f auc %.4f (%zu of %zu triplets)\n",
                 r.heldout_loss, r.heldout_auc, r.n_heldout_triplets,
                 r.n_heldout_triplets + r.n_train_triplets);
  std::fprintf(stderr, "wall clock %.1fs over %zu training triplets\n", r.wall_clock_sec,
               r.n_train_triplets);
}

void print_skips(const EvalSkips& s) {
  std::fprintf(stderr,
               "cases kept %zu (no reviewers %zu, reviewers unknown %zu, cold start %zu, "
               "no candidates %zu)\n",
               s.kept, s.no_truth, s.truth_absent, s.cold_start, s.no_candidates);
}

nlohmann::json metrics_json(const MetricTable& t, const EvalSkips* skips) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < t.k_list.size(); ++i) {
    rows.push_back({{"k", t.k_list[i]},
                    {"accuracy", t.accuracy[i]},
                    {"mrr", t.reciprocal_rank[i]},
                    {"baseline", t.baseline[i]}});
  }
  nlohmann::json j = {{"cases", t.n_cases}, {"metrics", rows}};
  if (skips) {
    j["skips"] = {{"no_truth", skips->no_truth},
                  {"truth_absent", skips->truth_absent},
                  {"cold_start", skips->cold_start},
                  {"no_candidates", skips->no_candidates}};
  }
  return j;
}

void emit_metrics(const MetricTable& t, OutFmt fmt, const EvalSkips* skips) {
  if (fmt == OutFmt::kJson)
    std::cout << metrics_json(t, skips).dump(2) << "\n";
  else if (fmt == OutFmt::kText)
    std::cout << t.to_text();
  else
    std::cout << t.to_tsv();
}

// ---- subcommand bodies -----------------------------------------------------------

struct BuildArgs {
  std::string events;
  std::string out;
  std::string update;
  std::string stopwords;
  std::string heldout_out;
  double heldout_fraction = 0.0;
};

int cmd_build_graph(const BuildArgs& a, CommonConfigs& cc, bool ingest_flags_used) {
  if ((a.heldout_fraction > 0.0) != !a.heldout_out.empty())
    throw InvalidConfig("--heldout-fraction and --heldout-out must be given together");
  if (!a.stopwords.empty()) cc.ingest.stopwords = StopwordList::from_file(a.stopwords);
  cc.ingest.validate();

  std::vector<EventRecord> events = read_events_file(a.events);
  std::vector<EventRecord> heldout;
  if (a.heldout_fraction > 0.0) {
    auto [keep, held] = split_pr_events(events, a.heldout_fraction, cc.train.seed);
    events = std::move(keep);
    heldout = std::move(held);
  }

  Corpus corpus(cc.ingest);
  if (!a.update.empty()) {
    if (ingest_flags_used)
      throw InvalidConfig("ingest settings are fixed by the artifact being updated");
    corpus = load_artifact_file(a.update).first;
  }
  corpus.apply(events);
  const Graph g = corpus.build_graph();
  save_artifact_file(a.out, corpus, g);
  if (!heldout.empty()) {
    auto os = open_output(a.heldout_out);
    write_events_jsonl(os, heldout);
  }
  std::fprintf(stderr, "ingested %zu events: %zu nodes, %zu edges (%zu users, %zu words)\n",
               events.size(), g.node_count(), g.edge_count(),
               g.nodes_of_kind(NodeKind::kUser).size(),
               g.nodes_of_kind(NodeKind::kWord).size());
  if (!heldout.empty())
    std::fprintf(stderr, "held out %zu pull request events to %s\n", heldout.size(),
                 a.heldout_out.c_str());
  return 0;
}

struct TrainArgs {
  std::string graph;
  std::string out;
  std::vector<std::string> relations;
  std::string ablation;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, CommonConfigs& cc) {
  cc.model.relations = relations_from_flags(a.relations, a.ablation, cc.model.relations);
  const auto [corpus, g] = load_artifact_file(a.graph);
  const TrainResult res = train(g, cc.model, cc.train, progress_logger(a.quiet));
  auto os = open_output(a.out);
  res.params.save(os, g.registry_hash());
  if (!os) throw Error("failed writing model to " + a.out);
  if (!a.quiet) print_train_report(res.report);
  return 0;
}

struct EvalArgs {
  std::string graph;
  std::string model;
  std::string events;
  double eval_fraction = 0.2;
  std::vector<std::size_t> k_list = {1, 3, 5, 7};
  std::vector<std::string> relations;
  std::string ablation;
  bool force = false;
  bool quiet = false;
  OutFmt fmt = OutFmt::kTsv;
};

int cmd_evaluate(const EvalArgs& a, CommonConfigs& cc) {
  const auto k_list = checked_k_list(a.k_list);
  if (!a.graph.empty() || !a.model.empty()) {
    // score an existing model on an explicit held-out event stream
    if (a.graph.empty() || a.model.empty() || a.events.empty())
      throw InvalidConfig("scoring a trained model needs --graph, --model and --events");
    const auto [corpus, g] = load_artifact_file(a.graph);
    std::ifstream is(a.model, std::ios::binary);
    if (!is) throw InvalidConfig("cannot read model file " + a.model);
    const ModelParams params = ModelParams::load(is, g.registry_hash(), a.force);
    const std::vector<EventRecord> heldout = read_events_file(a.events);
    const ModelGraph mg(g, params.cfg.relations);
    const EmbeddingCache cache = embed_all(mg, params);
    EvalSkips skips;
    const auto cases = make_eval_cases(heldout, corpus, mg, params, cache, &skips);
    const MetricTable table = metric_table(cases, k_list);
    if (!a.quiet) print_skips(skips);
    emit_metrics(table, a.fmt, &skips);
    return 0;
  }
  // retrospective pipeline: split, ingest, train, score, all in one run
  if (a.events.empty())
    throw InvalidConfig("pipeline evaluation needs --events");
  PipelineConfig pc;
  pc.ingest = cc.ingest;
  pc.model = cc.model;
  pc.model.relations = relations_from_flags(a.relations, a.ablation, cc.model.relations);
  pc.train = cc.train;
  pc.eval_fraction = a.eval_fraction;
  pc.k_list = k_list;
  pc.seed = cc.train.seed;
  const std::vector<EventRecord> events = read_events_file(a.events);
  const PipelineResult res = run_pipeline(events, pc, progress_logger(a.quiet));
  if (!a.quiet) {
    print_train_report(res.report);
    print_skips(res.skips);
  }
  emit_metrics(res.metrics, a.fmt, &res.skips);
  return 0;
}

struct RecommendArgs {
  std::string graph;
  std::string model;
  std::string pr;
  std::size_t k = 5;
  bool include_author = false;
  bool force = false;
  bool json = false;
};

int cmd_recommend(const RecommendArgs& a) {
  const auto [corpus, g] = load_artifact_file(a.graph);
  std::ifstream ms(a.model, std::ios::binary);
  if (!ms) throw InvalidConfig("cannot read model file " + a.model);
  const ModelParams params = ModelParams::load(ms, g.registry_hash(), a.force);
  std::ifstream ps(a.pr);
  if (!ps) throw InvalidConfig("cannot read pull request file " + a.pr);
  nlohmann::json pj;
  try {
    pj = nlohmann::json::parse(ps);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(a.pr + ": " + e.what());
  }
  const NewPullRequest pr = parse_new_pr_json(pj);
  const ModelGraph mg(g, params.cfg.relations);
  const EmbeddingCache cache = embed_all(mg, params);
  const auto recs =
      recommend_for_pr(pr, corpus, mg, params, cache, a.k, !a.include_author);
  if (a.json) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : recs)
      rows.push_back({{"rank", r.rank}, {"user", r.user}, {"score", r.score}});
    const nlohmann::json out = {{"model_version", model_version_string(g.registry_hash())},
                                {"k", a.k},
                                {"recommendations", rows}};
    std::cout << out.dump(2) << "\n";
  } else {
    for (const auto& r : recs)
      std::printf("%zu\t%s\t%.6f\n", r.rank, r.user.c_str(), r.score);
  }
  return 0;
}

struct ServeArgs {
  std::string graph;
  std::string model;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t default_k = 5;
  bool force = false;
};

int cmd_serve(const ServeArgs& a) {
  const auto [corpus, g] = load_artifact_file(a.graph);
  std::ifstream ms(a.model, std::ios::binary);
  if (!ms) throw InvalidConfig("cannot read model file " + a.model);
  const ModelParams params = ModelParams::load(ms, g.registry_hash(), a.force);
  const ModelGraph mg(g, params.cfg.relations);
  const EmbeddingCache cache = embed_all(mg, params);
  ServeContext ctx;
  ctx.corpus = &corpus;
  ctx.graph = &mg;
  ctx.params = &params;
  ctx.cache = &cache;
  ctx.model_version = model_version_string(g.registry_hash());
  ctx.default_k = a.default_k;
  std::fprintf(stderr, "serving model %s on %s:%d\n", ctx.model_version.c_str(),
               a.host.c_str(), a.port);
  if (!serve(ctx, a.host, a.port))
    throw Error("failed to listen on " + a.host + ":" + std::to_string(a.port));
  return 0;
}

struct SynthArgs {
  SynthConfig cfg;
  std::string out;
  std::string truth_out;
};

int cmd_synth(const SynthArgs& a) {
  const auto [events, truth] = gen_synth(a.cfg);
  auto os = open_output(a.out);
  write_events_jsonl(os, events);
  if (!os) throw Error("failed writing events to " + a.out);
  if (!a.truth_out.empty()) {
    nlohmann::json jt;
    for (const auto& [pr, revs] : truth.reviewers) jt["reviewers"][pr] = revs;
    for (const auto& [u, c] : truth.user_community) jt["user_community"][u] = c;
    for (const auto& [p, c] : truth.pr_community) jt["pr_community"][p] = c;
    auto ts = open_output(a.truth_out);
    ts << jt.dump(2) << "\n";
  }
  std::fprintf(stderr, "wrote %zu events to %s\n", events.size(), a.out.c_str());
  return 0;
}

struct AblateArgs {
  std::string events;
  std::vector<std::string> configs;
  double eval_fraction = 0.2;
  std::vector<std::size_t> k_list = {1, 3, 5, 7};
  bool quiet = false;
  OutFmt fmt = OutFmt::kTsv;
};

int cmd_ablate(const AblateArgs& a, CommonConfigs& cc) {
  std::vector<AblationConfig> configs;
  if (a.configs.empty())
    configs = all_ablation_configs();
  else
    for (const auto& s : a.configs) configs.push_back(parse_ablation_config(s));
  PipelineConfig pc;
  pc.ingest = cc.ingest;
  pc.model = cc.model;
  pc.train = cc.train;
  pc.eval_fraction = a.eval_fraction;
  pc.k_list = checked_k_list(a.k_list);
  pc.seed = cc.train.seed;
  const std::vector<EventRecord> events = read_events_file(a.events);
  const AblationTable table = run_ablation(events, configs, pc, progress_logger(true));
  if (a.fmt == OutFmt::kJson) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
      rows.push_back({{"config", std::string(to_string(row.config))},
                      {"cases", row.metrics.n_cases},
                      {"accuracy", row.metrics.accuracy},
                      {"mrr", row.metrics.reciprocal_rank}});
    }
    std::cout << nlohmann::json{{"k_list", table.k_list}, {"rows", rows}}.dump(2) << "\n";
  } else if (a.fmt == OutFmt::kText) {
    std::cout << table.to_text();
  } else {
    std::cout << table.to_tsv();
  }
  return 0;
}

void add_format_flags(CLI::App* sc, OutFmt& fmt) {
  auto* j = sc->add_flag_callback(
      "--json", [&fmt] { fmt = OutFmt::kJson; }, "emit JSON instead of TSV");
  auto* t = sc->add_flag_callback(
      "--text", [&fmt] { fmt = OutFmt::kText; }, "emit an aligned text table");
  j->excludes(t);
  t->excludes(j);
}

void add_model_flags(CLI::App* sc, ModelConfig& m) {
  sc->add_option("--base-dim", m.base_dim, "input embedding width")->capture_default_str();
  sc->add_option("--hidden-dim", m.hidden_dim, "hidden layer width")->capture_default_str();
  sc->add_option("--out-dim", m.out_dim, "output embedding width")->capture_default_str();
  sc->add_flag("--relu-output,!--no-relu-output", m.relu_output,
               "apply relu to the output layer");
  sc->add_flag("--include-commenters,!--no-include-commenters", m.include_commenters,
               "count comment authors as pull request users");
}

void add_train_flags(CLI::App* sc, TrainConfig& t) {
  sc->add_option("--negative-ratio", t.negative_ratio, "negatives sampled per positive")
      ->capture_default_str();
  sc->add_option("--batch-size", t.batch_size, "triplets per gradient step")
      ->capture_default_str();
  sc->add_option("--learning-rate", t.learning_rate, "optimizer step size")
      ->capture_default_str();
  sc->add_option_function<std::string>(
        "--optimizer",
        [&t](const std::string& o) {
          if (o == "adam")
            t.optimizer = OptimizerKind::kAdam;
          else if (o == "sgd")
            t.optimizer = OptimizerKind::kSgd;
          else
            throw CLI::ValidationError("--optimizer must be 'adam' or 'sgd'");
        },
        "adam or sgd")
      ->default_str("adam");
  sc->add_option("--max-epochs", t.max_epochs, "upper bound on training epochs")
      ->capture_default_str();
  sc->add_option("--patience", t.patience, "epochs without improvement before stopping")
      ->capture_default_str();
  sc->add_option("--min-delta", t.min_delta, "loss improvement that resets patience")
      ->capture_default_str();
  sc->add_option("--heldout-fraction", t.heldout_fraction,
                 "fraction of links withheld for model selection and the final auc")
      ->capture_default_str();
  sc->add_option("--weight-decay", t.weight_decay, "l2 penalty on all parameters")
      ->capture_default_str();
  sc->add_option("--seed", t.seed, "seed for sampling, splits and init")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"code reviewer recommendation over repository event graphs"};
  app.require_subcommand(1);

  try {
    CommonConfigs cc;
    cc.train.seed = env_default_seed();
    const std::string config_path = find_config_arg(argc, argv);
    if (!config_path.empty()) load_config_file(config_path, cc);
    // registered so it shows in help; the value was consumed above
    std::string config_echo;

    BuildArgs bg;
    TrainArgs tr;
    EvalArgs ev;
    RecommendArgs rec;
    ServeArgs sv;
    SynthArgs sy;
    sy.cfg.seed = cc.train.seed;
    AblateArgs ab;

    auto* sc_build = app.add_subcommand(
        "build-graph", "ingest a JSONL event log into a corpus + graph artifact");
    sc_build->add_option("--config", config_echo, "JSON config file");
    sc_build->add_option("--events", bg.events, "input events, one JSON object per line")
        ->required()
        ->check(CLI::ExistingFile);
    sc_build->add_option("--out", bg.out, "artifact file to write")->required();
    sc_build->add_option("--update", bg.update,
                         "extend this existing artifact instead of starting empty")
        ->check(CLI::ExistingFile);
    auto* w_opt = sc_build->add_option("--window", cc.ingest.window,
                                       "co-occurrence window in tokens");
    w_opt->capture_default_str();
    auto* m_opt = sc_build->add_option("--min-token-count", cc.ingest.min_token_count,
                                       "occurrences required to enter the vocabulary");
    m_opt->capture_default_str();
    auto* s_opt = sc_build->add_option("--stopwords", bg.stopwords,
                                       "replace the built-in stopword list with this file");
    s_opt->check(CLI::ExistingFile);
    sc_build->add_option("--heldout-fraction", bg.heldout_fraction,
                         "fraction of pull request events to hold out");
    sc_build->add_option("--heldout-out", bg.heldout_out,
                         "file receiving the held-out pull request events");
    sc_build->add_option("--seed", cc.train.seed, "seed for the held-out split")
        ->capture_default_str();

    auto* sc_train =
        app.add_subcommand("train", "fit link prediction weights on a graph artifact");
    sc_train->add_option("--config", config_echo, "JSON config file");
    sc_train->add_option("--graph", tr.graph, "artifact from build-graph")
        ->required()
        ->check(CLI::ExistingFile);
    sc_train->add_option("--out", tr.out, "model weights file to write")->required();
    sc_train->add_option("--relations", tr.relations,
                         "comma-separated relation subset (default: all)")
        ->delimiter(',');
    sc_train->add_option("--ablation", tr.ablation,
                         "named relation subset: users-only, users+words, users+files, "
                         "users+words+files");
    add_model_flags(sc_train, cc.model);
    add_train_flags(sc_train, cc.train);
    sc_train->add_flag("--quiet", tr.quiet, "suppress progress output");

    auto* sc_eval = app.add_subcommand(
        "evaluate",
        "score a trained model on held-out events, or run the full pipeline");
    sc_eval->add_option("--config", config_echo, "JSON config file");
    sc_eval->add_option("--graph", ev.graph, "artifact (scoring mode)")
        ->check(CLI::ExistingFile);
    sc_eval->add_option("--model", ev.model, "trained weights (scoring mode)")
        ->check(CLI::ExistingFile);
    sc_eval->add_option("--events", ev.events,
                        "held-out events (scoring mode) or the full log (pipeline mode)")
        ->required()
        ->check(CLI::ExistingFile);
    sc_eval->add_option("--eval-fraction", ev.eval_fraction,
                        "pull request fraction held out in pipeline mode")
        ->capture_default_str();
    sc_eval->add_option("--k-list", ev.k_list, "ranking cutoffs")
        ->delimiter(',')
        ->capture_default_str();
    sc_eval->add_option("--relations", ev.relations,
                        "comma-separated relation subset (pipeline mode)")
        ->delimiter(',');
    sc_eval->add_option("--ablation", ev.ablation, "named relation subset (pipeline mode)");
    add_model_flags(sc_eval, cc.model);
    add_train_flags(sc_eval, cc.train);
    sc_eval->add_flag("--force", ev.force, "load weights even if the graph hash differs");
    sc_eval->add_flag("--quiet", ev.quiet, "suppress progress and skip accounting");
    add_format_flags(sc_eval, ev.fmt);

    auto* sc_rec =
        app.add_subcommand("recommend", "rank reviewers for one new pull request");
    sc_rec->add_option("--graph", rec.graph, "artifact from build-graph")
        ->required()
        ->check(CLI::ExistingFile);
    sc_rec->add_option("--model", rec.model, "trained weights")
        ->required()
        ->check(CLI::ExistingFile);
    sc_rec->add_option("--pr", rec.pr, "JSON file describing the new pull request")
        ->required()
        ->check(CLI::ExistingFile);
    sc_rec->add_option("-k,--k", rec.k, "recommendations to return")->capture_default_str();
    sc_rec->add_flag("--include-author", rec.include_author,
                     "let the author appear in the ranking");
    sc_rec->add_flag("--force", rec.force, "load weights even if the graph hash differs");
    sc_rec->add_flag("--json", rec.json, "emit JSON instead of TSV");

    auto* sc_serve = app.add_subcommand("serve", "expose POST /recommend over http");
    sc_serve->add_option("--graph", sv.graph, "artifact from build-graph")
        ->required()
        ->check(CLI::ExistingFile);
    sc_serve->add_option("--model", sv.model, "trained weights")
        ->required()
        ->check(CLI::ExistingFile);
    sc_serve->add_option("--host", sv.host, "bind address")->capture_default_str();
    sc_serve->add_option("--port", sv.port, "bind port")->capture_default_str();
    sc_serve->add_option("--default-k", sv.default_k,
                         "recommendations when the request omits k")
        ->capture_default_str();
    sc_serve->add_flag("--force", sv.force, "load weights even if the graph hash differs");

    auto* sc_synth =
        app.add_subcommand("synth", "generate a planted-community event log");
    sc_synth->add_option("--out", sy.out, "events file to write")->required();
    sc_synth->add_option("--truth-out", sy.truth_out,
                         "also write the planted assignments as JSON");
    sc_synth->add_option("--users", sy.cfg.n_users, "user count")->capture_default_str();
    sc_synth->add_option("--files", sy.cfg.n_files, "file count")->capture_default_str();
    sc_synth->add_option("--words", sy.cfg.n_words, "vocabulary size")
        ->capture_default_str();
    sc_synth->add_option("--prs", sy.cfg.n_prs, "pull request count")
        ->capture_default_str();
    sc_synth->add_option("--communities", sy.cfg.n_communities, "planted community count")
        ->capture_default_str();
    sc_synth->add_option("--affinity", sy.cfg.affinity,
                         "probability a reviewer comes from the pull request's community")
        ->capture_default_str();
    sc_synth->add_option("--author-affinity", sy.cfg.author_affinity,
                         "community alignment of authors")
        ->capture_default_str();
    sc_synth->add_option("--file-affinity", sy.cfg.file_affinity,
                         "community alignment of touched files")
        ->capture_default_str();
    sc_synth->add_option("--word-affinity", sy.cfg.word_affinity,
                         "community alignment of title words")
        ->capture_default_str();
    sc_synth->add_option("--seed", sy.cfg.seed, "generator seed")->capture_default_str();

    auto* sc_ablate = app.add_subcommand(
        "ablate", "retrain per relation subset and tabulate ranking metrics");
    sc_ablate->add_option("--config", config_echo, "JSON config file");
    sc_ablate->add_option("--events", ab.events, "full event log")
        ->required()
        ->check(CLI::ExistingFile);
    sc_ablate->add_option("--configs", ab.configs,
                          "comma-separated subset names (default: all four)")
        ->delimiter(',');
    sc_ablate->add_option("--eval-fraction", ab.eval_fraction,
                          "pull request fraction held out")
        ->capture_default_str();
    sc_ablate->add_option("--k-list", ab.k_list, "ranking cutoffs")
        ->delimiter(',')
        ->capture_default_str();
    add_model_flags(sc_ablate, cc.model);
    add_train_flags(sc_ablate, cc.train);
    add_format_flags(sc_ablate, ab.fmt);

    app.parse(argc, argv);

    if (sc_build->parsed())
      return cmd_build_graph(
          bg, cc, w_opt->count() > 0 || m_opt->count() > 0 || s_opt->count() > 0);
    if (sc_train->parsed()) return cmd_train(tr, cc);
    if (sc_eval->parsed()) return cmd_evaluate(ev, cc);
    if (sc_rec->parsed()) return cmd_recommend(rec);
    if (sc_serve->parsed()) return cmd_serve(sv);
    if (sc_synth->parsed()) return cmd_synth(sy);
    if (sc_ablate->parsed()) return cmd_ablate(ab, cc);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const InvalidConfig& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
