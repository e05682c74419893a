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

#ifndef REVGRAPH_EVAL_HPP_
#define REVGRAPH_EVAL_HPP_

// Retrospective ranking evaluation (top-k accuracy, mean reciprocal rank),
// a relation-subset ablation harness, and a synthetic event generator with
// planted community structure for controlled ground truth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "revgraph/errors.hpp"
#include "revgraph/ingest.hpp"
#include "revgraph/recommend.hpp"
#include "revgraph/rng.hpp"
#include "revgraph/train.hpp"

namespace revgraph {

// One held-out pull request: who actually reviewed it, and the full
// recommendation ranking the model produced for it.
struct EvalCase {
  std::string pr_id;
  std::set<std::string> true_reviewers;  // non-empty
  std::vector<std::string> ranked;       // deduplicated, best first
};

namespace detail {

inline void check_cases(std::span<const EvalCase> cases, std::size_t k) {
  if (k == 0) throw InvalidConfig("k must be >= 1");
  if (cases.empty()) throw EmptyCases("no evaluation cases");
  for (const auto& c : cases) {
    if (c.ranked.empty())
      throw InvalidConfig("evaluation case " + c.pr_id + " has no recommendations");
    if (c.true_reviewers.empty())
      throw InvalidConfig("evaluation case " + c.pr_id + " has no true reviewers");
  }
}

inline std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace detail

// Fraction of cases with at least one true reviewer among the first k.
inline double topk_accuracy(std::span<const EvalCase> cases, std::size_t k) {
  detail::check_cases(cases, k);
  std::size_t hits = 0;
  for (const auto& c : cases) {
    const std::size_t lim = std::min(k, c.ranked.size());
    for (std::size_t i = 0; i < lim; ++i) {
      if (c.true_reviewers.count(c.ranked[i])) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(cases.size());
}

// Mean of 1/rank of the first true reviewer, truncated at k: a case whose
// first hit falls beyond rank k contributes zero, so the metric grows with k.
inline double mrr(std::span<const EvalCase> cases, std::size_t k) {
  detail::check_cases(cases, k);
  double sum = 0.0;
  for (const auto& c : cases) {
    const std::size_t lim = std::min(k, c.ranked.size());
    for (std::size_t i = 0; i < lim; ++i) {
      if (c.true_reviewers.count(c.ranked[i])) {
        sum += 1.0 / static_cast<double>(i + 1);
        break;
      }
    }
  }
  return sum / static_cast<double>(cases.size());
}

// Expected top-k accuracy of a uniformly random ranking, one reachable true
// reviewer per case: k out of |candidates| slots hit.
inline double random_topk_baseline(std::span<const EvalCase> cases, std::size_t k) {
  detail::check_cases(cases, k);
  double sum = 0.0;
  for (const auto& c : cases)
    sum += std::min(1.0, static_cast<double>(k) / static_cast<double>(c.ranked.size()));
  return sum / static_cast<double>(cases.size());
}

// Monte Carlo version of the same quantity, for cross-checking the formula.
inline double simulated_topk_baseline(std::span<const EvalCase> cases, std::size_t k,
                                      std::size_t trials, std::uint64_t seed) {
  detail::check_cases(cases, k);
  if (trials == 0) throw InvalidConfig("trials must be >= 1");
  Rng rng(derive_seed(seed, "baseline"));
  double total = 0.0;
  for (const auto& c : cases) {
    std::vector<char> is_true(c.ranked.size());
    for (std::size_t i = 0; i < c.ranked.size(); ++i)
      is_true[i] = c.true_reviewers.count(c.ranked[i]) ? 1 : 0;
    std::vector<std::size_t> perm(c.ranked.size());
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      rng_shuffle(perm, rng);
      const std::size_t lim = std::min(k, perm.size());
      for (std::size_t i = 0; i < lim; ++i) {
        if (is_true[perm[i]]) {
          ++hits;
          break;
        }
      }
    }
    total += static_cast<double>(hits) / static_cast<double>(trials);
  }
  return total / static_cast<double>(cases.size());
}

// Accuracy, reciprocal rank and the random baseline at each requested k.
struct MetricTable {
  std::vector<std::size_t> k_list;
  std::vector<double> accuracy;
  std::vector<double> reciprocal_rank;
  std::vector<double> baseline;
  std::size_t n_cases = 0;

  std::string to_tsv() const {
    std::string out = "k\taccuracy\tmrr\tbaseline\n";
    for (std::size_t i = 0; i < k_list.size(); ++i) {
      out += std::to_string(k_list[i]);
      out += '\t';
      out += detail::fmt6(accuracy[i]);
      out += '\t';
      out += detail::fmt6(reciprocal_rank[i]);
      out += '\t';
      out += detail::fmt6(baseline[i]);
      out += '\n';
    }
    return out;
  }

  std::string to_text() const {
    char buf[128];
    std::snprintf(buf, sizeof buf, "cases: %zu\n%4s  %8s  %8s  %8s\n", n_cases, "k",
                  "accuracy", "mrr", "baseline");
    std::string out = buf;
    for (std::size_t i = 0; i < k_list.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%4zu  %8.4f  %8.4f  %8.4f\n", k_list[i],
                    accuracy[i], reciprocal_rank[i], baseline[i]);
      out += buf;
    }
    return out;
  }
};

inline MetricTable metric_table(std::span<const EvalCase> cases,
                                std::span<const std::size_t> k_list) {
  if (k_list.empty()) throw InvalidConfig("k_list must not be empty");
  MetricTable t;
  t.k_list.assign(k_list.begin(), k_list.end());
  t.n_cases = cases.size();
  for (std::size_t k : k_list) {
    t.accuracy.push_back(topk_accuracy(cases, k));
    t.reciprocal_rank.push_back(mrr(cases, k));
    t.baseline.push_back(random_topk_baseline(cases, k));
  }
  return t;
}

// ---- held-out pull request evaluation ---------------------------------------

// Why a case was dropped instead of scored.
struct EvalSkips {
  std::size_t no_truth = 0;       // the event listed no reviewers at all
  std::size_t truth_absent = 0;   // none of its reviewers exist in the graph
  std::size_t cold_start = 0;     // nothing about the pr resolved to a node
  std::size_t no_candidates = 0;  // nobody left to recommend
  std::size_t kept = 0;
};

// Ranks every known user for each held-out pull request event and pairs the
// ranking with the reviewers that were actually invited.
inline std::vector<EvalCase> make_eval_cases(std::span<const EventRecord> heldout,
                                             const Corpus& corpus, const ModelGraph& mg,
                                             const ModelParams& params,
                                             const EmbeddingCache& cache,
                                             EvalSkips* skips = nullptr) {
  EvalSkips local;
  EvalSkips& s = skips ? *skips : local;
  const Graph& g = mg.graph();
  const std::size_t n_users = g.nodes_of_kind(NodeKind::kUser).size();
  std::vector<EvalCase> cases;
  for (const auto& ev : heldout) {
    const auto* pre = std::get_if<PullRequestEvent>(&ev);
    if (!pre) continue;
    if (pre->reviewer_ids.empty()) {
      ++s.no_truth;
      continue;
    }
    std::set<std::string> truth;
    for (const auto& r : pre->reviewer_ids)
      if (r != pre->author_id && g.find_node(NodeKind::kUser, r) != kNoNode)
        truth.insert(r);
    if (truth.empty()) {
      ++s.truth_absent;
      continue;
    }
    Vec z;
    try {
      z = embed_new_pr(new_pr_from_event(*pre), corpus, mg, params, cache);
    } catch (const ColdStart&) {
      ++s.cold_start;
      continue;
    }
    std::vector<Recommendation> recs;
    try {
      recs = top_k(z, g, cache, n_users, {pre->author_id});
    } catch (const NoCandidates&) {
      ++s.no_candidates;
      continue;
    }
    EvalCase ec;
    ec.pr_id = pre->id;
    ec.true_reviewers = std::move(truth);
    ec.ranked.reserve(recs.size());
    for (auto& r : recs) ec.ranked.push_back(std::move(r.user));
    cases.push_back(std::move(ec));
    ++s.kept;
  }
  return cases;
}

// Splits the pull request events into a training stream and an evaluation
// stream; work item events always stay on the training side so held-out pull
// requests can still resolve their linked text. Relative order is preserved.
inline std::pair<std::vector<EventRecord>, std::vector<EventRecord>> split_pr_events(
    std::span<const EventRecord> events, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0)
    throw InvalidConfig("eval fraction must be in [0, 1)");
  std::vector<std::size_t> pr_idx;
  for (std::size_t i = 0; i < events.size(); ++i)
    if (std::holds_alternative<PullRequestEvent>(events[i])) pr_idx.push_back(i);
  Rng rng(derive_seed(seed, "prsplit"));
  rng_shuffle(pr_idx, rng);
  const auto n_eval = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(pr_idx.size())));
  const std::set<std::size_t> eval_set(pr_idx.begin(), pr_idx.begin() + n_eval);
  std::pair<std::vector<EventRecord>, std::vector<EventRecord>> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (eval_set.count(i))
      out.second.push_back(events[i]);
    else
      out.first.push_back(events[i]);
  }
  return out;
}

// ---- synthetic event generator -----------------------------------------------

// Planted-community corpus: users, files and vocabulary are partitioned into
// communities round-robin; each pull request belongs to a community and draws
// its author, files, title words and reviewers from that community's pools
// with the configured probabilities (else uniformly from everyone).
struct SynthConfig {
  std::size_t n_users = 50;
  std::size_t n_files = 120;
  std::size_t n_words = 300;
  std::size_t n_prs = 400;
  std::size_t n_communities = 5;
  double affinity = 0.9;  // probability a reviewer comes from the pr's community
  std::uint64_t seed = 7;
  // side-channel strengths; authorship is deliberately the weakest signal
  double author_affinity = 0.6;
  double file_affinity = 0.95;
  double word_affinity = 0.85;

  void validate() const {
    if (n_communities == 0) throw InvalidConfig("need at least one community");
    if (n_users < 3 * n_communities)
      throw InvalidConfig("need at least 3 users per community");
    if (n_files < n_communities || n_words < n_communities)
      throw InvalidConfig("every community needs files and words");
    if (n_prs == 0) throw InvalidConfig("need at least one pull request");
    if (affinity <= 0.0 || affinity > 1.0)
      throw InvalidConfig("affinity must be in (0, 1]");
    for (double a : {author_affinity, file_affinity, word_affinity})
      if (a < 0.0 || a > 1.0) throw InvalidConfig("affinities must be in [0, 1]");
  }
};

struct SynthGroundTruth {
  std::map<std::string, std::size_t> user_community;
  std::map<std::string, std::size_t> pr_community;
  std::map<std::string, std::set<std::string>> reviewers;  // pr id -> invited set
};

inline std::pair<std::vector<EventRecord>, SynthGroundTruth> gen_synth(
    const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "synth"));
  const std::size_t nc = cfg.n_communities;

  const auto user_id = [](std::size_t i) { return "u" + std::to_string(i); };
  const auto file_path = [nc](std::size_t i) {
    return "srv" + std::to_string(i % nc) + "/file" + std::to_string(i) + ".cs";
  };
  const auto word = [](std::size_t i) { return "kw" + std::to_string(i); };

  std::vector<std::vector<std::size_t>> users(nc), files(nc), words(nc);
  for (std::size_t i = 0; i < cfg.n_users; ++i) users[i % nc].push_back(i);
  for (std::size_t i = 0; i < cfg.n_files; ++i) files[i % nc].push_back(i);
  for (std::size_t i = 0; i < cfg.n_words; ++i) words[i % nc].push_back(i);

  SynthGroundTruth truth;
  for (std::size_t i = 0; i < cfg.n_users; ++i) truth.user_community[user_id(i)] = i % nc;

  // one draw from the community pool with the given probability, else global
  const auto pick = [&](const std::vector<std::size_t>& pool, std::size_t n_total,
                        double affinity) {
    if (rng_unit(rng) < affinity) return pool[rng_index(rng, pool.size())];
    return rng_index(rng, n_total);
  };

  std::vector<EventRecord> events;
  for (std::size_t i = 0; i < cfg.n_prs; ++i) {
    const std::size_t c = i % nc;
    PullRequestEvent pr;
    pr.id = "p" + std::to_string(i);
    pr.repo_id = "repo" + std::to_string(c);
    pr.author_id = user_id(pick(users[c], cfg.n_users, cfg.author_affinity));

    const std::size_t nf = 2 + rng_index(rng, 3);
    std::set<std::string> seen_files;
    for (std::size_t f = 0; f < nf; ++f) {
      std::string p = file_path(pick(files[c], cfg.n_files, cfg.file_affinity));
      if (seen_files.insert(p).second) pr.file_paths.push_back(std::move(p));
    }

    const std::size_t nw = 4 + rng_index(rng, 4);
    std::vector<std::string> toks;
    for (std::size_t t = 0; t < nw; ++t)
      toks.push_back(word(pick(words[c], cfg.n_words, cfg.word_affinity)));
    for (std::size_t t = 0; t < toks.size(); ++t) {
      std::string& dst = t < 3 ? pr.title : pr.description;
      if (!dst.empty()) dst += ' ';
      dst += toks[t];
    }

    // two distinct invited reviewers, neither of them the author
    std::set<std::string> invited;
    for (std::size_t tries = 0; invited.size() < 2 && tries < 100; ++tries) {
      const std::string r = user_id(pick(users[c], cfg.n_users, cfg.affinity));
      if (r != pr.author_id) invited.insert(r);
    }
    for (std::size_t j = 0; invited.size() < 2 && j < users[c].size(); ++j) {
      const std::string r = user_id(users[c][j]);
      if (r != pr.author_id) invited.insert(r);
    }
    pr.reviewer_ids.assign(invited.begin(), invited.end());

    // every fourth pull request links a fresh work item carrying extra text
    if (i % 4 == 0) {
      WorkItemEvent wi;
      wi.id = "t" + std::to_string(i);
      for (std::size_t t = 0; t < 3; ++t) {
        if (!wi.title.empty()) wi.title += ' ';
        wi.title += word(pick(words[c], cfg.n_words, cfg.word_affinity));
      }
      pr.linked_work_item_ids.push_back(wi.id);
      events.emplace_back(std::move(wi));
    }

    truth.pr_community[pr.id] = c;
    truth.reviewers[pr.id] = std::move(invited);
    events.emplace_back(std::move(pr));
  }
  return {std::move(events), std::move(truth)};
}

// ---- pipeline ----------------------------------------------------------------

struct PipelineConfig {
  IngestConfig ingest;
  ModelConfig model;
  TrainConfig train;
  double eval_fraction = 0.2;
  std::vector<std::size_t> k_list = {1, 3, 5, 7};
  std::uint64_t seed = 1;  // drives the pull request split

  void validate() const {
    ingest.validate();
    model.validate();
    train.validate();
    if (eval_fraction <= 0.0 || eval_fraction >= 1.0)
      throw InvalidConfig("eval_fraction must be in (0, 1)");
    if (k_list.empty()) throw InvalidConfig("k_list must not be empty");
    for (std::size_t k : k_list)
      if (k == 0) throw InvalidConfig("k values must be >= 1");
  }
};

struct PipelineResult {
  MetricTable metrics;
  TrainReport report;
  EvalSkips skips;
  std::size_t n_train_events = 0;
  std::size_t n_eval_events = 0;
};

// Full retrospective experiment: hold out pull requests, ingest the rest,
// train, then rank reviewers for each held-out pull request.
inline PipelineResult run_pipeline(std::span<const EventRecord> events,
                                   const PipelineConfig& cfg,
                                   const ProgressFn& progress = {}) {
  cfg.validate();
  auto [train_ev, eval_ev] = split_pr_events(events, cfg.eval_fraction, cfg.seed);
  Corpus corpus(cfg.ingest);
  corpus.apply(train_ev);
  const Graph g = corpus.build_graph();
  TrainResult tr = train(g, cfg.model, cfg.train, progress);
  const ModelGraph mg(g, tr.params.cfg.relations);
  const EmbeddingCache cache = embed_all(mg, tr.params);
  PipelineResult out;
  out.report = tr.report;
  const auto cases = make_eval_cases(eval_ev, corpus, mg, tr.params, cache, &out.skips);
  out.metrics = metric_table(cases, cfg.k_list);
  out.n_train_events = train_ev.size();
  out.n_eval_events = eval_ev.size();
  return out;
}

// ---- ablation ----------------------------------------------------------------

// Which relation families stay in the graph. Pull request / user edges are
// always present; the variants toggle the text and file channels.
enum class AblationConfig : std::uint8_t {
  kUsersOnly = 0,
  kUsersWords,
  kUsersFiles,
  kUsersWordsFiles,
};

inline RelationSet ablation_relations(AblationConfig c) {
  switch (c) {
    case AblationConfig::kUsersOnly:
      return {ModelRelation::kPrUser};
    case AblationConfig::kUsersWords:
      return {ModelRelation::kPrUser, ModelRelation::kPrWord, ModelRelation::kWordWord};
    case AblationConfig::kUsersFiles:
      return {ModelRelation::kPrUser, ModelRelation::kPrFile};
    case AblationConfig::kUsersWordsFiles:
      return all_relations();
  }
  throw InvalidConfig("unknown ablation config");
}

inline std::string_view to_string(AblationConfig c) {
  switch (c) {
    case AblationConfig::kUsersOnly: return "users-only";
    case AblationConfig::kUsersWords: return "users+words";
    case AblationConfig::kUsersFiles: return "users+files";
    case AblationConfig::kUsersWordsFiles: return "users+words+files";
  }
  throw InvalidConfig("unknown ablation config");
}

inline AblationConfig parse_ablation_config(std::string_view s) {
  if (s == "users-only") return AblationConfig::kUsersOnly;
  if (s == "users+words") return AblationConfig::kUsersWords;
  if (s == "users+files") return AblationConfig::kUsersFiles;
  if (s == "users+words+files") return AblationConfig::kUsersWordsFiles;
  throw InvalidConfig("unknown ablation config '" + std::string(s) + "'");
}

inline std::vector<AblationConfig> all_ablation_configs() {
  return {AblationConfig::kUsersOnly, AblationConfig::kUsersWords,
          AblationConfig::kUsersFiles, AblationConfig::kUsersWordsFiles};
}

struct AblationRow {
  AblationConfig config;
  MetricTable metrics;
};

struct AblationTable {
  std::vector<std::size_t> k_list;
  std::vector<AblationRow> rows;

  std::string to_tsv() const {
    std::string out = "config";
    for (std::size_t k : k_list) out += "\tacc@" + std::to_string(k);
    for (std::size_t k : k_list) out += "\tmrr@" + std::to_string(k);
    out += '\n';
    for (const auto& row : rows) {
      out += to_string(row.config);
      for (double a : row.metrics.accuracy) out += '\t' + detail::fmt6(a);
      for (double m : row.metrics.reciprocal_rank) out += '\t' + detail::fmt6(m);
      out += '\n';
    }
    return out;
  }

  std::string to_text() const {
    char buf[64];
    std::string out = "config             ";
    for (std::size_t k : k_list) {
      std::snprintf(buf, sizeof buf, "  acc@%-2zu", k);
      out += buf;
    }
    for (std::size_t k : k_list) {
      std::snprintf(buf, sizeof buf, "  mrr@%-2zu", k);
      out += buf;
    }
    out += '\n';
    for (const auto& row : rows) {
      std::snprintf(buf, sizeof buf, "%-19s", std::string(to_string(row.config)).c_str());
      out += buf;
      for (double a : row.metrics.accuracy) {
        std::snprintf(buf, sizeof buf, "  %6.4f", a);
        out += buf;
      }
      for (double m : row.metrics.reciprocal_rank) {
        std::snprintf(buf, sizeof buf, "  %6.4f", m);
        out += buf;
      }
      out += '\n';
    }
    return out;
  }
};

// Retrains from scratch per relation subset on one shared pull request split
// and scores each model on the same held-out pull requests.
inline AblationTable run_ablation(std::span<const EventRecord> events,
                                  std::span<const AblationConfig> configs,
                                  const PipelineConfig& base,
                                  const ProgressFn& progress = {}) {
  base.validate();
  if (configs.empty()) throw InvalidConfig("no ablation configs given");
  auto [train_ev, eval_ev] = split_pr_events(events, base.eval_fraction, base.seed);
  Corpus corpus(base.ingest);
  corpus.apply(train_ev);
  const Graph g = corpus.build_graph();
  AblationTable table;
  table.k_list = base.k_list;
  for (AblationConfig c : configs) {
    ModelConfig mc = base.model;
    mc.relations = ablation_relations(c);
    TrainResult tr = train(g, mc, base.train, progress);
    const ModelGraph mg(g, tr.params.cfg.relations);
    const EmbeddingCache cache = embed_all(mg, tr.params);
    EvalSkips skips;
    const auto cases = make_eval_cases(eval_ev, corpus, mg, tr.params, cache, &skips);
    table.rows.push_back({c, metric_table(cases, base.k_list)});
  }
  return table;
}

}  // namespace revgraph

#endif  // REVGRAPH_EVAL_HPP_
