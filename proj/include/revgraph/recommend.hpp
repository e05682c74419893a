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

#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "revgraph/errors.hpp"
#include "revgraph/graph.hpp"
#include "revgraph/ingest.hpp"
#include "revgraph/numerics.hpp"
#include "revgraph/rgcn.hpp"
#include "revgraph/text.hpp"

namespace revgraph {

// Inductive inference: a pull request that was never part of training is
// embedded from its resolvable neighbors alone,
//   z = act( sum_{r in R'} W_r^(1) sum_{v} h1_v / sqrt(|N_r(new)| |N_r(v)|) )
// with no self term (the new node has no base embedding) and R' the
// pull-request-incident relations. Reviewers are then the top-k users by
// dot product in the output space.

struct NewPullRequest {
  std::string author_id;
  std::vector<std::string> file_paths;
  std::string title;
  std::string description;
  std::vector<std::string> linked_work_item_ids;
};

inline NewPullRequest parse_new_pr_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("pull request payload is not a JSON object");
  NewPullRequest pr;
  pr.author_id = detail::json_str(j, "author_id", 0);
  pr.file_paths = detail::json_str_list(j, "file_paths", 0);
  pr.title = detail::json_str(j, "title", 0);
  pr.description = detail::json_str(j, "description", 0);
  pr.linked_work_item_ids = detail::json_str_list(j, "linked_work_item_ids", 0);
  if (pr.author_id.empty()) throw ParseError("author_id must be a non-empty string");
  return pr;
}

inline NewPullRequest new_pr_from_event(const PullRequestEvent& e) {
  return {e.author_id, e.file_paths, e.title, e.description, e.linked_work_item_ids};
}

// resolved neighbor sets of a prospective pull-request node
struct NewPrNeighbors {
  std::vector<NodeId> users;  // the author only; reviewers are unknown here
  std::vector<NodeId> files;
  std::vector<NodeId> words;
};

// Match a new pull request against the trained graph: files by path, words by
// running title/description (and linked work item text) through the same
// tokenize/stopword/vocabulary pipeline that built the graph. Anything that
// does not resolve to an existing node is dropped.
inline NewPrNeighbors resolve_new_pr(const NewPullRequest& pr, const Corpus& corpus,
                                     const Graph& g) {
  if (pr.author_id.empty()) throw InvalidConfig("new pull request needs an author_id");
  NewPrNeighbors out;
  const NodeId author = g.find_node(NodeKind::kUser, pr.author_id);
  if (author != kNoNode) out.users.push_back(author);

  std::unordered_set<NodeId> seen;
  for (const std::string& path : pr.file_paths) {
    const NodeId f = g.find_node(NodeKind::kFile, path);
    if (f != kNoNode && seen.insert(f).second) out.files.push_back(f);
  }

  seen.clear();
  auto add_tokens = [&](const std::vector<std::string>& toks) {
    for (const std::string& t : toks) {
      const NodeId w = g.find_node(NodeKind::kWord, t);
      if (w != kNoNode && seen.insert(w).second) out.words.push_back(w);
    }
  };
  const StopwordList& stop = corpus.config().stopwords;
  add_tokens(filter_stopwords(tokenize(pr.title), stop));
  add_tokens(filter_stopwords(tokenize(pr.description), stop));
  for (const std::string& wid : pr.linked_work_item_ids) {
    const auto* docs = corpus.work_item_docs(wid);
    if (!docs) continue;  // unknown work item: nothing to resolve
    for (const auto& doc : *docs) add_tokens(doc);
  }
  return out;
}

// Single-layer propagation from stored layer-1 embeddings; degrees come from
// the training graph. Neighbors that never appeared in a relation during
// training carry no degree and are skipped.
inline Vec embed_from_neighbors(const NewPrNeighbors& nb, const ModelGraph& mg,
                                const ModelParams& params, const EmbeddingCache& cache) {
  if (cache.h1.rows != mg.node_count() || cache.h1.cols != params.cfg.hidden_dim)
    throw MissingCache("embed_from_neighbors: layer-1 cache does not match the graph");
  if (mg.relations() != params.cfg.relations)
    throw InvalidConfig("embed_from_neighbors: params built for a different relation set");

  const std::size_t d1 = params.cfg.hidden_dim;
  const std::size_t d2 = params.cfg.out_dim;
  Vec acc(d2, 0.0);
  bool any = false;
  Vec msg(d1);
  for (std::size_t m = 0; m < params.n_relations(); ++m) {
    const ModelRelation r = params.cfg.relations[m];
    const std::vector<NodeId>* src = nullptr;
    switch (r) {
      case ModelRelation::kPrUser: src = &nb.users; break;
      case ModelRelation::kPrFile: src = &nb.files; break;
      case ModelRelation::kPrWord: src = &nb.words; break;
      default: continue;  // not pull-request incident
    }
    std::vector<NodeId> list;
    for (NodeId v : *src)
      if (v != kNoNode && mg.degree(v, r) > 0) list.push_back(v);
    std::sort(list.begin(), list.end(),
              [&mg](NodeId a, NodeId b) { return mg.rank(a) < mg.rank(b); });
    list.erase(std::unique(list.begin(), list.end()), list.end());
    if (list.empty()) continue;
    any = true;
    const double du = static_cast<double>(list.size());
    std::fill(msg.begin(), msg.end(), 0.0);
    for (NodeId v : list) {
      const double c = 1.0 / std::sqrt(du * static_cast<double>(mg.degree(v, r)));
      auto hv = cache.h1.row(v);
      for (std::size_t j = 0; j < d1; ++j) msg[j] += c * hv[j];
    }
    const Vec y = matvec(params.w(1, m), msg);
    for (std::size_t j = 0; j < d2; ++j) acc[j] += y[j];
  }
  if (!any)
    throw ColdStart(
        "new pull request resolves to no trained neighbors (unknown author, files and words)");
  if (params.cfg.relu_output)
    for (double& x : acc)
      if (x < 0.0) x = 0.0;
  return acc;
}

inline Vec embed_new_pr(const NewPullRequest& pr, const Corpus& corpus, const ModelGraph& mg,
                        const ModelParams& params, const EmbeddingCache& cache) {
  return embed_from_neighbors(resolve_new_pr(pr, corpus, mg.graph()), mg, params, cache);
}

// ---- ranking -------------------------------------------------------------------

struct Recommendation {
  std::string user;
  double score;       // dot(z_new, z_user)
  std::size_t rank;   // 1-based, contiguous
};

// top k users by dot product against the query embedding; ties broken by
// ascending external id, excluded ids (typically the author) never appear
inline std::vector<Recommendation> top_k(std::span<const double> z_new, const Graph& g,
                                         const EmbeddingCache& cache, std::size_t k,
                                         const std::set<std::string>& exclude = {}) {
  if (k == 0) throw InvalidConfig("k must be >= 1");
  if (cache.z.rows != g.node_count())
    throw MissingCache("top_k: output embeddings do not match the graph");
  std::vector<Recommendation> scored;
  for (NodeId u : g.nodes_of_kind(NodeKind::kUser)) {
    const std::string& id = g.external_id(u);
    if (exclude.count(id)) continue;
    scored.push_back({id, dot(z_new, cache.z.row(u)), 0});
  }
  if (scored.empty()) throw NoCandidates("no candidate users to rank");
  std::sort(scored.begin(), scored.end(), [](const Recommendation& a, const Recommendation& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.user < b.user;
  });
  if (scored.size() > k) scored.resize(k);
  for (std::size_t i = 0; i < scored.size(); ++i) scored[i].rank = i + 1;
  return scored;
}

inline std::vector<Recommendation> recommend_for_pr(const NewPullRequest& pr,
                                                    const Corpus& corpus, const ModelGraph& mg,
                                                    const ModelParams& params,
                                                    const EmbeddingCache& cache, std::size_t k,
                                                    bool exclude_author = true) {
  const Vec z = embed_new_pr(pr, corpus, mg, params, cache);
  std::set<std::string> excl;
  if (exclude_author) excl.insert(pr.author_id);
  return top_k(z, mg.graph(), cache, k, excl);
}

// ---- request handling (transport-independent) -----------------------------------

struct ServeContext {
  const Corpus* corpus = nullptr;
  const ModelGraph* graph = nullptr;
  const ModelParams* params = nullptr;
  const EmbeddingCache* cache = nullptr;
  std::string model_version;
  std::size_t default_k = 5;
};

inline std::string model_version_string(std::uint64_t registry_hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(registry_hash));
  return buf;
}

namespace detail {

inline std::string error_body(const char* code, const std::string& message) {
  nlohmann::json j;
  j["error"]["code"] = code;
  j["error"]["message"] = message;
  return j.dump();
}

}  // namespace detail

// One request, one response: body carries the pull request and an optional k.
// Returns (http status, response body). Never throws on bad input; every
// failure maps to a machine-readable error code.
inline std::pair<int, std::string> handle_recommend(const ServeContext& ctx,
                                                    const std::string& body) {
  nlohmann::json req = nlohmann::json::parse(body, nullptr, false);
  if (req.is_discarded())
    return {400, detail::error_body("bad_request", "request body is not valid JSON")};
  try {
    if (!req.is_object())
      throw ParseError("request must be a JSON object");
    auto it = req.find("pull_request");
    if (it == req.end())
      throw ParseError("request is missing the 'pull_request' field");
    std::size_t k = ctx.default_k;
    if (auto kit = req.find("k"); kit != req.end()) {
      if (!kit->is_number_integer() || kit->get<std::int64_t>() < 1)
        throw ParseError("'k' must be a positive integer");
      k = kit->get<std::size_t>();
    }
    const NewPullRequest pr = parse_new_pr_json(*it);
    const auto recs =
        recommend_for_pr(pr, *ctx.corpus, *ctx.graph, *ctx.params, *ctx.cache, k);
    nlohmann::json out;
    out["model_version"] = ctx.model_version;
    out["k"] = k;
    out["recommendations"] = nlohmann::json::array();
    for (const Recommendation& r : recs) {
      nlohmann::json e;
      e["rank"] = r.rank;
      e["user"] = r.user;
      e["score"] = r.score;
      out["recommendations"].push_back(e);
    }
    return {200, out.dump()};
  } catch (const ParseError& e) {
    return {400, detail::error_body("bad_request", e.what())};
  } catch (const InvalidConfig& e) {
    return {400, detail::error_body("bad_request", e.what())};
  } catch (const ColdStart& e) {
    return {422, detail::error_body("cold_start", e.what())};
  } catch (const NoCandidates& e) {
    return {422, detail::error_body("no_candidates", e.what())};
  } catch (const Error& e) {
    return {500, detail::error_body("internal", e.what())};
  }
}

}  // namespace revgraph
