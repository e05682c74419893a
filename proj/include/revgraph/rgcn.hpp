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
#include <array>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "revgraph/errors.hpp"
#include "revgraph/graph.hpp"
#include "revgraph/io_util.hpp"
#include "revgraph/numerics.hpp"
#include "revgraph/rng.hpp"

namespace revgraph {

// Two-layer relational graph convolution. Layer k computes, for each node u,
//   h_u = act( sum_r W_r * sum_{v in N_r(u)} h_v / sqrt(|N_r(u)| |N_r(v)|)
//              + W_0 * h_u )
// with per-relation weights, ReLU after layer 1 and (by default) identity
// after layer 2. Neighbor aggregation runs in a canonical order derived from
// node identities, so embeddings are exactly invariant to insertion order.

enum class ModelRelation : std::uint8_t {
  kPrUser = 0,   // Creates + Reviews (optionally CommentsOn)
  kPrFile,       // Changes
  kPrWord,
  kFileWord,
  kWordWord
};
inline constexpr std::size_t kNumModelRelations = 5;

inline constexpr std::array<ModelRelation, 5> kAllModelRelations = {
    ModelRelation::kPrUser, ModelRelation::kPrFile, ModelRelation::kPrWord,
    ModelRelation::kFileWord, ModelRelation::kWordWord};

using RelationSet = std::vector<ModelRelation>;

inline const char* to_string(ModelRelation r) {
  switch (r) {
    case ModelRelation::kPrUser: return "pr-user";
    case ModelRelation::kPrFile: return "pr-file";
    case ModelRelation::kPrWord: return "pr-word";
    case ModelRelation::kFileWord: return "file-word";
    case ModelRelation::kWordWord: return "word-word";
  }
  return "?";
}

inline ModelRelation parse_model_relation(std::string_view s) {
  for (ModelRelation r : kAllModelRelations)
    if (s == to_string(r)) return r;
  throw InvalidConfig("unknown relation name: " + std::string(s));
}

inline RelationSet all_relations() {
  return {kAllModelRelations.begin(), kAllModelRelations.end()};
}

// sorted, deduplicated, non-empty
inline RelationSet normalize_relations(RelationSet r) {
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  if (r.empty()) throw InvalidConfig("relation set must not be empty");
  return r;
}

// the subset incident to pull requests, used by inductive inference
inline RelationSet pr_incident(const RelationSet& r) {
  RelationSet out;
  for (ModelRelation m : r)
    if (m == ModelRelation::kPrUser || m == ModelRelation::kPrFile ||
        m == ModelRelation::kPrWord)
      out.push_back(m);
  return out;
}

// endpoint kinds in canonical orientation (first, second)
inline std::pair<NodeKind, NodeKind> model_relation_kinds(ModelRelation r) {
  switch (r) {
    case ModelRelation::kPrUser: return {NodeKind::kPullRequest, NodeKind::kUser};
    case ModelRelation::kPrFile: return {NodeKind::kPullRequest, NodeKind::kFile};
    case ModelRelation::kPrWord: return {NodeKind::kPullRequest, NodeKind::kWord};
    case ModelRelation::kFileWord: return {NodeKind::kFile, NodeKind::kWord};
    case ModelRelation::kWordWord: return {NodeKind::kWord, NodeKind::kWord};
  }
  return {NodeKind::kWord, NodeKind::kWord};
}

struct ModelConfig {
  std::size_t base_dim = 64;    // d0
  std::size_t hidden_dim = 64;  // d1
  std::size_t out_dim = 64;     // d2
  bool relu_output = false;     // activation after layer 2 (identity keeps z signs free)
  bool include_commenters = false;
  RelationSet relations = all_relations();

  void validate() const {
    if (base_dim == 0 || hidden_dim == 0 || out_dim == 0)
      throw InvalidConfig("embedding dimensions must be positive");
    if (relations.empty()) throw InvalidConfig("relation set must not be empty");
  }
};

// Per-relation adjacency over a Graph with neighbor lists in canonical
// (kind, external id) order. Immutable after construction; without_edges
// derives a copy for held-out splits.
class ModelGraph {
 public:
  ModelGraph(const Graph& g, RelationSet relations, bool include_commenters = false)
      : graph_(&g), relations_(normalize_relations(std::move(relations))) {
    const std::size_t n = g.node_count();
    // identity rank: permutation-invariant ordering key
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&g](NodeId a, NodeId b) {
      if (g.kind(a) != g.kind(b)) return g.kind(a) < g.kind(b);
      return g.external_id(a) < g.external_id(b);
    });
    rank_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) rank_[order[i]] = static_cast<std::uint32_t>(i);

    for (ModelRelation r : relations_) {
      auto& adj = adj_[rel_pos(r)];
      auto& keys = keys_[rel_pos(r)];
      adj.assign(n, {});
      switch (r) {
        case ModelRelation::kPrUser:
          merge_relation(g, Relation::kCreates, adj, keys);
          merge_relation(g, Relation::kReviews, adj, keys);
          if (include_commenters) merge_relation(g, Relation::kCommentsOn, adj, keys);
          break;
        case ModelRelation::kPrFile:
          merge_relation(g, Relation::kChanges, adj, keys);
          break;
        case ModelRelation::kPrWord:
          merge_relation(g, Relation::kPrWord, adj, keys);
          break;
        case ModelRelation::kFileWord:
          merge_relation(g, Relation::kFileWord, adj, keys);
          break;
        case ModelRelation::kWordWord:
          merge_relation(g, Relation::kWordWord, adj, keys);
          break;
      }
      for (auto& list : adj)
        std::sort(list.begin(), list.end(),
                  [this](NodeId a, NodeId b) { return rank_[a] < rank_[b]; });
    }
  }

  const Graph& graph() const { return *graph_; }
  const RelationSet& relations() const { return relations_; }
  std::size_t node_count() const { return rank_.size(); }
  std::uint32_t rank(NodeId u) const { return rank_[u]; }

  std::span<const NodeId> neighbors(NodeId u, ModelRelation r) const {
    const auto& adj = adj_[rel_pos(r)];
    if (adj.empty()) return {};
    return adj[u];
  }

  std::size_t degree(NodeId u, ModelRelation r) const { return neighbors(u, r).size(); }

  bool has_edge(ModelRelation r, NodeId u, NodeId v) const {
    return keys_[rel_pos(r)].count(pack(u, v)) != 0;
  }

  std::size_t edge_count(ModelRelation r) const { return keys_[rel_pos(r)].size(); }

  // every undirected edge once, canonically oriented: first endpoint of the
  // relation's first kind (lower rank for word-word), enumerated in id order
  std::vector<std::pair<NodeId, NodeId>> edges(ModelRelation r) const {
    std::vector<std::pair<NodeId, NodeId>> out;
    const auto& adj = adj_[rel_pos(r)];
    if (adj.empty()) return out;
    const NodeKind first = model_relation_kinds(r).first;
    for (NodeId u = 0; u < adj.size(); ++u) {
      if (graph_->kind(u) != first) continue;
      for (NodeId v : adj[u]) {
        if (r == ModelRelation::kWordWord && rank_[v] < rank_[u]) continue;
        out.push_back({u, v});
      }
    }
    return out;
  }

  // copy with the given (relation, u, v) edges removed
  ModelGraph without_edges(
      std::span<const std::tuple<ModelRelation, NodeId, NodeId>> removed) const {
    ModelGraph out(*this);
    for (const auto& [r, u, v] : removed) {
      auto& keys = out.keys_[rel_pos(r)];
      if (keys.erase(pack(u, v)) == 0) continue;
      auto& adj = out.adj_[rel_pos(r)];
      drop(adj[u], v);
      drop(adj[v], u);
    }
    return out;
  }

 private:
  static std::size_t rel_pos(ModelRelation r) { return static_cast<std::size_t>(r); }

  static std::uint64_t pack(NodeId u, NodeId v) {
    const NodeId lo = u < v ? u : v;
    const NodeId hi = u < v ? v : u;
    return (static_cast<std::uint64_t>(lo) << 32) | hi;
  }

  static void drop(std::vector<NodeId>& list, NodeId v) {
    auto it = std::find(list.begin(), list.end(), v);
    if (it != list.end()) list.erase(it);
  }

  void merge_relation(const Graph& g, Relation src, std::vector<std::vector<NodeId>>& adj,
                      std::unordered_set<std::uint64_t>& keys) {
    for (NodeId u = 0; u < g.node_count(); ++u) {
      for (NodeId v : g.neighbors(u, src)) {
        if (u > v) continue;  // visit each undirected edge once
        if (!keys.insert(pack(u, v)).second) continue;
        adj[u].push_back(v);
        adj[v].push_back(u);
      }
    }
  }

  const Graph* graph_;
  RelationSet relations_;
  std::vector<std::uint32_t> rank_;
  std::array<std::vector<std::vector<NodeId>>, kNumModelRelations> adj_;
  std::array<std::unordered_set<std::uint64_t>, kNumModelRelations> keys_;
};

// All parameters in one flat buffer: the base embedding table followed by the
// per-layer relation matrices (relation order, then the self matrix).
struct ModelParams {
  ModelConfig cfg;
  std::size_t n_nodes = 0;
  std::vector<double> data;

  static ModelParams init(const ModelConfig& cfg, std::size_t n_nodes, std::uint64_t seed) {
    cfg.validate();
    ModelParams p;
    p.cfg = cfg;
    p.cfg.relations = normalize_relations(cfg.relations);
    p.n_nodes = n_nodes;
    p.data.assign(p.param_count(), 0.0);
    Rng g(seed);
    // base embeddings ~ N(0, 1/d0)
    const double h0_std = 1.0 / std::sqrt(static_cast<double>(cfg.base_dim));
    for (std::size_t i = 0; i < n_nodes * cfg.base_dim; ++i)
      p.data[i] = rng_normal(g, 0.0, h0_std);
    // Xavier-uniform weights, drawn in layout order
    for (int layer = 0; layer < 2; ++layer) {
      const std::size_t din = layer == 0 ? cfg.base_dim : cfg.hidden_dim;
      const std::size_t dout = layer == 0 ? cfg.hidden_dim : cfg.out_dim;
      const double limit = std::sqrt(6.0 / static_cast<double>(din + dout));
      for (std::size_t m = 0; m <= p.cfg.relations.size(); ++m) {
        double* w = p.data.data() + p.w_offset(layer, m);
        for (std::size_t i = 0; i < dout * din; ++i) w[i] = rng_range(g, -limit, limit);
      }
    }
    return p;
  }

  std::size_t n_relations() const { return cfg.relations.size(); }

  std::size_t layer_dim_in(int layer) const {
    return layer == 0 ? cfg.base_dim : cfg.hidden_dim;
  }
  std::size_t layer_dim_out(int layer) const {
    return layer == 0 ? cfg.hidden_dim : cfg.out_dim;
  }

  std::size_t h0_offset(NodeId u) const { return static_cast<std::size_t>(u) * cfg.base_dim; }

  // m in [0, n_relations()]: relation index, or n_relations() for the self matrix
  std::size_t w_offset(int layer, std::size_t m) const {
    std::size_t off = n_nodes * cfg.base_dim;
    const std::size_t l0 = cfg.hidden_dim * cfg.base_dim;
    const std::size_t l1 = cfg.out_dim * cfg.hidden_dim;
    if (layer == 1) off += (n_relations() + 1) * l0;
    return off + m * (layer == 0 ? l0 : l1);
  }

  std::size_t param_count() const {
    return n_nodes * cfg.base_dim +
           (n_relations() + 1) * (cfg.hidden_dim * cfg.base_dim) +
           (n_relations() + 1) * (cfg.out_dim * cfg.hidden_dim);
  }

  std::span<const double> h0(NodeId u) const {
    return {data.data() + h0_offset(u), cfg.base_dim};
  }

  MatRef w(int layer, std::size_t m) const {
    return MatRef(data.data() + w_offset(layer, m), layer_dim_out(layer), layer_dim_in(layer));
  }

  MatRef w_self(int layer) const { return w(layer, n_relations()); }

  void save(std::ostream& os, std::uint64_t registry_hash) const {
    BinaryWriter w(os);
    w.bytes("RGMW");
    w.u32(1);
    w.u64(registry_hash);
    w.u32(static_cast<std::uint32_t>(cfg.base_dim));
    w.u32(static_cast<std::uint32_t>(cfg.hidden_dim));
    w.u32(static_cast<std::uint32_t>(cfg.out_dim));
    w.u8(cfg.relu_output ? 1 : 0);
    w.u8(cfg.include_commenters ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(cfg.relations.size()));
    for (ModelRelation r : cfg.relations) w.u8(static_cast<std::uint8_t>(r));
    w.u64(n_nodes);
    w.u64(data.size());
    for (double v : data) w.f64(v);
    w.bytes("MEND");
  }

  static ModelParams load(std::istream& is, std::uint64_t expected_registry_hash,
                          bool force = false) {
    BinaryReader r(is);
    r.expect_bytes("RGMW", "model weights");
    if (r.u32() != 1) throw FormatError("model weights: unsupported version");
    const std::uint64_t hash = r.u64();
    if (!force && hash != expected_registry_hash)
      throw FormatError(
          "model weights were trained against a different graph snapshot "
          "(registry hash mismatch); pass force to load anyway");
    ModelParams p;
    p.cfg.base_dim = r.u32();
    p.cfg.hidden_dim = r.u32();
    p.cfg.out_dim = r.u32();
    p.cfg.relu_output = r.u8() != 0;
    p.cfg.include_commenters = r.u8() != 0;
    const std::uint8_t nrel = r.u8();
    if (nrel == 0 || nrel > kNumModelRelations)
      throw FormatError("model weights: bad relation count");
    p.cfg.relations.clear();
    for (std::uint8_t i = 0; i < nrel; ++i) {
      const std::uint8_t rel = r.u8();
      if (rel >= kNumModelRelations) throw FormatError("model weights: bad relation id");
      p.cfg.relations.push_back(static_cast<ModelRelation>(rel));
    }
    p.cfg.relations = normalize_relations(p.cfg.relations);
    p.n_nodes = r.u64();
    const std::uint64_t len = r.u64();
    if (len != p.param_count()) throw FormatError("model weights: size disagrees with shape");
    p.data.resize(len);
    for (std::uint64_t i = 0; i < len; ++i) p.data[i] = r.f64();
    r.expect_bytes("MEND", "model weights trailer");
    return p;
  }
};

struct EmbeddingCache {
  Matrix h1;  // layer-1 embeddings, one row per node
  Matrix z;   // layer-2 embeddings
};

// one propagation layer over every node; layer is 0 or 1
inline Matrix forward_layer(const ModelGraph& mg, const ModelParams& params, int layer,
                            const Matrix& h_prev) {
  const std::size_t n = mg.node_count();
  if (h_prev.rows != n)
    throw MissingEmbedding("forward_layer: embeddings missing for some nodes");
  const std::size_t d_in = params.layer_dim_in(layer);
  const std::size_t d_out = params.layer_dim_out(layer);
  if (h_prev.cols != d_in) throw DimensionMismatch("forward_layer: input dimension");
  if (mg.relations() != params.cfg.relations)
    throw InvalidConfig("forward_layer: params built for a different relation set");
  const bool act = layer == 0 || params.cfg.relu_output;

  Matrix out(n, d_out);
  Vec msg(d_in);
  for (NodeId u = 0; u < n; ++u) {
    Vec acc(d_out, 0.0);
    for (std::size_t m = 0; m < params.n_relations(); ++m) {
      const ModelRelation r = params.cfg.relations[m];
      auto nbrs = mg.neighbors(u, r);
      if (nbrs.empty()) continue;
      const double du = static_cast<double>(nbrs.size());
      std::fill(msg.begin(), msg.end(), 0.0);
      for (NodeId v : nbrs) {
        const double c = 1.0 / std::sqrt(du * static_cast<double>(mg.degree(v, r)));
        auto hv = h_prev.row(v);
        for (std::size_t j = 0; j < d_in; ++j) msg[j] += c * hv[j];
      }
      const Vec y = matvec(params.w(layer, m), msg);
      for (std::size_t j = 0; j < d_out; ++j) acc[j] += y[j];
    }
    const Vec y0 = matvec(params.w_self(layer), h_prev.row(u));
    for (std::size_t j = 0; j < d_out; ++j) acc[j] += y0[j];
    auto row = out.row(u);
    for (std::size_t j = 0; j < d_out; ++j) row[j] = act && acc[j] < 0.0 ? 0.0 : acc[j];
  }
  return out;
}

inline EmbeddingCache embed_all(const ModelGraph& mg, const ModelParams& params) {
  const std::size_t n = mg.node_count();
  if (params.n_nodes != n)
    throw MissingEmbedding("embed_all: base embeddings sized for a different graph");
  Matrix h0(n, params.cfg.base_dim);
  for (NodeId u = 0; u < n; ++u) {
    auto src = params.h0(u);
    std::copy(src.begin(), src.end(), h0.row(u).begin());
  }
  EmbeddingCache cache;
  cache.h1 = forward_layer(mg, params, 0, h0);
  cache.z = forward_layer(mg, params, 1, cache.h1);
  return cache;
}

inline double link_prob(std::span<const double> z_u, std::span<const double> z_v) {
  return logistic(dot(z_u, z_v));
}

// Define-by-run forward over the tape for a mini-batch: builds layer-1 and
// layer-2 variables on demand (memoized), touching exactly the 2-hop
// neighborhood of the requested nodes, and maps leaf adjoints back onto the
// flat parameter layout.
class BatchForward {
 public:
  BatchForward(Tape& tape, const ModelGraph& mg, const ModelParams& params)
      : tape_(tape), mg_(mg), p_(params) {
    if (mg.relations() != params.cfg.relations)
      throw InvalidConfig("batch forward: params built for a different relation set");
    h0_vars_.assign(mg.node_count(), Tape::kNoVar);
    h1_vars_.assign(mg.node_count(), Tape::kNoVar);
    z_vars_.assign(mg.node_count(), Tape::kNoVar);
    for (auto& l : w_vars_) l.assign(params.n_relations() + 1, Tape::kNoVar);
  }

  Tape::Var h1(NodeId u) { return node_var(u, 0); }
  Tape::Var z(NodeId u) { return node_var(u, 1); }

  // after tape.backward(): accumulate the adjoints of every leaf this batch
  // touched into a flat gradient with the parameter layout
  void pull_gradients(std::span<double> grad) const {
    if (grad.size() != p_.data.size())
      throw DimensionMismatch("pull_gradients: buffer size != parameter count");
    for (NodeId u = 0; u < h0_vars_.size(); ++u) {
      if (h0_vars_[u] == Tape::kNoVar) continue;
      auto a = tape_.adjoint(h0_vars_[u]);
      double* dst = grad.data() + p_.h0_offset(u);
      for (std::size_t i = 0; i < a.size(); ++i) dst[i] += a[i];
    }
    for (int layer = 0; layer < 2; ++layer) {
      for (std::size_t m = 0; m < w_vars_[layer].size(); ++m) {
        if (w_vars_[layer][m] == Tape::kNoVar) continue;
        auto a = tape_.adjoint(w_vars_[layer][m]);
        double* dst = grad.data() + p_.w_offset(layer, m);
        for (std::size_t i = 0; i < a.size(); ++i) dst[i] += a[i];
      }
    }
  }

 private:
  Tape::Var h0_var(NodeId u) {
    if (h0_vars_[u] == Tape::kNoVar) h0_vars_[u] = tape_.input(p_.h0(u));
    return h0_vars_[u];
  }

  Tape::Var w_var(int layer, std::size_t m) {
    if (w_vars_[layer][m] == Tape::kNoVar)
      w_vars_[layer][m] = tape_.input_matrix(p_.w(layer, m));
    return w_vars_[layer][m];
  }

  Tape::Var node_var(NodeId u, int layer) {
    auto& memo = layer == 0 ? h1_vars_ : z_vars_;
    if (memo[u] != Tape::kNoVar) return memo[u];
    std::vector<Tape::Var> terms;
    std::vector<double> ones;
    for (std::size_t m = 0; m < p_.n_relations(); ++m) {
      const ModelRelation r = p_.cfg.relations[m];
      auto nbrs = mg_.neighbors(u, r);
      if (nbrs.empty()) continue;
      const double du = static_cast<double>(nbrs.size());
      std::vector<Tape::Var> hv;
      std::vector<double> coef;
      hv.reserve(nbrs.size());
      coef.reserve(nbrs.size());
      for (NodeId v : nbrs) {
        hv.push_back(layer == 0 ? h0_var(v) : node_var(v, 0));
        coef.push_back(1.0 / std::sqrt(du * static_cast<double>(mg_.degree(v, r))));
      }
      terms.push_back(tape_.matvec(w_var(layer, m), tape_.weighted_sum(hv, coef)));
      ones.push_back(1.0);
    }
    const Tape::Var self_in = layer == 0 ? h0_var(u) : node_var(u, 0);
    terms.push_back(tape_.matvec(w_var(layer, p_.n_relations()), self_in));
    ones.push_back(1.0);
    Tape::Var sum = tape_.weighted_sum(terms, ones);
    const bool act = layer == 0 || p_.cfg.relu_output;
    memo[u] = act ? tape_.relu(sum) : sum;
    return memo[u];
  }

  Tape& tape_;
  const ModelGraph& mg_;
  const ModelParams& p_;
  std::vector<Tape::Var> h0_vars_;
  std::vector<Tape::Var> h1_vars_;
  std::vector<Tape::Var> z_vars_;
  std::array<std::vector<Tape::Var>, 2> w_vars_;
};

}  // namespace revgraph
