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

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "revgraph/errors.hpp"
#include "revgraph/io_util.hpp"

namespace revgraph {

// Typed heterogeneous graph store for the socio-technical graph: a stable
// (kind, external id) -> dense id registry plus per-relation symmetric
// adjacency with optional edge weights.

enum class NodeKind : std::uint8_t {
  kPullRequest = 0,
  kWorkItem,
  kFile,
  kUser,
  kRepository,
  kWord
};
inline constexpr std::size_t kNumNodeKinds = 6;

enum class Relation : std::uint8_t {
  kCreates = 0,   // User - PullRequest (author)
  kReviews,       // User - PullRequest
  kCommentsOn,    // User - PullRequest
  kContains,      // Repository - PullRequest
  kChanges,       // PullRequest - File
  kLinkedTo,      // PullRequest - WorkItem
  kParentOf,      // WorkItem - WorkItem
  kPrWord,        // PullRequest - Word
  kFileWord,      // File - Word
  kWordWord       // Word - Word
};
inline constexpr std::size_t kNumRelations = 10;

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xffffffff;

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::kPullRequest: return "pull_request";
    case NodeKind::kWorkItem: return "work_item";
    case NodeKind::kFile: return "file";
    case NodeKind::kUser: return "user";
    case NodeKind::kRepository: return "repository";
    case NodeKind::kWord: return "word";
  }
  return "?";
}

inline const char* to_string(Relation r) {
  switch (r) {
    case Relation::kCreates: return "creates";
    case Relation::kReviews: return "reviews";
    case Relation::kCommentsOn: return "comments_on";
    case Relation::kContains: return "contains";
    case Relation::kChanges: return "changes";
    case Relation::kLinkedTo: return "linked_to";
    case Relation::kParentOf: return "parent_of";
    case Relation::kPrWord: return "pr_word";
    case Relation::kFileWord: return "file_word";
    case Relation::kWordWord: return "word_word";
  }
  return "?";
}

// unordered endpoint-kind constraint per relation
inline std::pair<NodeKind, NodeKind> relation_endpoints(Relation r) {
  switch (r) {
    case Relation::kCreates: return {NodeKind::kUser, NodeKind::kPullRequest};
    case Relation::kReviews: return {NodeKind::kUser, NodeKind::kPullRequest};
    case Relation::kCommentsOn: return {NodeKind::kUser, NodeKind::kPullRequest};
    case Relation::kContains: return {NodeKind::kRepository, NodeKind::kPullRequest};
    case Relation::kChanges: return {NodeKind::kPullRequest, NodeKind::kFile};
    case Relation::kLinkedTo: return {NodeKind::kPullRequest, NodeKind::kWorkItem};
    case Relation::kParentOf: return {NodeKind::kWorkItem, NodeKind::kWorkItem};
    case Relation::kPrWord: return {NodeKind::kPullRequest, NodeKind::kWord};
    case Relation::kFileWord: return {NodeKind::kFile, NodeKind::kWord};
    case Relation::kWordWord: return {NodeKind::kWord, NodeKind::kWord};
  }
  return {NodeKind::kWord, NodeKind::kWord};
}

class Graph {
 public:
  // idempotent: returns the existing id when (kind, external_id) is known
  NodeId add_node(NodeKind kind, std::string_view external_id) {
    if (external_id.empty()) throw InvalidConfig("add_node: empty external id");
    auto& reg = registry_[static_cast<std::size_t>(kind)];
    auto it = reg.find(std::string(external_id));
    if (it != reg.end()) return it->second;
    const NodeId id = static_cast<NodeId>(kinds_.size());
    kinds_.push_back(kind);
    ids_.emplace_back(external_id);
    reg.emplace(std::string(external_id), id);
    return id;
  }

  NodeId find_node(NodeKind kind, std::string_view external_id) const {
    const auto& reg = registry_[static_cast<std::size_t>(kind)];
    auto it = reg.find(std::string(external_id));
    return it == reg.end() ? kNoNode : it->second;
  }

  // returns true when newly inserted, false for a duplicate
  bool add_edge(Relation r, NodeId u, NodeId v, double weight = 1.0) {
    check_node(u);
    check_node(v);
    if (u == v) throw KindMismatch("add_edge: self-loops are not allowed");
    const auto want = relation_endpoints(r);
    const NodeKind ku = kinds_[u], kv = kinds_[v];
    const bool ok = (ku == want.first && kv == want.second) ||
                    (ku == want.second && kv == want.first);
    if (!ok)
      throw KindMismatch(std::string("add_edge: ") + to_string(ku) + "-" + to_string(kv) +
                         " endpoints not allowed for relation " + to_string(r));
    const std::size_t ri = static_cast<std::size_t>(r);
    if (!edge_keys_[ri].insert(edge_key(u, v)).second) return false;
    grow(ri);
    adj_[ri][u].push_back(v);
    wts_[ri][u].push_back(weight);
    adj_[ri][v].push_back(u);
    wts_[ri][v].push_back(weight);
    ++edge_counts_[ri];
    return true;
  }

  bool has_edge(Relation r, NodeId u, NodeId v) const {
    return edge_keys_[static_cast<std::size_t>(r)].count(edge_key(u, v)) != 0;
  }

  // insertion order; symmetric: u appears for v whenever (u,v,r) was added
  std::span<const NodeId> neighbors(NodeId u, Relation r) const {
    check_node(u);
    const auto& lists = adj_[static_cast<std::size_t>(r)];
    if (u >= lists.size()) return {};
    return lists[u];
  }

  std::span<const double> edge_weights(NodeId u, Relation r) const {
    check_node(u);
    const auto& lists = wts_[static_cast<std::size_t>(r)];
    if (u >= lists.size()) return {};
    return lists[u];
  }

  std::size_t degree(NodeId u, Relation r) const { return neighbors(u, r).size(); }

  std::size_t node_count() const { return kinds_.size(); }

  std::size_t edge_count(Relation r) const { return edge_counts_[static_cast<std::size_t>(r)]; }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (std::size_t c : edge_counts_) n += c;
    return n;
  }

  NodeKind kind(NodeId u) const {
    check_node(u);
    return kinds_[u];
  }

  const std::string& external_id(NodeId u) const {
    check_node(u);
    return ids_[u];
  }

  std::vector<NodeId> nodes_of_kind(NodeKind k) const {
    std::vector<NodeId> out;
    for (NodeId u = 0; u < kinds_.size(); ++u)
      if (kinds_[u] == k) out.push_back(u);
    return out;
  }

  // fingerprint of the node registry in id order; ties model weights to the
  // graph they were trained on
  std::uint64_t registry_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (NodeId u = 0; u < kinds_.size(); ++u) {
      h = fnv1a_u8(static_cast<std::uint8_t>(kinds_[u]), h);
      h = fnv1a(ids_[u], h);
      h = fnv1a_u8(0xff, h);  // separator
    }
    return h;
  }

  // full-scan structural check: kind constraints, symmetry, degree bookkeeping
  void validate() const {
    for (std::size_t ri = 0; ri < kNumRelations; ++ri) {
      const Relation r = static_cast<Relation>(ri);
      std::size_t directed = 0;
      for (NodeId u = 0; u < kinds_.size(); ++u) {
        auto ns = neighbors(u, r);
        auto ws = edge_weights(u, r);
        if (ns.size() != ws.size()) throw FormatError("validate: weight list out of sync");
        directed += ns.size();
        for (NodeId v : ns) {
          const auto want = relation_endpoints(r);
          const bool ok = (kinds_[u] == want.first && kinds_[v] == want.second) ||
                          (kinds_[u] == want.second && kinds_[v] == want.first);
          if (!ok) throw KindMismatch("validate: edge violates relation kinds");
          auto back = neighbors(v, r);
          bool found = false;
          for (NodeId w : back)
            if (w == u) {
              found = true;
              break;
            }
          if (!found) throw FormatError("validate: adjacency not symmetric");
        }
      }
      if (directed != 2 * edge_counts_[ri])
        throw FormatError("validate: degree sum != 2 * edge count");
    }
  }

  void save(std::ostream& os) const {
    BinaryWriter w(os);
    w.bytes("RGST");
    w.u32(1);  // version
    w.u64(kinds_.size());
    for (NodeId u = 0; u < kinds_.size(); ++u) {
      w.u8(static_cast<std::uint8_t>(kinds_[u]));
      w.str(ids_[u]);
    }
    for (std::size_t ri = 0; ri < kNumRelations; ++ri) {
      w.u64(edge_counts_[ri]);
      for (NodeId u = 0; u < kinds_.size(); ++u) {
        auto ns = neighbors(u, static_cast<Relation>(ri));
        auto ws = edge_weights(u, static_cast<Relation>(ri));
        w.u32(static_cast<std::uint32_t>(ns.size()));
        for (std::size_t i = 0; i < ns.size(); ++i) {
          w.u32(ns[i]);
          w.f64(ws[i]);
        }
      }
    }
    w.bytes("GEND");
  }

  static Graph load(std::istream& is) {
    BinaryReader r(is);
    r.expect_bytes("RGST", "graph snapshot");
    const std::uint32_t version = r.u32();
    if (version != 1) throw FormatError("graph snapshot: unsupported version");
    Graph g;
    const std::uint64_t n = r.u64();
    for (std::uint64_t u = 0; u < n; ++u) {
      const std::uint8_t kb = r.u8();
      if (kb >= kNumNodeKinds) throw FormatError("graph snapshot: bad node kind");
      const std::string id = r.str();
      if (id.empty()) throw FormatError("graph snapshot: empty external id");
      const NodeKind k = static_cast<NodeKind>(kb);
      auto& reg = g.registry_[kb];
      if (!reg.emplace(id, static_cast<NodeId>(u)).second)
        throw FormatError("graph snapshot: duplicate registry entry");
      g.kinds_.push_back(k);
      g.ids_.push_back(id);
    }
    for (std::size_t ri = 0; ri < kNumRelations; ++ri) {
      g.edge_counts_[ri] = r.u64();
      g.adj_[ri].resize(n);
      g.wts_[ri].resize(n);
      std::size_t directed = 0;
      for (std::uint64_t u = 0; u < n; ++u) {
        const std::uint32_t deg = r.u32();
        auto& ns = g.adj_[ri][u];
        auto& ws = g.wts_[ri][u];
        ns.reserve(deg);
        ws.reserve(deg);
        for (std::uint32_t i = 0; i < deg; ++i) {
          const NodeId v = r.u32();
          if (v >= n) throw FormatError("graph snapshot: neighbor id out of range");
          ns.push_back(v);
          ws.push_back(r.f64());
        }
        directed += deg;
        for (NodeId v : ns)
          g.edge_keys_[ri].insert(edge_key(static_cast<NodeId>(u), v));
      }
      if (directed != 2 * g.edge_counts_[ri])
        throw FormatError("graph snapshot: edge count disagrees with adjacency");
      if (g.edge_keys_[ri].size() != g.edge_counts_[ri])
        throw FormatError("graph snapshot: duplicate or asymmetric edges");
    }
    r.expect_bytes("GEND", "graph snapshot trailer");
    return g;
  }

  void save_file(const std::string& path) const {
    auto os = open_output(path);
    save(os);
    if (!os) throw IoError("graph snapshot: write failed: " + path);
  }

  static Graph load_file(const std::string& path) {
    auto is = open_input(path);
    return load(is);
  }

 private:
  static std::uint64_t edge_key(NodeId u, NodeId v) {
    const NodeId lo = u < v ? u : v;
    const NodeId hi = u < v ? v : u;
    return (static_cast<std::uint64_t>(lo) << 32) | hi;
  }

  void check_node(NodeId u) const {
    if (u >= kinds_.size()) throw UnknownNode("node id out of range");
  }

  void grow(std::size_t ri) {
    if (adj_[ri].size() < kinds_.size()) {
      adj_[ri].resize(kinds_.size());
      wts_[ri].resize(kinds_.size());
    }
  }

  std::vector<NodeKind> kinds_;
  std::vector<std::string> ids_;
  std::array<std::unordered_map<std::string, NodeId>, kNumNodeKinds> registry_;
  std::array<std::vector<std::vector<NodeId>>, kNumRelations> adj_;
  std::array<std::vector<std::vector<double>>, kNumRelations> wts_;
  std::array<std::unordered_set<std::uint64_t>, kNumRelations> edge_keys_;
  std::array<std::size_t, kNumRelations> edge_counts_{};
};

}  // namespace revgraph
