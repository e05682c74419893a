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

#include "revgraph/graph.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "revgraph/rng.hpp"

using namespace revgraph;

TEST_CASE("add_node is idempotent and kinds partition the namespace") {
  Graph g;
  NodeId a1 = g.add_node(NodeKind::kUser, "alice");
  NodeId a2 = g.add_node(NodeKind::kUser, "alice");
  REQUIRE(a1 == a2);
  NodeId f = g.add_node(NodeKind::kFile, "alice");
  REQUIRE(f != a1);
  REQUIRE(g.node_count() == 2);
  REQUIRE(g.kind(a1) == NodeKind::kUser);
  REQUIRE(g.external_id(f) == "alice");
}

TEST_CASE("node ids are dense from zero") {
  Graph g;
  REQUIRE(g.add_node(NodeKind::kUser, "u1") == 0);
  REQUIRE(g.add_node(NodeKind::kPullRequest, "pr1") == 1);
  REQUIRE(g.add_node(NodeKind::kFile, "f1") == 2);
}

TEST_CASE("empty external id is rejected") {
  Graph g;
  REQUIRE_THROWS_AS(g.add_node(NodeKind::kUser, ""), InvalidConfig);
}

TEST_CASE("add_edge gives symmetric visibility and idempotency") {
  Graph g;
  NodeId pr = g.add_node(NodeKind::kPullRequest, "pr1");
  NodeId f = g.add_node(NodeKind::kFile, "a.cs");
  REQUIRE(g.add_edge(Relation::kChanges, pr, f));
  auto back = g.neighbors(f, Relation::kChanges);
  REQUIRE(std::vector<NodeId>(back.begin(), back.end()) == std::vector<NodeId>{pr});
  REQUIRE_FALSE(g.add_edge(Relation::kChanges, pr, f));
  REQUIRE_FALSE(g.add_edge(Relation::kChanges, f, pr));  // either orientation
  REQUIRE(g.degree(f, Relation::kChanges) == 1);
  REQUIRE(g.edge_count(Relation::kChanges) == 1);
}

TEST_CASE("kind constraints are enforced") {
  Graph g;
  NodeId u = g.add_node(NodeKind::kUser, "u");
  NodeId f = g.add_node(NodeKind::kFile, "f");
  REQUIRE_THROWS_AS(g.add_edge(Relation::kChanges, u, f), KindMismatch);
  NodeId w1 = g.add_node(NodeKind::kWord, "w1");
  NodeId w2 = g.add_node(NodeKind::kWord, "w2");
  REQUIRE(g.add_edge(Relation::kWordWord, w1, w2, 0.5));
  REQUIRE_THROWS_AS(g.add_edge(Relation::kWordWord, w1, w1), KindMismatch);  // self-loop
}

TEST_CASE("neighbors keep insertion order") {
  Graph g;
  NodeId pr = g.add_node(NodeKind::kPullRequest, "pr1");
  NodeId f1 = g.add_node(NodeKind::kFile, "f1");
  NodeId f2 = g.add_node(NodeKind::kFile, "f2");
  NodeId f3 = g.add_node(NodeKind::kFile, "f3");
  g.add_edge(Relation::kChanges, pr, f1);
  g.add_edge(Relation::kChanges, pr, f2);
  g.add_edge(Relation::kChanges, pr, f3);
  auto ns = g.neighbors(pr, Relation::kChanges);
  REQUIRE(std::vector<NodeId>(ns.begin(), ns.end()) == std::vector<NodeId>{f1, f2, f3});
  REQUIRE(g.neighbors(pr, Relation::kReviews).empty());
  REQUIRE_THROWS_AS(g.neighbors(999, Relation::kChanges), UnknownNode);
}

TEST_CASE("find_node distinguishes kinds and misses") {
  Graph g;
  NodeId u = g.add_node(NodeKind::kUser, "bob");
  REQUIRE(g.find_node(NodeKind::kUser, "bob") == u);
  REQUIRE(g.find_node(NodeKind::kFile, "bob") == kNoNode);
  REQUIRE(g.find_node(NodeKind::kUser, "nope") == kNoNode);
}

static Graph random_graph(std::uint64_t seed, std::size_t n_pr, std::size_t n_user,
                          std::size_t n_file, std::size_t n_word) {
  Graph g;
  Rng rng(seed);
  std::vector<NodeId> prs, users, files, words;
  for (std::size_t i = 0; i < n_pr; ++i)
    prs.push_back(g.add_node(NodeKind::kPullRequest, "pr" + std::to_string(i)));
  for (std::size_t i = 0; i < n_user; ++i)
    users.push_back(g.add_node(NodeKind::kUser, "u" + std::to_string(i)));
  for (std::size_t i = 0; i < n_file; ++i)
    files.push_back(g.add_node(NodeKind::kFile, "f" + std::to_string(i)));
  for (std::size_t i = 0; i < n_word; ++i)
    words.push_back(g.add_node(NodeKind::kWord, "w" + std::to_string(i)));
  auto pick = [&rng](const std::vector<NodeId>& v) { return v[rng_index(rng, v.size())]; };
  for (int i = 0; i < 60; ++i) {
    switch (rng_index(rng, 5)) {
      case 0: g.add_edge(Relation::kCreates, pick(users), pick(prs)); break;
      case 1: g.add_edge(Relation::kReviews, pick(users), pick(prs)); break;
      case 2: g.add_edge(Relation::kChanges, pick(prs), pick(files)); break;
      case 3: g.add_edge(Relation::kPrWord, pick(prs), pick(words), 1.0); break;
      default: {
        NodeId a = pick(words), b = pick(words);
        if (a != b) g.add_edge(Relation::kWordWord, a, b, rng_range(rng, -1.0, 2.0));
        break;
      }
    }
  }
  return g;
}

TEST_CASE("symmetry and degree-sum invariants hold on random graphs") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Graph g = random_graph(seed, 6, 5, 7, 8);
    REQUIRE_NOTHROW(g.validate());
    for (std::size_t ri = 0; ri < kNumRelations; ++ri) {
      const Relation r = static_cast<Relation>(ri);
      std::size_t deg_sum = 0;
      for (NodeId u = 0; u < g.node_count(); ++u) deg_sum += g.degree(u, r);
      REQUIRE(deg_sum == 2 * g.edge_count(r));
    }
  }
}

TEST_CASE("save/load round-trips bit-exactly") {
  Graph g = random_graph(77, 5, 4, 6, 9);
  std::ostringstream os1;
  g.save(os1);
  std::istringstream is(os1.str());
  Graph g2 = Graph::load(is);
  REQUIRE(g2.node_count() == g.node_count());
  for (NodeId u = 0; u < g.node_count(); ++u) {
    REQUIRE(g2.kind(u) == g.kind(u));
    REQUIRE(g2.external_id(u) == g.external_id(u));
    for (std::size_t ri = 0; ri < kNumRelations; ++ri) {
      auto a = g.neighbors(u, static_cast<Relation>(ri));
      auto b = g2.neighbors(u, static_cast<Relation>(ri));
      REQUIRE(std::vector<NodeId>(a.begin(), a.end()) ==
              std::vector<NodeId>(b.begin(), b.end()));
      auto wa = g.edge_weights(u, static_cast<Relation>(ri));
      auto wb = g2.edge_weights(u, static_cast<Relation>(ri));
      REQUIRE(std::vector<double>(wa.begin(), wa.end()) ==
              std::vector<double>(wb.begin(), wb.end()));
    }
  }
  REQUIRE(g2.registry_hash() == g.registry_hash());
  // saving the loaded graph reproduces the same bytes
  std::ostringstream os2;
  g2.save(os2);
  REQUIRE(os1.str() == os2.str());
}

TEST_CASE("empty graph round-trips") {
  Graph g;
  std::ostringstream os;
  g.save(os);
  std::istringstream is(os.str());
  Graph g2 = Graph::load(is);
  REQUIRE(g2.node_count() == 0);
  REQUIRE(g2.edge_count() == 0);
}

TEST_CASE("weighted edge round-trips weight exactly") {
  Graph g;
  NodeId w1 = g.add_node(NodeKind::kWord, "a");
  NodeId w2 = g.add_node(NodeKind::kWord, "b");
  g.add_edge(Relation::kWordWord, w1, w2, 0.51);
  std::ostringstream os;
  g.save(os);
  std::istringstream is(os.str());
  Graph g2 = Graph::load(is);
  REQUIRE(g2.edge_weights(0, Relation::kWordWord)[0] == 0.51);
}

TEST_CASE("truncated snapshot raises FormatError, never a partial graph") {
  Graph g = random_graph(5, 3, 3, 3, 3);
  std::ostringstream os;
  g.save(os);
  const std::string full = os.str();
  for (std::size_t cut : {std::size_t(3), full.size() / 2, full.size() - 1}) {
    std::istringstream is(full.substr(0, cut));
    REQUIRE_THROWS_AS(Graph::load(is), FormatError);
  }
  // corrupt magic
  std::string bad = full;
  bad[0] = 'X';
  std::istringstream is(bad);
  REQUIRE_THROWS_AS(Graph::load(is), FormatError);
}

TEST_CASE("registry hash is sensitive to ids and kinds") {
  Graph a, b, c;
  a.add_node(NodeKind::kUser, "x");
  b.add_node(NodeKind::kUser, "y");
  c.add_node(NodeKind::kFile, "x");
  REQUIRE(a.registry_hash() != b.registry_hash());
  REQUIRE(a.registry_hash() != c.registry_hash());
}
