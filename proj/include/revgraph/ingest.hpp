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

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "revgraph/cooccur.hpp"
#include "revgraph/errors.hpp"
#include "revgraph/graph.hpp"
#include "revgraph/io_util.hpp"
#include "revgraph/text.hpp"

namespace revgraph {

// Event-log ingestion: parse repository events, hold the state needed to
// rebuild the augmented graph (records + text statistics), and regenerate the
// graph deterministically. Incremental refresh works by merging new events
// into the state (insert-or-replace on event id) and regenerating in the
// canonical batch order, which makes the incremental and batch paths
// byte-identical by construction.

struct PullRequestEvent {
  std::string id;
  std::string repo_id;
  std::string author_id;
  std::vector<std::string> reviewer_ids;
  std::vector<std::string> commenter_ids;
  std::vector<std::string> file_paths;
  std::string title;
  std::string description;
  std::vector<std::string> linked_work_item_ids;
};

struct WorkItemEvent {
  std::string id;
  std::string title;
  std::string description;
  std::string parent_id;  // empty = none
};

using EventRecord = std::variant<PullRequestEvent, WorkItemEvent>;

struct IngestConfig {
  std::uint32_t window = 5;
  double pmi_threshold = 0.0;
  std::uint32_t min_token_count = 2;
  StopwordList stopwords = StopwordList::default_list();

  void validate() const {
    if (window < 2) throw InvalidConfig("window must be >= 2");
    if (min_token_count < 1) throw InvalidConfig("min_token_count must be >= 1");
    if (!std::isfinite(pmi_threshold)) throw InvalidConfig("pmi_threshold must be finite");
  }
};

// ---- JSON Lines -------------------------------------------------------------

namespace detail {

inline std::string json_str(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) return {};
  if (!it->is_string())
    throw ParseError("line " + std::to_string(line) + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

inline std::vector<std::string> json_str_list(const nlohmann::json& j, const char* key,
                                              std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) return {};
  if (!it->is_array())
    throw ParseError("line " + std::to_string(line) + ": field '" + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& e : *it) {
    if (!e.is_string())
      throw ParseError("line " + std::to_string(line) + ": field '" + key +
                       "' must contain strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace detail

inline EventRecord parse_event_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError("line " + std::to_string(line) + ": not a JSON object");
  const std::string type = detail::json_str(j, "type", line);
  if (type == "pull_request") {
    PullRequestEvent e;
    e.id = detail::json_str(j, "id", line);
    e.repo_id = detail::json_str(j, "repo_id", line);
    e.author_id = detail::json_str(j, "author_id", line);
    e.reviewer_ids = detail::json_str_list(j, "reviewer_ids", line);
    e.commenter_ids = detail::json_str_list(j, "commenter_ids", line);
    e.file_paths = detail::json_str_list(j, "file_paths", line);
    e.title = detail::json_str(j, "title", line);
    e.description = detail::json_str(j, "description", line);
    e.linked_work_item_ids = detail::json_str_list(j, "linked_work_item_ids", line);
    if (e.id.empty()) throw ParseError("line " + std::to_string(line) + ": empty event id");
    return e;
  }
  if (type == "work_item") {
    WorkItemEvent e;
    e.id = detail::json_str(j, "id", line);
    e.title = detail::json_str(j, "title", line);
    e.description = detail::json_str(j, "description", line);
    e.parent_id = detail::json_str(j, "parent_id", line);
    if (e.id.empty()) throw ParseError("line " + std::to_string(line) + ": empty event id");
    return e;
  }
  throw ParseError("line " + std::to_string(line) + ": unknown event type '" + type + "'");
}

inline std::vector<EventRecord> read_events_jsonl(std::istream& is) {
  std::vector<EventRecord> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string_view sv(raw);
    while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ')) sv.remove_suffix(1);
    if (sv.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(sv, nullptr, false);
    if (j.is_discarded())
      throw ParseError("line " + std::to_string(line) + ": invalid JSON");
    out.push_back(parse_event_json(j, line));
  }
  return out;
}

inline std::vector<EventRecord> read_events_file(const std::string& path) {
  auto is = open_input(path);
  return read_events_jsonl(is);
}

inline nlohmann::json event_to_json(const EventRecord& ev) {
  nlohmann::json j;
  if (const auto* pr = std::get_if<PullRequestEvent>(&ev)) {
    j["type"] = "pull_request";
    j["id"] = pr->id;
    j["repo_id"] = pr->repo_id;
    j["author_id"] = pr->author_id;
    j["reviewer_ids"] = pr->reviewer_ids;
    j["commenter_ids"] = pr->commenter_ids;
    j["file_paths"] = pr->file_paths;
    j["title"] = pr->title;
    j["description"] = pr->description;
    j["linked_work_item_ids"] = pr->linked_work_item_ids;
  } else {
    const auto& wi = std::get<WorkItemEvent>(ev);
    j["type"] = "work_item";
    j["id"] = wi.id;
    j["title"] = wi.title;
    j["description"] = wi.description;
    j["parent_id"] = wi.parent_id;
  }
  return j;
}

inline void write_events_jsonl(std::ostream& os, std::span<const EventRecord> events) {
  for (const auto& ev : events) os << event_to_json(ev).dump() << "\n";
}

// ---- Corpus -----------------------------------------------------------------

namespace detail {

inline std::vector<std::string> dedupe_keep_order(std::vector<std::string> v) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(v.size());
  for (auto& s : v)
    if (seen.insert(s).second) out.push_back(std::move(s));
  return out;
}

}  // namespace detail

class Corpus {
 public:
  explicit Corpus(IngestConfig cfg = {}) : cfg_(std::move(cfg)), counts_(cfg_.window) {
    cfg_.validate();
  }

  const IngestConfig& config() const { return cfg_; }
  const CooccurrenceCounts& counts() const { return counts_; }
  std::size_t record_count() const { return records_.size(); }

  // insert-or-replace; replacement keeps the record's original position so
  // regeneration order is independent of when the update arrived
  void apply(std::span<const EventRecord> events) {
    for (std::size_t i = 0; i < events.size(); ++i) {
      try {
        apply_one(events[i]);
      } catch (const Error& e) {
        throw ParseError("event " + std::to_string(i) + ": " + e.what());
      }
    }
  }

  // total occurrences: text positions plus filename occurrences; this is what
  // the vocabulary threshold is measured against
  std::uint64_t token_total(std::string_view tok) const {
    std::uint64_t n = counts_.occurrences(tok);
    auto it = file_token_counts_.find(std::string(tok));
    if (it != file_token_counts_.end()) n += it->second;
    return n;
  }

  bool in_vocab(std::string_view tok) const {
    return token_total(tok) >= cfg_.min_token_count;
  }

  // stopword-filtered token documents of a work item (title, description);
  // null when the work item is unknown
  const std::vector<std::vector<std::string>>* work_item_docs(std::string_view id) const {
    auto it = index_.find(key_of(1, id));
    if (it == index_.end()) return nullptr;
    return &records_[it->second].docs;
  }

  // deterministic regeneration of the augmented graph from current state
  Graph build_graph() const {
    Graph g;
    // pass 1: socio-technical nodes and edges, in record order
    for (const auto& rec : records_) {
      if (const auto* pr = std::get_if<PullRequestEvent>(&rec.event)) {
        const NodeId prn = g.add_node(NodeKind::kPullRequest, pr->id);
        if (!pr->repo_id.empty()) {
          const NodeId rn = g.add_node(NodeKind::kRepository, pr->repo_id);
          g.add_edge(Relation::kContains, rn, prn);
        }
        if (!pr->author_id.empty()) {
          const NodeId an = g.add_node(NodeKind::kUser, pr->author_id);
          g.add_edge(Relation::kCreates, an, prn);
        }
        for (const auto& r : pr->reviewer_ids)
          g.add_edge(Relation::kReviews, g.add_node(NodeKind::kUser, r), prn);
        for (const auto& cmt : pr->commenter_ids)
          g.add_edge(Relation::kCommentsOn, g.add_node(NodeKind::kUser, cmt), prn);
        for (const auto& f : pr->file_paths)
          g.add_edge(Relation::kChanges, prn, g.add_node(NodeKind::kFile, f));
        for (const auto& w : pr->linked_work_item_ids)
          g.add_edge(Relation::kLinkedTo, prn, g.add_node(NodeKind::kWorkItem, w));
      } else {
        const auto& wi = std::get<WorkItemEvent>(rec.event);
        const NodeId win = g.add_node(NodeKind::kWorkItem, wi.id);
        if (!wi.parent_id.empty()) {
          const NodeId pn = g.add_node(NodeKind::kWorkItem, wi.parent_id);
          if (pn != win) g.add_edge(Relation::kParentOf, pn, win);
        }
      }
    }
    // pass 2: a Word node for every vocabulary token, in first-use order
    // (text documents first, then filename tokens per PR file list)
    for (const auto& rec : records_) {
      for (const auto& doc : rec.docs)
        for (const auto& t : doc)
          if (in_vocab(t)) g.add_node(NodeKind::kWord, t);
      if (const auto* pr = std::get_if<PullRequestEvent>(&rec.event)) {
        for (const auto& f : pr->file_paths)
          for (const auto& t : file_tokens_.at(f))
            if (in_vocab(t)) g.add_node(NodeKind::kWord, t);
      }
    }
    // pass 3: PrWord (own text + linked work items' text) and FileWord edges
    for (const auto& rec : records_) {
      const auto* pr = std::get_if<PullRequestEvent>(&rec.event);
      if (!pr) continue;
      const NodeId prn = g.find_node(NodeKind::kPullRequest, pr->id);
      for (const auto& doc : rec.docs) link_doc_words(g, prn, doc);
      for (const auto& wid : pr->linked_work_item_ids) {
        const auto* docs = work_item_docs(wid);
        if (!docs) continue;
        for (const auto& doc : *docs) link_doc_words(g, prn, doc);
      }
      for (const auto& f : pr->file_paths) {
        const NodeId fn = g.find_node(NodeKind::kFile, f);
        for (const auto& t : file_tokens_.at(f)) {
          if (!in_vocab(t)) continue;
          g.add_edge(Relation::kFileWord, fn, g.add_node(NodeKind::kWord, t));
        }
      }
    }
    // pass 4: WordWord edges for vocabulary pairs above the PMI threshold,
    // in sorted token order so regeneration never depends on hash order
    std::vector<std::pair<std::pair<std::string, std::string>, std::uint64_t>> pairs;
    pairs.reserve(counts_.pairs().size());
    for (const auto& [key, cnt] : counts_.pairs()) {
      const std::uint32_t a = static_cast<std::uint32_t>(key >> 32);
      const std::uint32_t b = static_cast<std::uint32_t>(key & 0xffffffffu);
      std::string ta = counts_.token(a), tb = counts_.token(b);
      if (tb < ta) std::swap(ta, tb);
      pairs.push_back({{std::move(ta), std::move(tb)}, cnt});
    }
    std::sort(pairs.begin(), pairs.end());
    for (const auto& [toks, cnt] : pairs) {
      if (!in_vocab(toks.first) || !in_vocab(toks.second)) continue;
      const double score =
          pmi_from_counts(cnt, counts_.occurrences(toks.first),
                          counts_.occurrences(toks.second), counts_.total_positions());
      if (score > cfg_.pmi_threshold) {
        const NodeId wa = g.add_node(NodeKind::kWord, toks.first);
        const NodeId wb = g.add_node(NodeKind::kWord, toks.second);
        g.add_edge(Relation::kWordWord, wa, wb, score);
      }
    }
    return g;
  }

  void save(std::ostream& os) const {
    BinaryWriter w(os);
    w.bytes("RGSN");
    w.u32(1);
    w.u32(cfg_.window);
    w.f64(cfg_.pmi_threshold);
    w.u32(cfg_.min_token_count);
    const auto stop = cfg_.stopwords.sorted();
    w.u32(static_cast<std::uint32_t>(stop.size()));
    for (const auto& s : stop) w.str(s);
    w.u64(records_.size());
    for (const auto& rec : records_) {
      if (const auto* pr = std::get_if<PullRequestEvent>(&rec.event)) {
        w.u8(0);
        w.str(pr->id);
        w.str(pr->repo_id);
        w.str(pr->author_id);
        write_list(w, pr->reviewer_ids);
        write_list(w, pr->commenter_ids);
        write_list(w, pr->file_paths);
        w.str(pr->title);
        w.str(pr->description);
        write_list(w, pr->linked_work_item_ids);
      } else {
        const auto& wi = std::get<WorkItemEvent>(rec.event);
        w.u8(1);
        w.str(wi.id);
        w.str(wi.title);
        w.str(wi.description);
        w.str(wi.parent_id);
      }
    }
    w.bytes("SEND");
  }

  static Corpus load(std::istream& is) {
    BinaryReader r(is);
    r.expect_bytes("RGSN", "corpus snapshot");
    if (r.u32() != 1) throw FormatError("corpus snapshot: unsupported version");
    IngestConfig cfg;
    cfg.window = r.u32();
    cfg.pmi_threshold = r.f64();
    cfg.min_token_count = r.u32();
    const std::uint32_t n_stop = r.u32();
    std::vector<std::string> stop;
    stop.reserve(n_stop);
    for (std::uint32_t i = 0; i < n_stop; ++i) stop.push_back(r.str());
    cfg.stopwords = StopwordList::from_words(stop);
    Corpus c(cfg);
    const std::uint64_t n = r.u64();
    std::vector<EventRecord> events;
    events.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::uint8_t type = r.u8();
      if (type == 0) {
        PullRequestEvent e;
        e.id = r.str();
        e.repo_id = r.str();
        e.author_id = r.str();
        e.reviewer_ids = read_list(r);
        e.commenter_ids = read_list(r);
        e.file_paths = read_list(r);
        e.title = r.str();
        e.description = r.str();
        e.linked_work_item_ids = read_list(r);
        events.push_back(std::move(e));
      } else if (type == 1) {
        WorkItemEvent e;
        e.id = r.str();
        e.title = r.str();
        e.description = r.str();
        e.parent_id = r.str();
        events.push_back(std::move(e));
      } else {
        throw FormatError("corpus snapshot: bad record type");
      }
    }
    r.expect_bytes("SEND", "corpus snapshot trailer");
    c.apply(events);
    return c;
  }

 private:
  struct Record {
    EventRecord event;
    // stopword-filtered token documents: {title, description}
    std::vector<std::vector<std::string>> docs;
  };

  static std::string key_of(int type, std::string_view id) {
    return std::string(type == 0 ? "p:" : "w:") + std::string(id);
  }

  void apply_one(const EventRecord& ev) {
    Record rec;
    int type;
    std::string id;
    if (const auto* pr = std::get_if<PullRequestEvent>(&ev)) {
      if (pr->id.empty()) throw ParseError("empty pull request id");
      type = 0;
      id = pr->id;
      PullRequestEvent norm = *pr;
      norm.reviewer_ids = detail::dedupe_keep_order(std::move(norm.reviewer_ids));
      norm.commenter_ids = detail::dedupe_keep_order(std::move(norm.commenter_ids));
      norm.file_paths = detail::dedupe_keep_order(std::move(norm.file_paths));
      norm.linked_work_item_ids =
          detail::dedupe_keep_order(std::move(norm.linked_work_item_ids));
      rec.docs.push_back(filter_stopwords(tokenize(norm.title), cfg_.stopwords));
      rec.docs.push_back(filter_stopwords(tokenize(norm.description), cfg_.stopwords));
      rec.event = std::move(norm);
    } else {
      const auto& wi = std::get<WorkItemEvent>(ev);
      if (wi.id.empty()) throw ParseError("empty work item id");
      type = 1;
      id = wi.id;
      rec.docs.push_back(filter_stopwords(tokenize(wi.title), cfg_.stopwords));
      rec.docs.push_back(filter_stopwords(tokenize(wi.description), cfg_.stopwords));
      rec.event = ev;
    }
    const std::string key = key_of(type, id);
    auto it = index_.find(key);
    if (it != index_.end()) {
      retract(records_[it->second]);
      integrate(rec);
      records_[it->second] = std::move(rec);
    } else {
      integrate(rec);
      index_.emplace(key, records_.size());
      records_.push_back(std::move(rec));
    }
  }

  // add a record's contribution to the text statistics
  void integrate(const Record& rec) {
    for (const auto& doc : rec.docs) counts_.add_document(doc);
    if (const auto* pr = std::get_if<PullRequestEvent>(&rec.event)) {
      for (const auto& f : pr->file_paths) acquire_file(f);
    }
  }

  // exact inverse of integrate
  void retract(const Record& rec) {
    for (const auto& doc : rec.docs) counts_.remove_document(doc);
    if (const auto* pr = std::get_if<PullRequestEvent>(&rec.event)) {
      for (const auto& f : pr->file_paths) release_file(f);
    }
  }

  void acquire_file(const std::string& path) {
    auto it = file_refs_.find(path);
    if (it != file_refs_.end()) {
      ++it->second;
      return;
    }
    file_refs_.emplace(path, 1);
    auto toks = tokenize_path(path);
    for (const auto& t : toks) ++file_token_counts_[t];
    file_tokens_.emplace(path, std::move(toks));
  }

  void release_file(const std::string& path) {
    auto it = file_refs_.find(path);
    if (it == file_refs_.end()) throw InvalidConfig("releasing an unknown file");
    if (--it->second > 0) return;
    file_refs_.erase(it);
    auto tit = file_tokens_.find(path);
    for (const auto& t : tit->second) {
      auto cit = file_token_counts_.find(t);
      if (--cit->second == 0) file_token_counts_.erase(cit);
    }
    file_tokens_.erase(tit);
  }

  void link_doc_words(Graph& g, NodeId prn, const std::vector<std::string>& doc) const {
    for (const auto& t : doc) {
      if (!in_vocab(t)) continue;
      g.add_edge(Relation::kPrWord, prn, g.add_node(NodeKind::kWord, t));
    }
  }

  static void write_list(BinaryWriter& w, const std::vector<std::string>& v) {
    w.u32(static_cast<std::uint32_t>(v.size()));
    for (const auto& s : v) w.str(s);
  }

  static std::vector<std::string> read_list(BinaryReader& r) {
    const std::uint32_t n = r.u32();
    std::vector<std::string> v;
    v.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) v.push_back(r.str());
    return v;
  }

  IngestConfig cfg_;
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> index_;  // "p:<id>"/"w:<id>" -> slot
  CooccurrenceCounts counts_;                           // over text documents
  std::unordered_map<std::string, std::uint32_t> file_refs_;
  std::unordered_map<std::string, std::vector<std::string>> file_tokens_;
  std::unordered_map<std::string, std::uint64_t> file_token_counts_;
};

inline Graph build_astg(std::span<const EventRecord> events, const IngestConfig& cfg = {}) {
  Corpus c(cfg);
  c.apply(events);
  return c.build_graph();
}

inline Graph apply_events(Corpus& corpus, std::span<const EventRecord> new_events) {
  corpus.apply(new_events);
  return corpus.build_graph();
}

// ---- combined artifact (corpus state + derived graph) ------------------------

inline void save_artifact(std::ostream& os, const Corpus& corpus, const Graph& graph) {
  BinaryWriter w(os);
  w.bytes("RGA1");
  corpus.save(os);
  graph.save(os);
}

inline std::pair<Corpus, Graph> load_artifact(std::istream& is) {
  BinaryReader r(is);
  r.expect_bytes("RGA1", "graph artifact");
  Corpus c = Corpus::load(is);
  Graph g = Graph::load(is);
  return {std::move(c), std::move(g)};
}

inline void save_artifact_file(const std::string& path, const Corpus& corpus,
                               const Graph& graph) {
  auto os = open_output(path);
  save_artifact(os, corpus, graph);
  if (!os) throw IoError("artifact write failed: " + path);
}

inline std::pair<Corpus, Graph> load_artifact_file(const std::string& path) {
  auto is = open_input(path);
  return load_artifact(is);
}

}  // namespace revgraph
