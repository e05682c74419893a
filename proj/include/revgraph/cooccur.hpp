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
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "revgraph/errors.hpp"

namespace revgraph {

// Sliding-window co-occurrence statistics over token documents.
//
// N counts token positions; o(x) counts positions holding x; o(x,y) counts
// position pairs (i, j) with i < j, j - i < window, inside one document and
// distinct tokens at i and j. Documents can also be removed, reversing their
// contribution exactly, which backs the incremental refresh path.
class CooccurrenceCounts {
 public:
  static constexpr std::uint32_t kNoToken = 0xffffffff;

  explicit CooccurrenceCounts(std::uint32_t window = 5) : window_(window) {
    if (window < 2) throw InvalidConfig("co-occurrence window must be >= 2");
  }

  std::uint32_t window() const { return window_; }
  std::uint64_t total_positions() const { return total_; }

  std::uint32_t find(std::string_view tok) const {
    auto it = ids_.find(std::string(tok));
    return it == ids_.end() ? kNoToken : it->second;
  }

  const std::string& token(std::uint32_t id) const { return tokens_[id]; }
  std::size_t token_count() const { return tokens_.size(); }

  std::uint64_t occurrences(std::string_view tok) const {
    const std::uint32_t id = find(tok);
    return id == kNoToken ? 0 : occ_[id];
  }

  std::uint64_t occurrences_by_id(std::uint32_t id) const { return occ_[id]; }

  std::uint64_t pair_count(std::string_view x, std::string_view y) const {
    const std::uint32_t a = find(x), b = find(y);
    if (a == kNoToken || b == kNoToken) return 0;
    return pair_count_by_id(a, b);
  }

  std::uint64_t pair_count_by_id(std::uint32_t a, std::uint32_t b) const {
    auto it = pairs_.find(pair_key(a, b));
    return it == pairs_.end() ? 0 : it->second;
  }

  void add_document(std::span<const std::string> doc) { apply_document(doc, +1); }

  // exact inverse of add_document for the same token sequence
  void remove_document(std::span<const std::string> doc) { apply_document(doc, -1); }

  // every pair with a nonzero count, as token-id keys (a < b packed)
  const std::unordered_map<std::uint64_t, std::uint64_t>& pairs() const { return pairs_; }

  static std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    const std::uint32_t lo = a < b ? a : b;
    const std::uint32_t hi = a < b ? b : a;
    return (static_cast<std::uint64_t>(lo) << 32) | hi;
  }

 private:
  std::uint32_t intern(const std::string& tok) {
    auto it = ids_.find(tok);
    if (it != ids_.end()) return it->second;
    const std::uint32_t id = static_cast<std::uint32_t>(tokens_.size());
    tokens_.push_back(tok);
    occ_.push_back(0);
    ids_.emplace(tok, id);
    return id;
  }

  void apply_document(std::span<const std::string> doc, int sign) {
    std::vector<std::uint32_t> ids;
    ids.reserve(doc.size());
    for (const auto& t : doc) ids.push_back(intern(t));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      bump(occ_[ids[i]], sign, "token occurrence");
      bump(total_, sign, "total positions");
      for (std::size_t j = i + 1; j < ids.size() && j - i < window_; ++j) {
        if (ids[i] == ids[j]) continue;
        const std::uint64_t key = pair_key(ids[i], ids[j]);
        auto it = pairs_.find(key);
        if (sign > 0) {
          if (it == pairs_.end())
            pairs_.emplace(key, 1);
          else
            ++it->second;
        } else {
          if (it == pairs_.end()) throw InvalidConfig("removing a document never added");
          if (--it->second == 0) pairs_.erase(it);
        }
      }
    }
  }

  static void bump(std::uint64_t& v, int sign, const char* what) {
    if (sign > 0) {
      ++v;
    } else {
      if (v == 0) throw InvalidConfig(std::string("count underflow: ") + what);
      --v;
    }
  }

  std::uint32_t window_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::uint64_t> occ_;
  std::unordered_map<std::uint64_t, std::uint64_t> pairs_;
  std::uint64_t total_ = 0;
};

inline CooccurrenceCounts count_cooccurrence(
    std::span<const std::vector<std::string>> documents, std::uint32_t window = 5) {
  CooccurrenceCounts c(window);
  for (const auto& doc : documents) c.add_document(doc);
  return c;
}

// PMI(x,y) = ln( o(x,y) * N / (o(x) * o(y)) ); -inf when the pair never
// co-occurs. Throws UnknownToken when either token has no occurrences.
inline double pmi(const CooccurrenceCounts& c, std::string_view x, std::string_view y) {
  const std::uint64_t ox = c.occurrences(x);
  const std::uint64_t oy = c.occurrences(y);
  if (ox == 0) throw UnknownToken("pmi: token has no occurrences: " + std::string(x));
  if (oy == 0) throw UnknownToken("pmi: token has no occurrences: " + std::string(y));
  const std::uint64_t oxy = c.pair_count(x, y);
  if (oxy == 0) return -std::numeric_limits<double>::infinity();
  return std::log(static_cast<double>(oxy) * static_cast<double>(c.total_positions()) /
                  (static_cast<double>(ox) * static_cast<double>(oy)));
}

inline double pmi_from_counts(std::uint64_t oxy, std::uint64_t ox, std::uint64_t oy,
                              std::uint64_t n) {
  if (oxy == 0) return -std::numeric_limits<double>::infinity();
  return std::log(static_cast<double>(oxy) * static_cast<double>(n) /
                  (static_cast<double>(ox) * static_cast<double>(oy)));
}

}  // namespace revgraph
