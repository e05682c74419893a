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
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "revgraph/errors.hpp"
#include "revgraph/stopwords_data.hpp"

namespace revgraph {

// Tokenization is ASCII-oriented: bytes outside [A-Za-z0-9] split tokens.
// Everything is lowercased and tokens shorter than 2 characters are dropped.

namespace detail {

inline bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

inline bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline char to_lower(char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }

inline void emit(std::string& cur, std::vector<std::string>& out) {
  if (cur.size() >= 2) out.push_back(cur);
  cur.clear();
}

}  // namespace detail

// plain text: lowercase, split on any non-alphanumeric byte
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (detail::is_alnum(c)) {
      cur.push_back(detail::to_lower(c));
    } else {
      detail::emit(cur, out);
    }
  }
  detail::emit(cur, out);
  return out;
}

// file paths: additionally split runs on camelCase boundaries before
// lowercasing. A boundary sits between lower|digit -> Upper and inside
// an uppercase run before its last letter when a lowercase follows
// ("AuthService" -> auth service, "HTTPServer" -> http server).
inline std::vector<std::string> tokenize_path(std::string_view path) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] { detail::emit(cur, out); };
  for (std::size_t i = 0; i < path.size(); ++i) {
    const char c = path[i];
    if (!detail::is_alnum(c)) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      const char prev = path[i - 1];
      const bool lower_to_upper =
          (detail::is_lower(prev) || detail::is_digit(prev)) && detail::is_upper(c);
      const bool upper_run_ends = detail::is_upper(prev) && detail::is_upper(c) &&
                                  i + 1 < path.size() && detail::is_lower(path[i + 1]);
      if (lower_to_upper || upper_run_ends) flush();
    }
    cur.push_back(detail::to_lower(c));
  }
  flush();
  return out;
}

class StopwordList {
 public:
  StopwordList() = default;

  static StopwordList from_stream(std::istream& is) {
    StopwordList list;
    std::string line;
    while (std::getline(is, line)) {
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      // trim ascii whitespace
      std::size_t b = 0, e = line.size();
      while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
      while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
      if (e > b) list.words_.insert(line.substr(b, e - b));
    }
    return list;
  }

  static StopwordList from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open stopword file: " + path);
    return from_stream(is);
  }

  static StopwordList from_words(const std::vector<std::string>& words) {
    StopwordList list;
    for (const auto& w : words) list.words_.insert(w);
    return list;
  }

  // the list shipped with the artifact, embedded at build time
  static const StopwordList& default_list() {
    static const StopwordList list = [] {
      std::istringstream is{std::string(kDefaultStopwordsText)};
      return from_stream(is);
    }();
    return list;
  }

  bool contains(std::string_view w) const { return words_.count(std::string(w)) != 0; }
  std::size_t size() const { return words_.size(); }

  // sorted copy, for canonical serialization
  std::vector<std::string> sorted() const {
    std::vector<std::string> v(words_.begin(), words_.end());
    std::sort(v.begin(), v.end());
    return v;
  }

 private:
  std::unordered_set<std::string> words_;
};

// order-preserving removal of blocked tokens
inline std::vector<std::string> filter_stopwords(std::vector<std::string> tokens,
                                                 const StopwordList& blocklist) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (auto& t : tokens)
    if (!blocklist.contains(t)) out.push_back(std::move(t));
  return out;
}

}  // namespace revgraph
