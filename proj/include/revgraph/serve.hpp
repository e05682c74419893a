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

#include <memory>
#include <string>

#include <httplib.h>

#include "revgraph/recommend.hpp"

namespace revgraph {

// HTTP front for the recommender. Artifacts are immutable while serving, so
// concurrent requests need no locking.
//
//   POST /recommend   {"pull_request": {...}, "k": 3}
//   GET  /version     {"model_version": "..."}
//
// The context must outlive the returned server.
inline std::unique_ptr<httplib::Server> make_server(const ServeContext& ctx) {
  auto srv = std::make_unique<httplib::Server>();
  srv->Post("/recommend", [&ctx](const httplib::Request& req, httplib::Response& res) {
    auto [status, body] = handle_recommend(ctx, req.body);
    res.status = status;
    res.set_content(body, "application/json");
  });
  srv->Get("/version", [&ctx](const httplib::Request&, httplib::Response& res) {
    nlohmann::json j;
    j["model_version"] = ctx.model_version;
    res.set_content(j.dump(), "application/json");
  });
  return srv;
}

// blocking; returns only when the server is stopped or listening fails
inline bool serve(const ServeContext& ctx, const std::string& host, int port) {
  auto srv = make_server(ctx);
  return srv->listen(host, port);
}

}  // namespace revgraph
