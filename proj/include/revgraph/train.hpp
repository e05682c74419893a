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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "revgraph/errors.hpp"
#include "revgraph/graph.hpp"
#include "revgraph/numerics.hpp"
#include "revgraph/rgcn.hpp"
#include "revgraph/rng.hpp"

namespace revgraph {

// Link-prediction training: every edge becomes a positive example, negatives
// are uniform kind-compatible absent pairs, and the objective is mean binary
// cross-entropy over logistic(dot) link scores.

struct TrainingTriplet {
  ModelRelation relation;
  NodeId u;
  NodeId v;
  double y;  // 1 = edge present, 0 = absent
};

enum class OptimizerKind : std::uint8_t { kSgd = 0, kAdam };

inline const char* to_string(OptimizerKind k) {
  return k == OptimizerKind::kSgd ? "sgd" : "adam";
}

inline OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw InvalidConfig("unknown optimizer: " + std::string(s));
}

struct TrainConfig {
  std::size_t negative_ratio = 1;  // negatives per positive
  std::size_t batch_size = 64;
  double learning_rate = 1e-2;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t max_epochs = 200;
  std::size_t patience = 5;       // epochs without improvement before stopping
  double min_delta = 1e-4;        // required improvement in best loss
  double heldout_fraction = 0.1;  // links withheld from propagation, scored after training
  double weight_decay = 0.0;      // L2 pull on all parameters; free per-node embeddings
                                  // will otherwise memorize the negative set on small graphs
  std::uint64_t seed = 1;

  void validate() const {
    if (negative_ratio == 0) throw InvalidConfig("negative_ratio must be positive");
    if (batch_size == 0) throw InvalidConfig("batch_size must be positive");
    if (learning_rate <= 0.0) throw InvalidConfig("learning_rate must be positive");
    if (max_epochs == 0) throw InvalidConfig("max_epochs must be positive");
    if (patience == 0) throw InvalidConfig("patience must be >= 1");
    if (min_delta < 0.0) throw InvalidConfig("min_delta must be >= 0");
    if (heldout_fraction < 0.0 || heldout_fraction >= 1.0)
      throw InvalidConfig("heldout_fraction must be in [0, 1)");
    if (weight_decay < 0.0) throw InvalidConfig("weight_decay must be >= 0");
    if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
      throw InvalidConfig("adam betas must be in (0, 1)");
  }
};

struct TrainReport {
  std::vector<double> epoch_loss;  // one entry per epoch actually run
  std::size_t stopped_epoch = 0;   // == epoch_loss.size()
  std::size_t best_epoch = 0;
  double best_loss = std::numeric_limits<double>::quiet_NaN();
  double heldout_loss = std::numeric_limits<double>::quiet_NaN();
  double heldout_auc = std::numeric_limits<double>::quiet_NaN();
  double wall_clock_sec = 0.0;
  std::size_t n_train_triplets = 0;
  std::size_t n_heldout_triplets = 0;
};

// ---- dataset -----------------------------------------------------------------

// One positive per edge of every selected relation, negative_ratio negatives
// per positive: (u, v') with v' of the relation's second kind, the pair
// absent, and never the same v' twice for one (u, relation).
inline std::vector<TrainingTriplet> make_dataset(const ModelGraph& mg,
                                                 std::size_t negative_ratio,
                                                 std::uint64_t seed) {
  const Graph& g = mg.graph();
  // candidate pools per kind, in identity-rank order so the draw sequence
  // does not depend on insertion order
  std::unordered_map<int, std::vector<NodeId>> pools;
  auto pool = [&](NodeKind k) -> const std::vector<NodeId>& {
    auto [it, fresh] = pools.try_emplace(static_cast<int>(k));
    if (fresh) {
      it->second = g.nodes_of_kind(k);
      std::sort(it->second.begin(), it->second.end(),
                [&mg](NodeId a, NodeId b) { return mg.rank(a) < mg.rank(b); });
    }
    return it->second;
  };

  Rng rng(derive_seed(seed, "dataset"));
  std::vector<TrainingTriplet> out;
  // per (u, relation): negatives already emitted
  std::unordered_map<std::uint64_t, std::unordered_set<NodeId>> used;

  std::size_t n_pos = 0;
  for (ModelRelation r : mg.relations()) {
    const NodeKind vkind = model_relation_kinds(r).second;
    for (auto [u, v] : mg.edges(r)) {
      ++n_pos;
      out.push_back({r, u, v, 1.0});
      const auto& cands = pool(vkind);
      auto& taken =
          used[(static_cast<std::uint64_t>(u) << 8) | static_cast<std::uint64_t>(r)];
      for (std::size_t k = 0; k < negative_ratio; ++k) {
        NodeId pick = kNoNode;
        for (int attempt = 0; attempt < 40 && pick == kNoNode; ++attempt) {
          const NodeId c = cands[rng_index(rng, cands.size())];
          if (c == u || mg.has_edge(r, u, c) || taken.count(c)) continue;
          pick = c;
        }
        if (pick == kNoNode) {
          // enumerate what is left; uniform pick keeps the distribution honest
          std::vector<NodeId> rest;
          for (NodeId c : cands)
            if (c != u && !mg.has_edge(r, u, c) && !taken.count(c)) rest.push_back(c);
          if (rest.empty())
            throw NegativeSamplingExhausted(
                std::string("no absent ") + to_string(r) + " pair left for node " +
                g.external_id(u));
          pick = rest[rng_index(rng, rest.size())];
        }
        taken.insert(pick);
        out.push_back({r, u, pick, 0.0});
      }
    }
  }
  if (n_pos == 0)
    throw EmptyRelation("no edges in the selected relations; nothing to train on");
  return out;
}

// ---- loss and ranking quality -------------------------------------------------

// reporting-form mean binary cross-entropy over cached embeddings,
// probabilities clamped away from 0 and 1
inline double loss(std::span<const TrainingTriplet> batch, const EmbeddingCache& cache) {
  if (batch.empty()) throw InvalidConfig("loss: empty batch");
  double sum = 0.0;
  for (const TrainingTriplet& t : batch) {
    if (t.u >= cache.z.rows || t.v >= cache.z.rows)
      throw MissingEmbedding("loss: triplet endpoint has no embedding");
    double p = link_prob(cache.z.row(t.u), cache.z.row(t.v));
    p = std::min(1.0 - 1e-12, std::max(1e-12, p));
    sum -= t.y * std::log(p) + (1.0 - t.y) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(batch.size());
}

// Mann-Whitney AUC of positive-vs-negative link scores, ties averaged
inline double link_auc(std::span<const TrainingTriplet> triplets,
                       const EmbeddingCache& cache) {
  std::vector<std::pair<double, double>> scored;  // (score, y)
  for (const TrainingTriplet& t : triplets) {
    if (t.u >= cache.z.rows || t.v >= cache.z.rows)
      throw MissingEmbedding("link_auc: triplet endpoint has no embedding");
    scored.push_back({dot(cache.z.row(t.u), cache.z.row(t.v)), t.y});
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double pos = 0.0, neg = 0.0, rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based, averaged
    for (std::size_t k = i; k < j; ++k) {
      if (scored[k].second > 0.5) {
        pos += 1.0;
        rank_sum_pos += avg_rank;
      } else {
        neg += 1.0;
      }
    }
    i = j;
  }
  if (pos == 0.0 || neg == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (rank_sum_pos - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

// ---- held-out split ------------------------------------------------------------

// Random split of the dataset. Positives and negatives are partitioned
// separately so both sides keep roughly the configured label balance; the
// caller removes the held-out positive edges from the propagation graph.
inline std::pair<std::vector<TrainingTriplet>, std::vector<TrainingTriplet>>
split_heldout(const std::vector<TrainingTriplet>& dataset, double fraction,
              std::uint64_t seed) {
  if (fraction <= 0.0 || fraction >= 1.0)
    throw InvalidConfig("heldout fraction must be in (0, 1)");
  Rng rng(derive_seed(seed, "split"));
  std::vector<std::size_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    (dataset[i].y > 0.5 ? pos_idx : neg_idx).push_back(i);
  rng_shuffle(pos_idx, rng);
  rng_shuffle(neg_idx, rng);
  const std::size_t held_pos =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pos_idx.size())));
  const std::size_t held_neg =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(neg_idx.size())));
  std::vector<bool> held(dataset.size(), false);
  for (std::size_t i = 0; i < held_pos; ++i) held[pos_idx[i]] = true;
  for (std::size_t i = 0; i < held_neg; ++i) held[neg_idx[i]] = true;
  std::pair<std::vector<TrainingTriplet>, std::vector<TrainingTriplet>> out;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    (held[i] ? out.second : out.first).push_back(dataset[i]);
  return out;
}

// ---- optimizer ------------------------------------------------------------------

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t n_params) : cfg_(cfg) {
    if (cfg.optimizer == OptimizerKind::kAdam) {
      m_.assign(n_params, 0.0);
      v_.assign(n_params, 0.0);
    }
  }

  void step(std::span<double> theta, std::span<const double> grad) {
    if (theta.size() != grad.size())
      throw DimensionMismatch("optimizer step: theta/grad sizes differ");
    if (cfg_.optimizer == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < theta.size(); ++i)
        theta[i] -= cfg_.learning_rate * grad[i];
      return;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * grad[i];
      v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * grad[i] * grad[i];
      const double mh = m_[i] / c1;
      const double vh = v_[i] / c2;
      theta[i] -= cfg_.learning_rate * mh / (std::sqrt(vh) + cfg_.adam_eps);
    }
  }

 private:
  TrainConfig cfg_;
  Vec m_, v_;
  std::uint64_t t_ = 0;
};

// ---- training loop ---------------------------------------------------------------

struct TrainResult {
  ModelParams params;  // snapshot at the best-loss epoch
  TrainReport report;
  std::vector<TrainingTriplet> heldout;  // empty when heldout_fraction == 0
};

using ProgressFn = std::function<void(std::size_t epoch, double loss, double elapsed_sec)>;

// mini-batch loop over an existing parameter vector; mutates params in place
// and returns the best-epoch snapshot inside the result
inline TrainResult train_from(ModelParams params, const ModelGraph& full_graph,
                              const TrainConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&t_start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  std::vector<TrainingTriplet> dataset =
      make_dataset(full_graph, cfg.negative_ratio, cfg.seed);

  TrainResult result;
  std::vector<TrainingTriplet> train_set;
  ModelGraph graph = full_graph;
  if (cfg.heldout_fraction > 0.0) {
    auto [tr, held] = split_heldout(dataset, cfg.heldout_fraction, cfg.seed);
    train_set = std::move(tr);
    result.heldout = std::move(held);
    std::vector<std::tuple<ModelRelation, NodeId, NodeId>> removed;
    for (const TrainingTriplet& t : result.heldout)
      if (t.y > 0.5) removed.push_back({t.relation, t.u, t.v});
    graph = full_graph.without_edges(removed);
  } else {
    train_set = std::move(dataset);
  }
  if (train_set.empty()) throw EmptyRelation("training set is empty after the split");

  TrainReport& report = result.report;
  report.n_train_triplets = train_set.size();
  report.n_heldout_triplets = result.heldout.size();

  Optimizer opt(cfg, params.data.size());
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Vec grad(params.data.size(), 0.0);
  Tape tape;

  // The checkpoint follows held-out loss when a split exists: training loss
  // keeps falling while the model memorizes its fixed negative set, so the
  // train-loss minimum is the worst place to stop on small graphs. Early
  // stopping itself still watches the training loss plateau.
  const bool monitor_heldout = !result.heldout.empty();
  ModelParams best = params;
  double best_monitored = std::numeric_limits<double>::infinity();
  double best_train = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t bad_epochs = 0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng_shuffle(order, shuffle_rng);

    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      tape.reset();
      BatchForward bf(tape, graph, params);
      std::vector<Tape::Var> losses;
      losses.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const TrainingTriplet& t = train_set[order[i]];
        losses.push_back(tape.bce_with_logit(tape.dot(bf.z(t.u), bf.z(t.v)), t.y));
      }
      const std::vector<double> avg(losses.size(), 1.0 / static_cast<double>(losses.size()));
      const Tape::Var total = tape.weighted_sum(losses, avg);
      const double batch_loss = tape.scalar(total);
      if (!std::isfinite(batch_loss))
        throw NonFiniteLoss("epoch " + std::to_string(epoch) + ": batch loss is " +
                            std::to_string(batch_loss) +
                            "; try a smaller learning rate");
      epoch_sum += batch_loss * static_cast<double>(end - start);
      tape.backward(total);
      std::fill(grad.begin(), grad.end(), 0.0);
      bf.pull_gradients(grad);
      if (cfg.weight_decay > 0.0)
        for (std::size_t i = 0; i < grad.size(); ++i)
          grad[i] += cfg.weight_decay * params.data[i];
      opt.step(params.data, grad);
    }

    const double epoch_loss = epoch_sum / static_cast<double>(train_set.size());
    report.epoch_loss.push_back(epoch_loss);
    if (progress) progress(epoch, epoch_loss, elapsed());

    double monitored = epoch_loss;
    if (monitor_heldout) {
      const EmbeddingCache cache = embed_all(graph, params);
      monitored = loss(result.heldout, cache);
    }
    if (monitored < best_monitored) {
      best_monitored = monitored;
      best_epoch = epoch;
      best = params;
    }

    if (epoch_loss < best_train - cfg.min_delta) {
      best_train = epoch_loss;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= cfg.patience) break;
    }
  }

  report.stopped_epoch = report.epoch_loss.size();
  report.best_epoch = best_epoch;
  report.best_loss = best_monitored;

  if (!result.heldout.empty()) {
    const EmbeddingCache cache = embed_all(graph, best);
    report.heldout_loss = loss(result.heldout, cache);
    report.heldout_auc = link_auc(result.heldout, cache);
  }
  report.wall_clock_sec = elapsed();
  result.params = std::move(best);
  return result;
}

inline TrainResult train(const Graph& g, const ModelConfig& mcfg, const TrainConfig& cfg,
                         const ProgressFn& progress = {}) {
  mcfg.validate();
  cfg.validate();
  const ModelGraph mg(g, mcfg.relations, mcfg.include_commenters);
  ModelParams params =
      ModelParams::init(mcfg, g.node_count(), derive_seed(cfg.seed, "init"));
  return train_from(std::move(params), mg, cfg, progress);
}

}  // namespace revgraph
