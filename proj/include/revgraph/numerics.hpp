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
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "revgraph/errors.hpp"

namespace revgraph {

// Minimal dense 64-bit kernel. No BLAS: the graphs are desk scale and the
// sequential loops keep every reduction order fixed, which the determinism
// contract cares about more than speed.

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

  double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  std::span<double> row(std::size_t i) { return {a.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {a.data() + i * cols, cols}; }
};

// non-owning matrix view, lets model parameters live in one flat buffer
struct MatRef {
  const double* p = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  MatRef() = default;
  MatRef(const double* p_, std::size_t r, std::size_t c) : p(p_), rows(r), cols(c) {}
  MatRef(const Matrix& m) : p(m.a.data()), rows(m.rows), cols(m.cols) {}  // NOLINT: implicit on purpose

  double at(std::size_t i, std::size_t j) const { return p[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {p + i * cols, cols}; }
};

using Vec = std::vector<double>;

inline double logistic(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: operand sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Vec relu(std::span<const double> x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

inline Vec matvec(MatRef w, std::span<const double> x) {
  if (w.cols != x.size()) throw DimensionMismatch("matvec: matrix cols != vector size");
  Vec y(w.rows, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double* r = w.p + i * w.cols;
    double s = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

// alpha*x + y as a fresh vector
inline Vec axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy: operand sizes differ");
  Vec out(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

// Reverse-mode tape over vector-valued variables. One tape records one
// forward pass; backward() replays it in exact reverse order and accumulates
// adjoints additively. Values and adjoints live in flat arenas so a tape can
// be reset and reused across mini-batches without reallocating.
class Tape {
 public:
  using Var = std::uint32_t;
  static constexpr Var kNoVar = 0xffffffff;

  // leaf vector (parameter or constant input)
  Var input(std::span<const double> v) {
    Var out = new_var(v.size(), 0, 0);
    std::copy(v.begin(), v.end(), val(out).begin());
    push(OpKind::kLeaf, out);
    return out;
  }

  // leaf matrix, stored flattened with its shape
  Var input_matrix(MatRef m) {
    Var out = new_var(m.rows * m.cols, m.rows, m.cols);
    std::copy(m.p, m.p + m.rows * m.cols, val(out).begin());
    push(OpKind::kLeaf, out);
    return out;
  }

  Var matvec(Var w, Var x) {
    const std::size_t rows = meta_[w].rows, cols = meta_[w].cols;
    if (rows == 0) throw DimensionMismatch("tape matvec: first operand is not a matrix");
    if (cols != size(x)) throw DimensionMismatch("tape matvec: matrix cols != vector size");
    Var out = new_var(rows, 0, 0);
    auto wv = val(w);
    auto xv = val(x);
    auto yv = val(out);
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) s += wv[i * cols + j] * xv[j];
      yv[i] = s;
    }
    push(OpKind::kMatVec, out, w, x);
    return out;
  }

  // sum_i coef[i] * xs[i], all vectors of one size
  Var weighted_sum(std::span<const Var> xs, std::span<const double> coefs) {
    if (xs.empty() || xs.size() != coefs.size())
      throw DimensionMismatch("tape weighted_sum: empty or mismatched term list");
    const std::size_t n = size(xs[0]);
    for (Var x : xs)
      if (size(x) != n) throw DimensionMismatch("tape weighted_sum: term sizes differ");
    Var out = new_var(n, 0, 0);
    auto yv = val(out);
    for (std::size_t t = 0; t < xs.size(); ++t) {
      auto xv = val(xs[t]);
      const double c = coefs[t];
      for (std::size_t i = 0; i < n; ++i) yv[i] += c * xv[i];
    }
    OpRec& op = push(OpKind::kWeightedSum, out);
    op.arg_off = static_cast<std::uint32_t>(terms_.size());
    op.arg_len = static_cast<std::uint32_t>(xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) terms_.push_back({xs[t], coefs[t]});
    return out;
  }

  Var add(Var a, Var b) {
    const Var ab[2] = {a, b};
    const double cs[2] = {1.0, 1.0};
    return weighted_sum(ab, cs);
  }

  Var relu(Var x) {
    Var out = new_var(size(x), 0, 0);
    auto xv = val(x);
    auto yv = val(out);
    for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    push(OpKind::kRelu, out, x);
    return out;
  }

  // elementwise logistic
  Var logistic(Var x) {
    Var out = new_var(size(x), 0, 0);
    auto xv = val(x);
    auto yv = val(out);
    for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = revgraph::logistic(xv[i]);
    push(OpKind::kLogistic, out, x);
    return out;
  }

  Var dot(Var a, Var b) {
    if (size(a) != size(b)) throw DimensionMismatch("tape dot: operand sizes differ");
    Var out = new_var(1, 0, 0);
    auto av = val(a);
    auto bv = val(b);
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    val(out)[0] = s;
    push(OpKind::kDot, out, a, b);
    return out;
  }

  // binary cross entropy of logistic(s) against label y, in the numerically
  // stable logits form: max(s,0) - s*y + ln(1 + e^(-|s|))
  Var bce_with_logit(Var s, double y) {
    if (size(s) != 1) throw DimensionMismatch("tape bce_with_logit: scalar input expected");
    Var out = new_var(1, 0, 0);
    const double sv = val(s)[0];
    val(out)[0] = std::max(sv, 0.0) - sv * y + std::log1p(std::exp(-std::abs(sv)));
    OpRec& op = push(OpKind::kBceLogit, out, s);
    op.label = y;
    return out;
  }

  std::span<const double> value(Var v) const {
    return {values_.data() + meta_[v].off, meta_[v].len};
  }

  double scalar(Var v) const {
    if (meta_[v].len != 1) throw DimensionMismatch("tape scalar: variable is not scalar");
    return values_[meta_[v].off];
  }

  // seeds d(loss)/d(loss)=1 and propagates through all recorded ops
  void backward(Var loss) {
    if (meta_[loss].len != 1) throw DimensionMismatch("tape backward: loss must be scalar");
    adjoints_.assign(values_.size(), 0.0);
    touched_.assign(meta_.size(), 0);
    adj(loss)[0] = 1.0;
    touched_[loss] = 1;
    for (std::size_t k = ops_.size(); k-- > 0;) {
      const OpRec& op = ops_[k];
      if (!touched_[op.out]) continue;
      auto g = adj(op.out);
      switch (op.kind) {
        case OpKind::kLeaf:
          break;
        case OpKind::kMatVec: {
          const std::size_t rows = meta_[op.a].rows, cols = meta_[op.a].cols;
          auto wv = val_c(op.a);
          auto xv = val_c(op.b);
          auto gw = adj(op.a);
          auto gx = adj(op.b);
          touch(op.a);
          touch(op.b);
          for (std::size_t i = 0; i < rows; ++i) {
            const double gi = g[i];
            if (gi == 0.0) continue;
            for (std::size_t j = 0; j < cols; ++j) {
              gw[i * cols + j] += gi * xv[j];
              gx[j] += wv[i * cols + j] * gi;
            }
          }
          break;
        }
        case OpKind::kWeightedSum: {
          for (std::uint32_t t = 0; t < op.arg_len; ++t) {
            const Term& term = terms_[op.arg_off + t];
            auto gx = adj(term.var);
            touch(term.var);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += term.coef * g[i];
          }
          break;
        }
        case OpKind::kRelu: {
          auto xv = val_c(op.a);
          auto gx = adj(op.a);
          touch(op.a);
          for (std::size_t i = 0; i < g.size(); ++i)
            if (xv[i] > 0.0) gx[i] += g[i];  // subgradient at 0 is 0
          break;
        }
        case OpKind::kLogistic: {
          auto yv = val_c(op.out);
          auto gx = adj(op.a);
          touch(op.a);
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * yv[i] * (1.0 - yv[i]);
          break;
        }
        case OpKind::kDot: {
          const double g0 = g[0];
          auto av = val_c(op.a);
          auto bv = val_c(op.b);
          auto ga = adj(op.a);
          auto gb = adj(op.b);
          touch(op.a);
          touch(op.b);
          for (std::size_t i = 0; i < av.size(); ++i) {
            ga[i] += g0 * bv[i];
            gb[i] += g0 * av[i];
          }
          break;
        }
        case OpKind::kBceLogit: {
          const double s = val_c(op.a)[0];
          adj(op.a)[0] += g[0] * (revgraph::logistic(s) - op.label);
          touch(op.a);
          break;
        }
      }
    }
  }

  // adjoint of a variable after backward(); zeros if the loss never saw it
  std::span<const double> adjoint(Var v) const {
    return {adjoints_.data() + meta_[v].off, meta_[v].len};
  }

  void reset() {
    meta_.clear();
    ops_.clear();
    terms_.clear();
    values_.clear();
    adjoints_.clear();
    touched_.clear();
  }

  std::size_t size(Var v) const { return meta_[v].len; }
  std::size_t op_count() const { return ops_.size(); }

 private:
  enum class OpKind : std::uint8_t {
    kLeaf,
    kMatVec,
    kWeightedSum,
    kRelu,
    kLogistic,
    kDot,
    kBceLogit
  };

  struct VarMeta {
    std::size_t off = 0;
    std::size_t len = 0;
    std::size_t rows = 0;  // nonzero only for matrix leaves
    std::size_t cols = 0;
  };

  struct OpRec {
    OpKind kind;
    Var out;
    Var a = kNoVar;
    Var b = kNoVar;
    std::uint32_t arg_off = 0;
    std::uint32_t arg_len = 0;
    double label = 0.0;
  };

  struct Term {
    Var var;
    double coef;
  };

  Var new_var(std::size_t len, std::size_t rows, std::size_t cols) {
    VarMeta m;
    m.off = values_.size();
    m.len = len;
    m.rows = rows;
    m.cols = cols;
    meta_.push_back(m);
    values_.resize(values_.size() + len, 0.0);
    return static_cast<Var>(meta_.size() - 1);
  }

  OpRec& push(OpKind kind, Var out, Var a = kNoVar, Var b = kNoVar) {
    ops_.push_back(OpRec{kind, out, a, b, 0, 0, 0.0});
    return ops_.back();
  }

  std::span<double> val(Var v) { return {values_.data() + meta_[v].off, meta_[v].len}; }
  std::span<const double> val_c(Var v) const {
    return {values_.data() + meta_[v].off, meta_[v].len};
  }
  std::span<double> adj(Var v) { return {adjoints_.data() + meta_[v].off, meta_[v].len}; }
  void touch(Var v) { touched_[v] = 1; }

  std::vector<VarMeta> meta_;
  std::vector<OpRec> ops_;
  std::vector<Term> terms_;
  std::vector<double> values_;
  std::vector<double> adjoints_;
  std::vector<std::uint8_t> touched_;
};

// f evaluates the objective at theta; when grad_out is non-null it must also
// fill the analytic gradient (same length as theta).
using GradFn = std::function<double(std::span<const double>, Vec*)>;

// Central finite differences against the tape gradient. Returns the max
// componentwise relative error with denominator max(|analytic|, |numeric|, 1e-8).
inline double grad_check(const GradFn& f, Vec theta, double eps = 1e-5) {
  Vec analytic;
  f(theta, &analytic);
  if (analytic.size() != theta.size())
    throw DimensionMismatch("grad_check: gradient length != parameter length");
  double worst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + eps;
    const double fp = f(theta, nullptr);
    theta[i] = saved - eps;
    const double fm = f(theta, nullptr);
    theta[i] = saved;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace revgraph
