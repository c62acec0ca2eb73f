#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vf/error.hpp"
#include "vf/graph.hpp"
#include "vf/matrix.hpp"

namespace vf {

// Each op caches what its backward pass needs during forward. Backward
// accumulates into the parameter gradients (never overwrites) and returns
// the gradient with respect to the op input.

struct LinearOp {
  ParameterBlock W;  // d_in x d_out
  ParameterBlock b;  // 1 x d_out

  LinearOp() = default;
  LinearOp(const std::string& name, int d_in, int d_out)
      : W(name + ".W", d_in, d_out), b(name + ".b", 1, d_out) {}

  void init(Rng& rng) { W.glorot_init(rng); /* bias stays zero */ }

  Matrix forward(const Matrix& x) {
    if (x.cols != W.value.rows)
      throw ValidationError("linear '" + W.name + "': input width " +
                            std::to_string(x.cols) + " != " +
                            std::to_string(W.value.rows));
    x_cache = x;
    Matrix y = matmul(x, W.value);
    for (int i = 0; i < y.rows; ++i)
      for (int j = 0; j < y.cols; ++j) y(i, j) += b.value(0, j);
    return y;
  }

  Matrix backward(const Matrix& gy) {
    if (gy.rows != x_cache.rows || gy.cols != W.value.cols)
      throw ValidationError("linear '" + W.name + "': bad upstream gradient shape");
    Matrix gw = matmul_at(x_cache, gy);
    for (std::size_t i = 0; i < gw.size(); ++i) W.grad.data[i] += gw.data[i];
    for (int i = 0; i < gy.rows; ++i)
      for (int j = 0; j < gy.cols; ++j) b.grad(0, j) += gy(i, j);
    return matmul_bt(gy, W.value);
  }

  std::size_t param_count() const { return W.count() + b.count(); }

  Matrix x_cache;
};

// Elementwise max(x, slope*x), slope in [0,1). slope=0 is plain ReLU.
struct LeakyReluOp {
  double slope = 0.2;

  explicit LeakyReluOp(double s = 0.2) : slope(s) {
    if (s < 0.0 || s >= 1.0)
      throw ValidationError("leaky_relu: slope must be in [0,1)");
  }

  Matrix forward(const Matrix& x) {
    x_cache = x;
    Matrix y = x;
    for (double& v : y.data)
      if (v < 0.0) v *= slope;
    return y;
  }

  Matrix backward(const Matrix& gy) {
    Matrix gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (x_cache.data[i] < 0.0) gx.data[i] *= slope;
    return gx;
  }

  Matrix x_cache;
};

// Columnwise max over all rows -> 1 x d, remembering the winning row per
// column. Ties go to the smallest row index; backward routes the gradient
// only to the winners.
struct MaxPoolRowsOp {
  Matrix forward(const Matrix& x) {
    if (x.rows < 1) throw ValidationError("max_pool_rows: empty input");
    in_rows = x.rows;
    argmax.assign(x.cols, 0);
    Matrix y(1, x.cols);
    for (int j = 0; j < x.cols; ++j) y(0, j) = x(0, j);
    for (int i = 1; i < x.rows; ++i)
      for (int j = 0; j < x.cols; ++j)
        if (x(i, j) > y(0, j)) {
          y(0, j) = x(i, j);
          argmax[j] = i;
        }
    return y;
  }

  Matrix backward(const Matrix& gy) {
    Matrix gx(in_rows, gy.cols);
    for (int j = 0; j < gy.cols; ++j) gx(argmax[j], j) = gy(0, j);
    return gx;
  }

  int in_rows = 0;
  std::vector<int> argmax;  // winning row per column
};

enum class PoolMode { Max, Mean };

inline std::string to_string(PoolMode p) {
  return p == PoolMode::Max ? "max" : "mean";
}

// Pools per-edge features into per-node features: row i of the output is
// the pool over the feature rows of i's out-edges. Edge rows must follow
// the graph's edge order. Every node needs out-degree >= 1.
struct NeighborPoolOp {
  PoolMode mode = PoolMode::Max;

  explicit NeighborPoolOp(PoolMode m = PoolMode::Max) : mode(m) {}

  Matrix forward(const Matrix& edge_feats, const FiberGraph& graph) {
    if (edge_feats.rows != graph.edge_count())
      throw ValidationError("neighbor pool: edge feature rows != edge count");
    offsets = graph.out_offsets();
    edge_rows = edge_feats.rows;
    const int n = graph.n;
    const int d = edge_feats.cols;
    Matrix y(n, d);
    if (mode == PoolMode::Max) argmax.assign(std::size_t(n) * d, -1);
    for (int i = 0; i < n; ++i) {
      const int lo = offsets[i], hi = offsets[i + 1];
      if (lo == hi)
        throw ValidationError("neighbor pool: node " + std::to_string(i) +
                              " has out-degree 0");
      if (mode == PoolMode::Max) {
        for (int j = 0; j < d; ++j) {
          double best = edge_feats(lo, j);
          int best_e = lo;
          for (int e = lo + 1; e < hi; ++e)
            if (edge_feats(e, j) > best) {
              best = edge_feats(e, j);
              best_e = e;
            }
          y(i, j) = best;
          argmax[std::size_t(i) * d + j] = best_e;
        }
      } else {
        const double inv = 1.0 / (hi - lo);
        for (int e = lo; e < hi; ++e)
          for (int j = 0; j < d; ++j) y(i, j) += edge_feats(e, j);
        for (int j = 0; j < d; ++j) y(i, j) *= inv;
      }
    }
    return y;
  }

  Matrix backward(const Matrix& gy) {
    const int n = static_cast<int>(offsets.size()) - 1;
    const int d = gy.cols;
    Matrix ge(edge_rows, d);
    for (int i = 0; i < n; ++i) {
      const int lo = offsets[i], hi = offsets[i + 1];
      if (mode == PoolMode::Max) {
        for (int j = 0; j < d; ++j)
          ge(argmax[std::size_t(i) * d + j], j) += gy(i, j);
      } else {
        const double inv = 1.0 / (hi - lo);
        for (int e = lo; e < hi; ++e)
          for (int j = 0; j < d; ++j) ge(e, j) += gy(i, j) * inv;
      }
    }
    return ge;
  }

  std::vector<int> offsets;
  std::vector<int> argmax;
  int edge_rows = 0;
};

// Mean over rows of -log softmax(logits)[label], stabilized by row-max
// subtraction. backward() returns the gradient on the logits.
struct SoftmaxCrossEntropyOp {
  double forward(const Matrix& logits, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != logits.rows)
      throw ValidationError("cross-entropy: label count != logit rows");
    probs = logits;
    labels_cache = labels;
    double loss = 0.0;
    for (int i = 0; i < logits.rows; ++i) {
      if (labels[i] < 0 || labels[i] >= logits.cols)
        throw ValidationError("cross-entropy: label " +
                              std::to_string(labels[i]) + " out of range");
      double mx = logits(i, 0);
      for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, logits(i, j));
      double z = 0.0;
      for (int j = 0; j < logits.cols; ++j) {
        probs(i, j) = std::exp(logits(i, j) - mx);
        z += probs(i, j);
      }
      for (int j = 0; j < logits.cols; ++j) probs(i, j) /= z;
      loss -= std::log(probs(i, labels[i]));
    }
    return loss / logits.rows;
  }

  Matrix backward() const {
    Matrix g = probs;
    const double inv = 1.0 / probs.rows;
    for (int i = 0; i < probs.rows; ++i) {
      g(i, labels_cache[i]) -= 1.0;
      for (int j = 0; j < probs.cols; ++j) g(i, j) *= inv;
    }
    return g;
  }

  Matrix probs;
  std::vector<int> labels_cache;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;  // as printed in the training recipe; flag, not 0.999
  double eps = 1e-8;
};

// Standard Adam step with bias correction; zeroes gradients afterwards.
inline void adam_step(const std::vector<ParameterBlock*>& params, double lr,
                      long t, const AdamConfig& cfg = {}) {
  if (t < 1) throw ValidationError("adam_step: step index must be >= 1");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (ParameterBlock* p : params) {
    for (std::size_t i = 0; i < p->count(); ++i) {
      const double g = p->grad.data[i];
      if (!std::isfinite(g))
        throw ValidationError("adam_step: non-finite gradient in '" + p->name +
                              "'");
      p->m1.data[i] = cfg.beta1 * p->m1.data[i] + (1.0 - cfg.beta1) * g;
      p->m2.data[i] = cfg.beta2 * p->m2.data[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = p->m1.data[i] / bc1;
      const double vhat = p->m2.data[i] / bc2;
      p->value.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    p->grad.set_zero();
  }
}

struct LrSchedule {
  double base = 1e-3;
  double factor = 0.7;
  int interval_epochs = 90;
  double floor = 5e-5;

  double at(int epoch) const {
    if (epoch < 0) throw ValidationError("lr_schedule: negative epoch");
    const double lr = base * std::pow(factor, epoch / interval_epochs);
    return std::max(floor, lr);
  }
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Central finite differences of a scalar function against a supplied
// analytic gradient. Relative error uses max(1,|a|,|n|) in the denominator
// so near-zero gradients are compared absolutely. Piecewise-linear
// activations put kinks arbitrarily close to the evaluation point; when the
// default step straddles one, the central difference mixes two linear pieces
// and is not an estimate of either one-sided derivative, so coordinates with
// a large mismatch are re-measured with a 100x smaller step that stays on
// the local smooth branch.
inline GradCheckReport gradient_check(
    const std::function<double(const Matrix&)>& f, const Matrix& x,
    const Matrix& analytic, double h = 1e-5) {
  if (!x.same_shape(analytic))
    throw ValidationError("gradient_check: shape mismatch");
  GradCheckReport rep;
  Matrix xp = x;
  auto central = [&](std::size_t i, double step) {
    const double orig = xp.data[i];
    xp.data[i] = orig + step;
    const double fp = f(xp);
    xp.data[i] = orig - step;
    const double fm = f(xp);
    xp.data[i] = orig;
    return (fp - fm) / (2.0 * step);
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    double num = central(i, h);
    const double ana = analytic.data[i];
    auto rel_of = [&](double n) {
      return std::abs(ana - n) / std::max({1.0, std::abs(ana), std::abs(n)});
    };
    double rel = rel_of(num);
    if (rel > 1e-6) {
      const double num2 = central(i, h / 100.0);
      const double rel2 = rel_of(num2);
      if (rel2 < rel) {
        rel = rel2;
        num = num2;
      }
    }
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_index = i;
      rep.analytic_at_worst = ana;
      rep.numeric_at_worst = num;
    }
  }
  return rep;
}

}  // namespace vf
