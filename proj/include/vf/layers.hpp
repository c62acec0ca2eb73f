#pragma once

#include <string>
#include <vector>

#include "vf/graph.hpp"
#include "vf/ops.hpp"

namespace vf {

enum class Activation { LeakyRelu, Relu };

inline std::string to_string(Activation a) {
  return a == Activation::LeakyRelu ? "lrelu" : "relu";
}

// Stack of linear layers with an activation between consecutive layers
// (none after the last one).
struct Mlp {
  std::vector<LinearOp> linears;
  std::vector<LeakyReluOp> acts;
  Activation activation = Activation::LeakyRelu;
  double slope = 0.2;

  Mlp() = default;
  Mlp(const std::string& name, int d_in, const std::vector<int>& widths,
      Activation act = Activation::LeakyRelu, double lrelu_slope = 0.2)
      : activation(act), slope(act == Activation::LeakyRelu ? lrelu_slope : 0.0) {
    if (widths.empty()) throw ValidationError("mlp: needs at least one layer");
    int d = d_in;
    for (std::size_t l = 0; l < widths.size(); ++l) {
      if (widths[l] < 1) throw ValidationError("mlp: invalid width");
      linears.emplace_back(name + ".l" + std::to_string(l), d, widths[l]);
      d = widths[l];
    }
    acts.assign(widths.size() - 1, LeakyReluOp(slope));
  }

  void init(Rng& rng) {
    for (auto& l : linears) l.init(rng);
  }

  Matrix forward(const Matrix& x) {
    Matrix h = linears[0].forward(x);
    for (std::size_t l = 1; l < linears.size(); ++l) {
      h = acts[l - 1].forward(h);
      h = linears[l].forward(h);
    }
    return h;
  }

  Matrix backward(const Matrix& gy) {
    Matrix g = gy;
    for (std::size_t l = linears.size(); l-- > 0;) {
      g = linears[l].backward(g);
      if (l > 0) g = acts[l - 1].backward(g);
    }
    return g;
  }

  void collect(std::vector<ParameterBlock*>& out) {
    for (auto& l : linears) {
      out.push_back(&l.W);
      out.push_back(&l.b);
    }
  }

  int out_width() const { return linears.back().W.value.cols; }
};

enum class NeighborSource { Euclidean, Latent, Sequence };

// Edge Convolution: for every directed edge i->j of the neighbor graph,
// run h on [x_i , x_j - x_i] and pool the per-edge features back to node i.
// The caller picks the graph (sequence chain, euclidean or latent k-nn);
// graph construction itself is treated as non-differentiable.
struct EcLayer {
  Mlp h;
  NeighborPoolOp pool;
  NeighborSource source = NeighborSource::Sequence;
  int k = 5;

  EcLayer() = default;
  EcLayer(const std::string& name, int d_in, const std::vector<int>& widths,
          NeighborSource src, PoolMode pool_mode = PoolMode::Max, int knn_k = 5,
          Activation act = Activation::LeakyRelu)
      : h(name + ".h", 2 * d_in, widths, act),
        pool(pool_mode),
        source(src),
        k(knn_k),
        d_in_(d_in) {}

  void init(Rng& rng) { h.init(rng); }

  // Builds this layer's graph for an input (k capped at n-1 by the caller).
  FiberGraph make_graph(const Matrix& x, int k_eff) const {
    switch (source) {
      case NeighborSource::Sequence:
        return sequence_graph(x.rows);
      case NeighborSource::Euclidean:
        return euclidean_knn(x, k_eff);
      case NeighborSource::Latent:
        return latent_knn(x, k_eff);
    }
    throw ValidationError("ec: unknown neighbor source");
  }

  Matrix forward(const Matrix& x, const FiberGraph& graph) {
    if (graph.n != x.rows)
      throw ValidationError("ec: graph node count != feature rows");
    if (x.cols != d_in_) throw ValidationError("ec: unexpected feature width");
    graph_cache = graph;
    const int e = graph.edge_count();
    Matrix edge_in(e, 2 * d_in_);
    for (int t = 0; t < e; ++t) {
      const auto& ed = graph.edges[t];
      const double* xi = x.row_ptr(ed.src);
      const double* xj = x.row_ptr(ed.dst);
      double* row = edge_in.row_ptr(t);
      for (int c = 0; c < d_in_; ++c) {
        row[c] = xi[c];
        row[d_in_ + c] = xj[c] - xi[c];
      }
    }
    Matrix edge_out = h.forward(edge_in);
    return pool.forward(edge_out, graph);
  }

  Matrix backward(const Matrix& gy) {
    Matrix ge = pool.backward(gy);
    Matrix gin = h.backward(ge);
    Matrix gx(graph_cache.n, d_in_);
    for (int t = 0; t < graph_cache.edge_count(); ++t) {
      const auto& ed = graph_cache.edges[t];
      const double* row = gin.row_ptr(t);
      double* gi = gx.row_ptr(ed.src);
      double* gj = gx.row_ptr(ed.dst);
      for (int c = 0; c < d_in_; ++c) {
        gi[c] += row[c] - row[d_in_ + c];
        gj[c] += row[d_in_ + c];
      }
    }
    return gx;
  }

  void collect(std::vector<ParameterBlock*>& out) { h.collect(out); }
  int out_width() const { return h.out_width(); }
  int in_width() const { return d_in_; }

  FiberGraph graph_cache;

 private:
  int d_in_ = 0;
};

// sEC = EC over the bidirectional chain graph of consecutive points.
inline Matrix sec_forward(EcLayer& layer, const Matrix& points) {
  if (points.rows < 2) throw ValidationError("sec: need at least 2 points");
  return layer.forward(points, sequence_graph(points.rows));
}

// z = pool over rows of g([x1 , x2]); the single descriptor of the whole
// point set.
struct GlobalEncoder {
  Mlp g;
  MaxPoolRowsOp pool;
  PoolMode mode = PoolMode::Max;

  GlobalEncoder() = default;
  GlobalEncoder(const std::string& name, int d_in, int d_out,
                Activation act = Activation::LeakyRelu)
      : g(name, d_in, {d_out}, act), act_(act == Activation::LeakyRelu ? 0.2 : 0.0) {}

  void init(Rng& rng) { g.init(rng); }

  Matrix forward(const Matrix& x1, const Matrix& x2) {
    if (x1.rows != x2.rows)
      throw ValidationError("global encoder: row-count mismatch");
    Matrix cat(x1.rows, x1.cols + x2.cols);
    for (int i = 0; i < x1.rows; ++i) {
      for (int j = 0; j < x1.cols; ++j) cat(i, j) = x1(i, j);
      for (int j = 0; j < x2.cols; ++j) cat(i, x1.cols + j) = x2(i, j);
    }
    cols1_ = x1.cols;
    Matrix enc = g.forward(cat);
    enc = act_.forward(enc);
    return pool.forward(enc);  // 1 x d_out
  }

  // Returns (grad_x1, grad_x2).
  std::pair<Matrix, Matrix> backward(const Matrix& gz) {
    Matrix genc = pool.backward(gz);
    genc = act_.backward(genc);
    Matrix gcat = g.backward(genc);
    Matrix g1(gcat.rows, cols1_), g2(gcat.rows, gcat.cols - cols1_);
    for (int i = 0; i < gcat.rows; ++i) {
      for (int j = 0; j < cols1_; ++j) g1(i, j) = gcat(i, j);
      for (int j = 0; j < g2.cols; ++j) g2(i, j) = gcat(i, cols1_ + j);
    }
    return {std::move(g1), std::move(g2)};
  }

  void collect(std::vector<ParameterBlock*>& out) { g.collect(out); }
  const std::vector<int>& argmax_rows() const { return pool.argmax; }

 private:
  LeakyReluOp act_{0.2};
  int cols1_ = 0;
};

// Three stacked linear layers (512, 256, c) with ReLU between; raw logits out.
struct ClassifierHead {
  Mlp mlp;

  ClassifierHead() = default;
  ClassifierHead(const std::string& name, int d_in, int classes)
      : mlp(name, d_in, {512, 256, classes}, Activation::Relu) {}

  void init(Rng& rng) { mlp.init(rng); }
  Matrix forward(const Matrix& z) { return mlp.forward(z); }
  Matrix backward(const Matrix& glogits) { return mlp.backward(glogits); }
  void collect(std::vector<ParameterBlock*>& out) { mlp.collect(out); }
};

}  // namespace vf
