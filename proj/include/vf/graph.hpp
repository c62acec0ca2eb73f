#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "vf/error.hpp"
#include "vf/matrix.hpp"

namespace vf {

// Directed neighbor edges over the points of one streamline. Edges are kept
// grouped by source node (ascending), which the pooling layers rely on.
struct FiberGraph {
  struct Edge {
    int src;
    int dst;
  };

  int n = 0;
  std::vector<Edge> edges;

  int edge_count() const { return static_cast<int>(edges.size()); }

  // CSR-style offsets: edges of node i live in [offsets[i], offsets[i+1]).
  std::vector<int> out_offsets() const {
    std::vector<int> off(n + 1, 0);
    for (const auto& e : edges) ++off[e.src + 1];
    for (int i = 0; i < n; ++i) off[i + 1] += off[i];
    return off;
  }

  void validate() const {
    int prev_src = -1;
    for (const auto& e : edges) {
      if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
        throw ValidationError("graph edge index out of range");
      if (e.src == e.dst) throw ValidationError("graph has a self-loop");
      if (e.src < prev_src)
        throw ValidationError("graph edges not grouped by source");
      prev_src = e.src;
    }
  }
};

// Brute-force k-nn over matrix rows, Euclidean distance, self excluded.
// Exact distance ties break toward the smaller row index.
inline FiberGraph euclidean_knn(const Matrix& features, int k) {
  const int n = features.rows;
  if (k < 1) throw ValidationError("knn: k must be >= 1");
  if (k >= n)
    throw ValidationError("knn: k=" + std::to_string(k) +
                          " requires more than " + std::to_string(n) +
                          " rows (self excluded)");
  FiberGraph g;
  g.n = n;
  g.edges.reserve(std::size_t(n) * k);
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      const double* a = features.row_ptr(i);
      const double* b = features.row_ptr(j);
      for (int c = 0; c < features.cols; ++c) {
        const double diff = a[c] - b[c];
        d2 += diff * diff;
      }
      dist[m++] = {d2, j};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.begin() + m);
    std::vector<int> picked(k);
    for (int t = 0; t < k; ++t) picked[t] = dist[t].second;
    std::sort(picked.begin(), picked.end());
    for (int t = 0; t < k; ++t) g.edges.push_back({i, picked[t]});
  }
  return g;
}

// Bidirectional chain graph over a sequence of n points: every interior
// node links to previous and next, terminals to one neighbor only.
inline FiberGraph sequence_graph(int n) {
  if (n < 2) throw ValidationError("sequence_graph: need n >= 2");
  FiberGraph g;
  g.n = n;
  g.edges.reserve(std::size_t(2) * (n - 1));
  for (int i = 0; i < n; ++i) {
    if (i > 0) g.edges.push_back({i, i - 1});
    if (i + 1 < n) g.edges.push_back({i, i + 1});
  }
  return g;
}

// k-nn in a learned feature space; same contract as euclidean_knn, the
// feature dimension is just whatever the layer below produced.
inline FiberGraph latent_knn(const Matrix& features, int k) {
  return euclidean_knn(features, k);
}

}  // namespace vf
