#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "vf/geometry.hpp"
#include "vf/layers.hpp"

namespace vf {

enum class Arch { VF, PN, DGCNN };

inline std::string to_string(Arch a) {
  switch (a) {
    case Arch::VF: return "vf";
    case Arch::PN: return "pn";
    case Arch::DGCNN: return "dgcnn";
  }
  return "?";
}

inline Arch arch_from_string(const std::string& s) {
  if (s == "vf") return Arch::VF;
  if (s == "pn") return Arch::PN;
  if (s == "dgcnn") return Arch::DGCNN;
  throw ValidationError("unknown architecture '" + s + "'");
}

struct ModelSpec {
  Arch arch = Arch::VF;
  int k = 5;        // neighbors for euclidean/latent knn layers
  int classes = 2;
  std::uint64_t seed = 0;
  PoolMode neighbor_pool = PoolMode::Max;
  Activation ec_activation = Activation::LeakyRelu;
  int descriptor_width = 1024;

  void validate() const {
    if (k < 1) throw ValidationError("model spec: k must be >= 1");
    if (classes < 2) throw ValidationError("model spec: need >= 2 classes");
    if (descriptor_width < 1)
      throw ValidationError("model spec: invalid descriptor width");
  }
};

struct Prediction {
  std::vector<double> logits;
  int predicted = 0;
  double prob_plausible = 0.0;  // softmax probability of class 1
};

// One of the three architectures, with explicit forward/backward.
// Copyable; a copy is an independent instance sharing nothing, which is how
// batch prediction and training shard work across threads.
class Model {
 public:
  explicit Model(const ModelSpec& spec) : spec_(spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int c = spec.classes;
    const int dw = spec.descriptor_width;
    switch (spec.arch) {
      case Arch::VF:
        sec_ = EcLayer("sec", 3, {64, 64}, NeighborSource::Sequence,
                       spec.neighbor_pool, spec.k, spec.ec_activation);
        ec2_ = EcLayer("ec2", 64, {128, 128}, NeighborSource::Latent,
                       spec.neighbor_pool, spec.k, spec.ec_activation);
        enc_ = GlobalEncoder("g", 64 + 128, dw, spec.ec_activation);
        head_ = ClassifierHead("head", dw, c);
        sec_.init(rng);
        ec2_.init(rng);
        enc_.init(rng);
        head_.init(rng);
        break;
      case Arch::PN:
        pn_encoder_ = Mlp("enc", 3, {64, 64, 64, 128, dw}, spec.ec_activation);
        head_ = ClassifierHead("head", dw, c);
        pn_encoder_.init(rng);
        head_.init(rng);
        break;
      case Arch::DGCNN:
        ec1_ = EcLayer("ec1", 3, {64, 64, 64}, NeighborSource::Euclidean,
                       spec.neighbor_pool, spec.k, spec.ec_activation);
        ec2_ = EcLayer("ec2", 64, {64, 64, 64, 128}, NeighborSource::Latent,
                       spec.neighbor_pool, spec.k, spec.ec_activation);
        enc_ = GlobalEncoder("g", 64 + 128, dw, spec.ec_activation);
        head_ = ClassifierHead("head", dw, c);
        ec1_.init(rng);
        ec2_.init(rng);
        enc_.init(rng);
        head_.init(rng);
        break;
    }
  }

  const ModelSpec& spec() const { return spec_; }

  // When frozen, forward reuses the neighbor graphs cached by the previous
  // forward of compatible size instead of rebuilding them. Backward already
  // treats graph construction as constant, so freezing makes the forward pass
  // the exact function that backward differentiates (used by the
  // finite-difference checks).
  void freeze_graphs(bool on) { freeze_graphs_ = on; }

  // points: n x 3, n >= 2. Returns 1 x classes raw logits.
  Matrix forward_logits(const Matrix& points) {
    if (points.rows < 2)
      throw ValidationError("model forward: need at least 2 points");
    if (points.cols != 3)
      throw ValidationError("model forward: input must be n x 3");
    const int k_eff = std::min(spec_.k, points.rows - 1);
    auto graph_for = [&](const EcLayer& layer, const Matrix& x) {
      if (freeze_graphs_ && layer.graph_cache.n == x.rows)
        return layer.graph_cache;
      return layer.make_graph(x, k_eff);
    };
    Matrix z;
    switch (spec_.arch) {
      case Arch::VF: {
        Matrix x1 = sec_.forward(points, sequence_graph(points.rows));
        Matrix x2 = ec2_.forward(x1, graph_for(ec2_, x1));
        z = enc_.forward(x1, x2);
        break;
      }
      case Arch::PN: {
        Matrix feats = pn_encoder_.forward(points);
        z = pn_pool_.forward(feats);
        break;
      }
      case Arch::DGCNN: {
        Matrix x1 = ec1_.forward(points, graph_for(ec1_, points));
        Matrix x2 = ec2_.forward(x1, graph_for(ec2_, x1));
        z = enc_.forward(x1, x2);
        break;
      }
    }
    descriptor_ = z;
    return head_.forward(z);
  }

  // Backward from the logit gradient of the most recent forward; returns the
  // gradient with respect to the input points and accumulates parameter
  // gradients. Neighbor-graph construction is treated as constant.
  Matrix backward(const Matrix& glogits) {
    Matrix gz = head_.backward(glogits);
    switch (spec_.arch) {
      case Arch::VF: {
        auto [g1, g2] = enc_.backward(gz);
        Matrix g1b = ec2_.backward(g2);
        for (std::size_t i = 0; i < g1.size(); ++i) g1.data[i] += g1b.data[i];
        return sec_.backward(g1);
      }
      case Arch::PN: {
        Matrix gfeats = pn_pool_.backward(gz);
        return pn_encoder_.backward(gfeats);
      }
      case Arch::DGCNN: {
        auto [g1, g2] = enc_.backward(gz);
        Matrix g1b = ec2_.backward(g2);
        for (std::size_t i = 0; i < g1.size(); ++i) g1.data[i] += g1b.data[i];
        return ec1_.backward(g1);
      }
    }
    throw ValidationError("model backward: unknown architecture");
  }

  std::vector<ParameterBlock*> params() {
    std::vector<ParameterBlock*> out;
    switch (spec_.arch) {
      case Arch::VF:
        sec_.collect(out);
        ec2_.collect(out);
        enc_.collect(out);
        break;
      case Arch::PN:
        pn_encoder_.collect(out);
        break;
      case Arch::DGCNN:
        ec1_.collect(out);
        ec2_.collect(out);
        enc_.collect(out);
        break;
    }
    head_.collect(out);
    return out;
  }

  std::size_t param_count() {
    std::size_t c = 0;
    for (auto* p : params()) c += p->count();
    return c;
  }

  Prediction predict(const Streamline& s, int resample_to = 0) {
    const Streamline* in = &s;
    Streamline rs;
    if (resample_to >= 2 && s.size() != resample_to) {
      rs = resample(s, resample_to);
      in = &rs;
    }
    Matrix logits = forward_logits(in->as_matrix());
    return to_prediction(logits);
  }

  Prediction to_prediction(const Matrix& logits) const {
    Prediction p;
    p.logits.assign(logits.data.begin(), logits.data.end());
    double mx = p.logits[0];
    p.predicted = 0;
    for (std::size_t j = 1; j < p.logits.size(); ++j)
      if (p.logits[j] > mx) {
        mx = p.logits[j];
        p.predicted = static_cast<int>(j);
      }
    double z = 0.0;
    for (double l : p.logits) z += std::exp(l - mx);
    p.prob_plausible = std::exp(p.logits[1] - mx) / z;
    return p;
  }

  // Global descriptor of the most recent forward (the pooled z).
  const Matrix& descriptor() const { return descriptor_; }

  // Argmax row per descriptor column from the most recent forward. Only
  // meaningful under max pooling.
  const std::vector<int>& descriptor_argmax() const {
    return spec_.arch == Arch::PN ? pn_pool_.argmax : enc_.argmax_rows();
  }

  bool has_latent_descriptor() const { return spec_.arch != Arch::PN; }

 private:
  ModelSpec spec_;
  // VF / DGCNN blocks
  EcLayer sec_, ec1_, ec2_;
  GlobalEncoder enc_;
  // PN blocks
  Mlp pn_encoder_;
  MaxPoolRowsOp pn_pool_;
  // shared
  ClassifierHead head_;
  Matrix descriptor_;
  bool freeze_graphs_ = false;
};

inline Model build(const ModelSpec& spec) { return Model(spec); }

// Order-preserving batch prediction. Work is dealt out in fixed chunks of
// kChunk streamlines so the result is bitwise identical for any worker
// count; each worker runs its own copy of the model.
inline std::vector<Prediction> predict_batch(const Model& model,
                                             const Tractogram& t,
                                             int resample_to = 16,
                                             int workers = 1) {
  if (t.size() == 0) throw ValidationError("predict_batch: empty tractogram");
  if (workers < 1) workers = 1;
  constexpr int kChunk = 256;
  const int n = t.size();
  const int chunks = (n + kChunk - 1) / kChunk;
  std::vector<Prediction> out(n);
  std::atomic<int> next{0};
  auto run = [&](Model local) {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= chunks) break;
      const int lo = c * kChunk;
      const int hi = std::min(n, lo + kChunk);
      for (int i = lo; i < hi; ++i)
        out[i] = local.predict(t.streamlines[i], resample_to);
    }
  };
  if (workers == 1) {
    run(model);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, model);
    for (auto& th : pool) th.join();
  }
  return out;
}

// Per-streamline 1024-d global descriptors (the vector before the head).
inline Matrix export_latent(Model& model, const Tractogram& t,
                            int resample_to = 16) {
  if (!model.has_latent_descriptor())
    throw ValidationError("export_latent: architecture '" +
                          to_string(model.spec().arch) +
                          "' has no latent global descriptor");
  if (t.size() == 0) throw ValidationError("export_latent: empty tractogram");
  Matrix out(t.size(), model.spec().descriptor_width);
  for (int i = 0; i < t.size(); ++i) {
    Streamline s = resample_to >= 2 ? resample(t.streamlines[i], resample_to)
                                    : t.streamlines[i];
    model.forward_logits(s.as_matrix());
    const Matrix& z = model.descriptor();
    for (int j = 0; j < z.cols; ++j) out(i, j) = z(0, j);
  }
  return out;
}

}  // namespace vf
