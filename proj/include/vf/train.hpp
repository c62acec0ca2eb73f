#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vf/eval.hpp"
#include "vf/io.hpp"

namespace vf {

struct TrainConfig {
  ModelSpec model;
  int epochs = 200;
  int batch = 256;
  LrSchedule lr;    // 1e-3, x0.7 every 90 epochs, floor 5e-5
  AdamConfig adam;  // betas 0.9 / 0.99
  std::uint64_t seed = 0;
  double train_fraction = 0.8;  // remainder is the validation bucket
  int resample_to = 16;
  // Optional early stops; training always runs at least one epoch and stops
  // as soon as the reached metric meets the target ("within N epochs").
  std::optional<double> stop_at_val_acc;
  std::optional<double> stop_at_train_acc;

  void validate() const {
    model.validate();
    if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
    if (batch < 1) throw ValidationError("train config: batch must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw ValidationError("train config: split fraction must be in (0,1)");
    if (resample_to < 2)
      throw ValidationError("train config: resample target must be >= 2");
  }
};

struct EpochStats {
  int epoch = 0;
  double lr = 0, train_loss = 0, train_acc = 0, val_loss = 0, val_acc = 0;
};

struct TrainLog {
  std::vector<EpochStats> rows;

  void save_csv(const std::string& path) const {
    std::vector<std::vector<std::string>> out;
    out.reserve(rows.size());
    for (const auto& r : rows)
      out.push_back({std::to_string(r.epoch), detail::fmt(r.lr, 9),
                     detail::fmt(r.train_loss, 9), detail::fmt(r.train_acc, 9),
                     detail::fmt(r.val_loss, 9), detail::fmt(r.val_acc, 9)});
    ::vf::save_csv(path,
                   {"epoch", "lr", "train_loss", "train_acc", "val_loss",
                    "val_acc"},
                   out);
  }
};

struct TrainResult {
  Model model;  // best-validation checkpoint
  TrainLog log;
  int best_epoch = -1;
  double best_val_acc = 0, best_val_loss = 0;
  std::vector<int> train_indices, val_indices;
};

namespace detail {

struct Sample {
  Matrix points;
  int label;  // 0 = non-plausible, 1 = plausible
};

inline std::vector<Sample> prepare_samples(const Tractogram& t,
                                           const std::vector<Label>& labels,
                                           int resample_to) {
  if (static_cast<int>(labels.size()) != t.size())
    throw ValidationError("train: label count does not match tractogram");
  std::vector<Sample> out;
  out.reserve(t.size());
  for (int i = 0; i < t.size(); ++i) {
    const Streamline& s = t.streamlines[i];
    Streamline rs = s.size() != resample_to ? resample(s, resample_to) : s;
    out.push_back({rs.as_matrix(), labels[i] == Label::Plausible ? 1 : 0});
  }
  return out;
}

struct EvalStats {
  double loss = 0, acc = 0;
};

inline EvalStats evaluate(Model& model, const std::vector<Sample>& samples,
                          const std::vector<int>& indices) {
  EvalStats st;
  SoftmaxCrossEntropyOp loss;
  long long correct = 0;
  for (int idx : indices) {
    const Sample& s = samples[idx];
    Matrix logits = model.forward_logits(s.points);
    st.loss += loss.forward(logits, {s.label});
    correct += model.to_prediction(logits).predicted == s.label;
  }
  st.loss /= static_cast<double>(indices.size());
  st.acc = static_cast<double>(correct) / indices.size();
  return st;
}

}  // namespace detail

// Mini-batch training with the step-decay Adam recipe. Deterministic: a
// fixed seed fixes the split, the shuffles, the initialization, and thus
// every parameter byte.
inline TrainResult train(const TrainConfig& cfg, const Tractogram& data) {
  cfg.validate();
  data.validate();
  if (!data.labels)
    throw ValidationError("train: tractogram carries no labels");
  auto samples = detail::prepare_samples(data, *data.labels, cfg.resample_to);
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw ValidationError("train: need at least 2 streamlines");

  Rng rng(cfg.seed);
  auto perm = rng.permutation(n);
  int n_train = static_cast<int>(std::lround(cfg.train_fraction * n));
  n_train = std::min(n - 1, std::max(1, n_train));
  std::vector<int> train_idx(perm.begin(), perm.begin() + n_train);
  std::vector<int> val_idx(perm.begin() + n_train, perm.end());

  int train_pos = 0;
  for (int idx : train_idx) train_pos += samples[idx].label;
  if (train_pos == 0 || train_pos == n_train)
    throw ValidationError(
        "train: training split contains a single class (" +
        std::to_string(train_pos) + " of " + std::to_string(n_train) +
        " plausible)");

  Model model(cfg.model);
  auto params = model.params();
  TrainResult res{model, {}, -1, -1.0, 0.0, train_idx, val_idx};
  SoftmaxCrossEntropyOp loss_op;
  long long adam_t = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr.at(epoch);
    rng.shuffle(train_idx);  // without-replacement pass over the train split

    double epoch_loss = 0;
    long long correct = 0;
    for (int start = 0; start < n_train; start += cfg.batch) {
      const int end = std::min(n_train, start + cfg.batch);
      const int m = end - start;
      for (int b = start; b < end; ++b) {
        const detail::Sample& s = samples[train_idx[b]];
        Matrix logits = model.forward_logits(s.points);
        const double l = loss_op.forward(logits, {s.label});
        if (!std::isfinite(l))
          throw ValidationError("train: non-finite loss at epoch " +
                                std::to_string(epoch) + ", batch offset " +
                                std::to_string(start));
        epoch_loss += l;
        correct += model.to_prediction(logits).predicted == s.label;
        model.backward(loss_op.backward());
      }
      // gradients accumulated over the mini-batch; average then step
      const double inv_m = 1.0 / m;
      for (auto* p : params)
        for (double& g : p->grad.data) g *= inv_m;
      adam_step(params, lr, ++adam_t, cfg.adam);
    }

    EpochStats st;
    st.epoch = epoch;
    st.lr = lr;
    st.train_loss = epoch_loss / n_train;
    st.train_acc = static_cast<double>(correct) / n_train;
    const detail::EvalStats v = detail::evaluate(model, samples, val_idx);
    st.val_loss = v.loss;
    st.val_acc = v.acc;
    res.log.rows.push_back(st);

    if (st.val_acc > res.best_val_acc ||
        (st.val_acc == res.best_val_acc && st.val_loss < res.best_val_loss)) {
      res.best_val_acc = st.val_acc;
      res.best_val_loss = st.val_loss;
      res.best_epoch = epoch;
      res.model = model;  // parameter snapshot
    }

    if (cfg.stop_at_val_acc && st.val_acc >= *cfg.stop_at_val_acc) break;
    if (cfg.stop_at_train_acc && st.train_acc >= *cfg.stop_at_train_acc)
      break;
  }
  return res;
}

// ---------------------------------------------------------------------------
// k-fold cross-validation: each fold held out once, the rest trained on.

struct CvResult {
  std::vector<MetricsReport> folds;
  double mean_accuracy = 0, stddev_accuracy = 0;
  double mean_dsc = 0, stddev_dsc = 0;
};

inline CvResult cross_validate(const TrainConfig& cfg,
                               const std::vector<Tractogram>& folds) {
  cfg.validate();
  if (folds.size() < 2)
    throw ValidationError("cross_validate: need at least 2 folds");
  for (const auto& f : folds) {
    if (f.size() == 0) throw ValidationError("cross_validate: empty fold");
    if (!f.labels)
      throw ValidationError("cross_validate: fold carries no labels");
  }
  CvResult cv;
  for (std::size_t held = 0; held < folds.size(); ++held) {
    Tractogram train_data;
    train_data.labels.emplace();
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (i == held) continue;
      train_data.streamlines.insert(train_data.streamlines.end(),
                                    folds[i].streamlines.begin(),
                                    folds[i].streamlines.end());
      train_data.labels->insert(train_data.labels->end(),
                                folds[i].labels->begin(),
                                folds[i].labels->end());
    }
    TrainResult r = train(cfg, train_data);
    auto preds = predict_batch(r.model, folds[held], cfg.resample_to);
    cv.folds.push_back(
        confusion_metrics(hard_labels(preds), *folds[held].labels));
  }
  const double k = static_cast<double>(cv.folds.size());
  for (const auto& f : cv.folds) {
    cv.mean_accuracy += f.accuracy() / k;
    cv.mean_dsc += f.dsc() / k;
  }
  for (const auto& f : cv.folds) {
    const double da = f.accuracy() - cv.mean_accuracy;
    const double dd = f.dsc() - cv.mean_dsc;
    cv.stddev_accuracy += da * da / k;
    cv.stddev_dsc += dd * dd / k;
  }
  cv.stddev_accuracy = std::sqrt(cv.stddev_accuracy);
  cv.stddev_dsc = std::sqrt(cv.stddev_dsc);
  return cv;
}

// ---------------------------------------------------------------------------
// Incremental relabeling study: for each stage (a growing set of bundle
// classes considered plausible), relabel, retrain from scratch with the same
// hyperparameters, and report held-out metrics.

struct StageReport {
  std::set<int> included;
  MetricsReport metrics;
};

inline std::vector<StageReport> incremental_train(
    const TrainConfig& cfg, const Tractogram& data,
    const std::vector<std::set<int>>& stages) {
  cfg.validate();
  if (!data.class_ids)
    throw ValidationError("incremental_train: tractogram carries no class ids");
  if (stages.empty())
    throw ValidationError("incremental_train: need at least one stage");
  for (std::size_t i = 1; i < stages.size(); ++i)
    for (int c : stages[i - 1])
      if (!stages[i].count(c))
        throw ValidationError(
            "incremental_train: stages must be monotonically increasing");

  std::vector<StageReport> out;
  for (const auto& stage : stages) {
    Tractogram staged = data;
    staged.labels = relabel_inclusive(*data.class_ids, stage);
    std::optional<TrainResult> run;
    try {
      run.emplace(train(cfg, staged));
    } catch (const ValidationError& e) {
      throw ValidationError("incremental_train: stage failed: " +
                            std::string(e.what()));
    }
    TrainResult& r = *run;
    // held-out metrics on the validation bucket of the same split
    Tractogram held;
    held.labels.emplace();
    for (int idx : r.val_indices) {
      held.streamlines.push_back(staged.streamlines[idx]);
      held.labels->push_back((*staged.labels)[idx]);
    }
    auto preds = predict_batch(r.model, held, cfg.resample_to);
    out.push_back({stage, confusion_metrics(hard_labels(preds), *held.labels)});
  }
  return out;
}

}  // namespace vf
