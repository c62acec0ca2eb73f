// vf: command-line surface over the streamline-classification library.
//
// Subcommands: generate, label, train, cv, incremental, infer, eval,
// permtest, fliptest, attribute, latent, voxel-dsc.
// Exit codes: 0 success, 1 validation error (including bad flags), 2 I/O
// error.

#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vf/train.hpp"

namespace {

using namespace vf;

std::string metrics_value(const MetricsReport& m, const std::string& col) {
  if (col == "tp") return std::to_string(m.tp);
  if (col == "fp") return std::to_string(m.fp);
  if (col == "tn") return std::to_string(m.tn);
  if (col == "fn") return std::to_string(m.fn);
  if (col == "accuracy") return detail::fmt(m.accuracy(), 9);
  if (col == "precision") return detail::fmt(m.precision(), 9);
  if (col == "recall") return detail::fmt(m.recall(), 9);
  if (col == "dsc") return detail::fmt(m.dsc(), 9);
  if (col == "fp_rate") return detail::fmt(m.fp_rate(), 9);
  throw ValidationError("unknown metrics column " + col);
}

const std::vector<std::string> kMetricCols = {
    "tp", "fp", "tn", "fn", "accuracy", "precision", "recall", "dsc",
    "fp_rate"};

std::vector<std::string> metrics_row(const MetricsReport& m) {
  std::vector<std::string> row;
  for (const auto& c : kMetricCols) row.push_back(metrics_value(m, c));
  return row;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<std::string>& tags,
                       const std::vector<MetricsReport>& reports) {
  std::vector<std::string> header = {"subset"};
  header.insert(header.end(), kMetricCols.begin(), kMetricCols.end());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::vector<std::string> row = {tags[i]};
    const auto vals = metrics_row(reports[i]);
    row.insert(row.end(), vals.begin(), vals.end());
    rows.push_back(row);
  }
  save_csv(path, header, rows);
}

std::vector<Label> load_binary_labels(const std::string& path, int expected) {
  return to_binary_labels(load_labels(path, expected), path);
}

// Reads the prediction CSV written by `infer` back into hard labels.
std::vector<Label> load_prediction_labels(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0] != "index,prob_plausible,label")
    throw IoError(path + ":1: expected prediction CSV header");
  std::vector<Label> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string& s = lines[i];
    if (s.empty() && i + 1 == lines.size()) break;
    const auto last = s.rfind(',');
    if (last == std::string::npos)
      throw IoError(path + ":" + std::to_string(i + 1) + ": malformed row");
    const std::string tok = s.substr(last + 1);
    if (tok == "p")
      out.push_back(Label::Plausible);
    else if (tok == "np")
      out.push_back(Label::NonPlausible);
    else
      throw IoError(path + ":" + std::to_string(i + 1) +
                    ": expected p/np label, got '" + tok + "'");
  }
  if (out.empty()) throw IoError(path + ": no prediction rows");
  return out;
}

std::vector<std::set<int>> parse_stages(const std::string& spec) {
  std::vector<std::set<int>> stages;
  std::stringstream ss(spec);
  std::string stage;
  while (std::getline(ss, stage, ';')) {
    std::set<int> ids;
    std::stringstream cs(stage);
    std::string tok;
    while (std::getline(cs, tok, ',')) {
      if (tok.empty()) continue;
      ids.insert(std::stoi(tok));
    }
    if (ids.empty())
      throw ValidationError("incremental: empty stage in --stages");
    stages.push_back(ids);
  }
  if (stages.empty())
    throw ValidationError("incremental: --stages is empty");
  return stages;
}

int run(int argc, char** argv) {
  CLI::App app{"streamline plausibility classification toolkit"};
  app.require_subcommand(1);

  // -- generate ------------------------------------------------------------
  auto* gen = app.add_subcommand(
      "generate", "generate a labeled synthetic tractogram");
  std::uint64_t gen_seed = 42;
  int gen_count = 10000, gen_points = 64;
  double gen_fraction = 0.6;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--count", gen_count, "total streamlines");
  gen->add_option("--plausible-fraction", gen_fraction,
                  "fraction of plausible fibers");
  gen->add_option("--points", gen_points, "points per fiber");
  gen->add_option("--out", gen_out, "output tractogram (.fib)")->required();

  // -- label ---------------------------------------------------------------
  auto* lab = app.add_subcommand(
      "label", "apply the exclusive plausibility rules to a tractogram");
  std::string lab_in, lab_out;
  lab->add_option("--in", lab_in, "input tractogram")->required();
  lab->add_option("--out", lab_out, "output labels file")->required();

  // -- train ---------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train a classifier");
  std::string tr_in, tr_labels, tr_out, tr_report, tr_arch = "vf";
  TrainConfig tr_cfg;
  double tr_stop_val = 0.0;
  tr->add_option("--in", tr_in, "input tractogram")->required();
  tr->add_option("--labels", tr_labels, "labels file (default <in>.labels)");
  tr->add_option("--out", tr_out, "output checkpoint")->required();
  tr->add_option("--report", tr_report, "training log CSV");
  tr->add_option("--arch", tr_arch, "architecture")
      ->check(CLI::IsMember({"vf", "pn", "dgcnn"}));
  tr->add_option("--epochs", tr_cfg.epochs, "epoch budget");
  tr->add_option("--batch", tr_cfg.batch, "mini-batch size");
  tr->add_option("--lr", tr_cfg.lr.base, "base learning rate");
  tr->add_option("--k", tr_cfg.model.k, "k nearest neighbors");
  tr->add_option("--resample", tr_cfg.resample_to, "points per fiber");
  tr->add_option("--seed", tr_cfg.seed, "training seed");
  tr->add_option("--split", tr_cfg.train_fraction, "training split fraction");
  tr->add_option("--stop-val-acc", tr_stop_val,
                 "stop early once validation accuracy reaches this value");

  // -- cv ------------------------------------------------------------------
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
  std::string cv_in, cv_labels, cv_report, cv_arch = "vf";
  int cv_folds = 5;
  TrainConfig cv_cfg;
  cv->add_option("--in", cv_in, "input tractogram")->required();
  cv->add_option("--labels", cv_labels, "labels file (default <in>.labels)");
  cv->add_option("--folds", cv_folds, "fold count (>= 2)");
  cv->add_option("--report", cv_report, "per-fold metrics CSV")->required();
  cv->add_option("--arch", cv_arch, "architecture")
      ->check(CLI::IsMember({"vf", "pn", "dgcnn"}));
  cv->add_option("--epochs", cv_cfg.epochs, "epoch budget");
  cv->add_option("--batch", cv_cfg.batch, "mini-batch size");
  cv->add_option("--lr", cv_cfg.lr.base, "base learning rate");
  cv->add_option("--k", cv_cfg.model.k, "k nearest neighbors");
  cv->add_option("--resample", cv_cfg.resample_to, "points per fiber");
  cv->add_option("--seed", cv_cfg.seed, "seed");

  // -- incremental ---------------------------------------------------------
  auto* inc = app.add_subcommand(
      "incremental", "incremental relabeling study over class stages");
  std::string inc_in, inc_classes, inc_stages, inc_report, inc_arch = "vf";
  TrainConfig inc_cfg;
  inc->add_option("--in", inc_in, "input tractogram")->required();
  inc->add_option("--classes", inc_classes,
                  "class-id file (default <in>.classes)");
  inc->add_option("--stages", inc_stages,
                  "semicolon-separated stages of comma-separated class ids, "
                  "e.g. '1,2;1,2,3'")
      ->required();
  inc->add_option("--report", inc_report, "per-stage metrics CSV")->required();
  inc->add_option("--arch", inc_arch, "architecture")
      ->check(CLI::IsMember({"vf", "pn", "dgcnn"}));
  inc->add_option("--epochs", inc_cfg.epochs, "epoch budget");
  inc->add_option("--batch", inc_cfg.batch, "mini-batch size");
  inc->add_option("--lr", inc_cfg.lr.base, "base learning rate");
  inc->add_option("--k", inc_cfg.model.k, "k nearest neighbors");
  inc->add_option("--resample", inc_cfg.resample_to, "points per fiber");
  inc->add_option("--seed", inc_cfg.seed, "seed");

  // -- infer ---------------------------------------------------------------
  auto* inf = app.add_subcommand("infer", "classify a tractogram");
  std::string inf_model, inf_in, inf_out;
  int inf_resample = 16, inf_workers = 1;
  inf->add_option("--model", inf_model, "checkpoint")->required();
  inf->add_option("--in", inf_in, "input tractogram")->required();
  inf->add_option("--out", inf_out, "prediction CSV")->required();
  inf->add_option("--resample", inf_resample, "points per fiber");
  inf->add_option("--workers", inf_workers, "prediction worker threads");

  // -- eval ----------------------------------------------------------------
  auto* ev = app.add_subcommand(
      "eval", "confusion metrics of predictions against reference labels");
  std::string ev_pred, ev_labels, ev_report, ev_in;
  ev->add_option("--pred", ev_pred, "prediction CSV from infer")->required();
  ev->add_option("--labels", ev_labels, "reference labels file")->required();
  ev->add_option("--report", ev_report, "metrics CSV")->required();
  ev->add_option("--in", ev_in,
                 "tractogram for the per-category breakdown (optional)");

  // -- permtest ------------------------------------------------------------
  auto* pt = app.add_subcommand(
      "permtest", "metrics after shuffling each fiber's points");
  std::string pt_model, pt_in, pt_labels, pt_report;
  std::uint64_t pt_seed = 0;
  int pt_resample = 16;
  pt->add_option("--model", pt_model, "checkpoint")->required();
  pt->add_option("--in", pt_in, "input tractogram")->required();
  pt->add_option("--labels", pt_labels, "reference labels file")->required();
  pt->add_option("--report", pt_report, "metrics CSV")->required();
  pt->add_option("--seed", pt_seed, "permutation seed");
  pt->add_option("--resample", pt_resample, "points per fiber");

  // -- fliptest ------------------------------------------------------------
  auto* ft = app.add_subcommand(
      "fliptest", "max logit deviation under point-order reversal");
  std::string ft_model, ft_in, ft_report;
  ft->add_option("--model", ft_model, "checkpoint")->required();
  ft->add_option("--in", ft_in, "input tractogram")->required();
  ft->add_option("--report", ft_report, "single-value CSV (optional)");

  // -- attribute -----------------------------------------------------------
  auto* at = app.add_subcommand(
      "attribute", "per-point max-pool attribution counts");
  std::string at_model, at_in, at_out;
  int at_resample = 16;
  at->add_option("--model", at_model, "checkpoint")->required();
  at->add_option("--in", at_in, "input tractogram")->required();
  at->add_option("--out", at_out, "attribution CSV")->required();
  at->add_option("--resample", at_resample, "points per fiber");

  // -- latent --------------------------------------------------------------
  auto* la = app.add_subcommand(
      "latent", "export per-streamline global descriptors");
  std::string la_model, la_in, la_out;
  int la_resample = 16;
  la->add_option("--model", la_model, "checkpoint")->required();
  la->add_option("--in", la_in, "input tractogram")->required();
  la->add_option("--out", la_out, "descriptor CSV")->required();
  la->add_option("--resample", la_resample, "points per fiber");

  // -- voxel-dsc -----------------------------------------------------------
  auto* vd = app.add_subcommand(
      "voxel-dsc", "volumetric Dice overlap of two tractogram masks");
  std::string vd_in, vd_ref, vd_report;
  double vd_voxel = 2.0;
  vd->add_option("--in", vd_in, "input tractogram")->required();
  vd->add_option("--ref", vd_ref, "reference tractogram")->required();
  vd->add_option("--voxel-mm", vd_voxel, "voxel edge length in mm");
  vd->add_option("--report", vd_report, "single-value CSV (optional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help / --version
      std::cout << app.help();
      return 0;
    }
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  if (gen->parsed()) {
    GenConfig cfg = default_config(gen_count, gen_fraction, gen_seed);
    cfg.points_per_fiber = gen_points;
    Dataset ds = generate(cfg);
    save_fib(gen_out, ds.tract);
    save_labels(gen_out + ".labels", *ds.tract.labels);
    save_class_ids(gen_out + ".classes", *ds.tract.class_ids);
    std::printf("wrote %d streamlines to %s\n", ds.tract.size(),
                gen_out.c_str());
  } else if (lab->parsed()) {
    Tractogram t = load_fib(lab_in);
    save_labels(lab_out, apply_exclusive_rules(t, {}));
    std::printf("labeled %d streamlines\n", t.size());
  } else if (tr->parsed()) {
    Tractogram t = load_fib(tr_in);
    const std::string lpath = tr_labels.empty() ? tr_in + ".labels" : tr_labels;
    t.labels = load_binary_labels(lpath, t.size());
    tr_cfg.model.arch = arch_from_string(tr_arch);
    tr_cfg.model.seed = tr_cfg.seed;
    if (tr_stop_val > 0.0) tr_cfg.stop_at_val_acc = tr_stop_val;
    TrainResult r = train(tr_cfg, t);
    save_ckpt(tr_out, r.model);
    if (!tr_report.empty()) r.log.save_csv(tr_report);
    std::printf("best epoch %d: val_acc %.4f val_loss %.6f\n", r.best_epoch,
                r.best_val_acc, r.best_val_loss);
  } else if (cv->parsed()) {
    Tractogram t = load_fib(cv_in);
    const std::string lpath = cv_labels.empty() ? cv_in + ".labels" : cv_labels;
    t.labels = load_binary_labels(lpath, t.size());
    if (cv_folds < 2) throw ValidationError("cv: --folds must be >= 2");
    if (t.size() < cv_folds)
      throw ValidationError("cv: fewer streamlines than folds");
    cv_cfg.model.arch = arch_from_string(cv_arch);
    cv_cfg.model.seed = cv_cfg.seed;
    std::vector<Tractogram> folds(cv_folds);
    for (auto& f : folds) f.labels.emplace();
    for (int i = 0; i < t.size(); ++i) {
      Tractogram& f = folds[i % cv_folds];
      f.streamlines.push_back(t.streamlines[i]);
      f.labels->push_back((*t.labels)[i]);
    }
    CvResult r = cross_validate(cv_cfg, folds);
    std::vector<std::string> tags;
    for (std::size_t i = 0; i < r.folds.size(); ++i)
      tags.push_back("fold" + std::to_string(i));
    write_metrics_csv(cv_report, tags, r.folds);
    std::printf("accuracy %.4f +/- %.4f, dsc %.4f +/- %.4f\n",
                r.mean_accuracy, r.stddev_accuracy, r.mean_dsc, r.stddev_dsc);
  } else if (inc->parsed()) {
    Tractogram t = load_fib(inc_in);
    const std::string cpath =
        inc_classes.empty() ? inc_in + ".classes" : inc_classes;
    t.class_ids = load_labels(cpath, t.size());
    inc_cfg.model.arch = arch_from_string(inc_arch);
    inc_cfg.model.seed = inc_cfg.seed;
    auto reports = incremental_train(inc_cfg, t, parse_stages(inc_stages));
    std::vector<std::string> tags;
    std::vector<MetricsReport> metrics;
    for (const auto& rep : reports) {
      std::string tag = "stage";
      for (int c : rep.included) tag += "_" + std::to_string(c);
      tags.push_back(tag);
      metrics.push_back(rep.metrics);
    }
    write_metrics_csv(inc_report, tags, metrics);
    for (std::size_t i = 0; i < metrics.size(); ++i)
      std::printf("%s: accuracy %.4f\n", tags[i].c_str(),
                  metrics[i].accuracy());
  } else if (inf->parsed()) {
    Model model = load_ckpt(inf_model);
    Tractogram t = load_fib(inf_in);
    auto preds = predict_batch(model, t, inf_resample, inf_workers);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < preds.size(); ++i)
      rows.push_back({std::to_string(i),
                      detail::fmt(preds[i].prob_plausible, 9),
                      preds[i].predicted == 1 ? "p" : "np"});
    save_csv(inf_out, {"index", "prob_plausible", "label"}, rows);
    std::printf("classified %d streamlines\n", t.size());
  } else if (ev->parsed()) {
    const auto preds = load_prediction_labels(ev_pred);
    const auto labels =
        load_binary_labels(ev_labels, static_cast<int>(preds.size()));
    std::vector<std::string> tags = {"all"};
    std::vector<MetricsReport> reports = {confusion_metrics(preds, labels)};
    if (!ev_in.empty()) {
      Tractogram t = load_fib(ev_in);
      for (const auto& cat : per_category_report(preds, labels, t)) {
        tags.push_back(to_string(cat.cell));
        reports.push_back(cat.metrics);
      }
    }
    write_metrics_csv(ev_report, tags, reports);
    std::printf("accuracy %.4f dsc %.4f\n", reports[0].accuracy(),
                reports[0].dsc());
  } else if (pt->parsed()) {
    Model model = load_ckpt(pt_model);
    Tractogram t = load_fib(pt_in);
    const auto labels = load_binary_labels(pt_labels, t.size());
    MetricsReport m = permutation_test(model, t, labels, pt_seed, pt_resample);
    write_metrics_csv(pt_report, {"shuffled"}, {m});
    std::printf("shuffled accuracy %.4f recall %.4f\n", m.accuracy(),
                m.recall());
  } else if (ft->parsed()) {
    Model model = load_ckpt(ft_model);
    Tractogram t = load_fib(ft_in);
    const double dev = flip_test(model, t);
    if (!ft_report.empty())
      save_csv(ft_report, {"max_logit_deviation"}, {{detail::fmt(dev, 9)}});
    std::printf("max logit deviation under flip: %.3e\n", dev);
  } else if (at->parsed()) {
    Model model = load_ckpt(at_model);
    Tractogram t = load_fib(at_in);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < t.size(); ++i) {
      Streamline s = t.streamlines[i].size() != at_resample
                         ? resample(t.streamlines[i], at_resample)
                         : t.streamlines[i];
      const auto counts = max_activation_attribution(model, s);
      for (std::size_t p = 0; p < counts.size(); ++p)
        rows.push_back({std::to_string(i), std::to_string(p),
                        std::to_string(counts[p])});
    }
    save_csv(at_out, {"streamline", "point", "count"}, rows);
    std::printf("attributed %d streamlines\n", t.size());
  } else if (la->parsed()) {
    Model model = load_ckpt(la_model);
    Tractogram t = load_fib(la_in);
    Matrix z = export_latent(model, t, la_resample);
    std::vector<std::string> header;
    for (int c = 0; c < z.cols; ++c) header.push_back("z" + std::to_string(c));
    std::vector<std::vector<std::string>> rows(z.rows);
    for (int r = 0; r < z.rows; ++r)
      for (int c = 0; c < z.cols; ++c)
        rows[r].push_back(detail::fmt(z(r, c), 9));
    save_csv(la_out, header, rows);
    std::printf("exported %d descriptors of width %d\n", z.rows, z.cols);
  } else if (vd->parsed()) {
    Tractogram a = load_fib(vd_in);
    Tractogram b = load_fib(vd_ref);
    Tractogram both = a;
    both.streamlines.insert(both.streamlines.end(), b.streamlines.begin(),
                            b.streamlines.end());
    const Bounds bounds = bounds_of(both, 2.0 * vd_voxel);
    const VoxelMask ma = voxelize(a.streamlines, vd_voxel, bounds);
    const VoxelMask mb = voxelize(b.streamlines, vd_voxel, bounds);
    const double dsc = volumetric_dsc(ma, mb);
    if (!vd_report.empty())
      save_csv(vd_report, {"volumetric_dsc"}, {{detail::fmt(dsc, 9)}});
    std::printf("volumetric dsc: %.6f\n", dsc);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const vf::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const vf::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
