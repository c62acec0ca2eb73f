#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "vf/datagen.hpp"
#include "vf/model.hpp"

namespace vf {

// Confusion counts and derived rates with "plausible" as the positive class.
// Rates with an empty denominator report 1.0 (no opportunity for error).
struct MetricsReport {
  long long tp = 0, fp = 0, tn = 0, fn = 0;

  long long total() const { return tp + fp + tn + fn; }
  double accuracy() const {
    return total() == 0 ? 1.0 : static_cast<double>(tp + tn) / total();
  }
  double precision() const {
    return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
  }
  double recall() const {
    return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
  }
  double dsc() const {
    const long long denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2.0 * tp / denom;
  }
  // False-positive rate over the actually non-plausible fibers.
  double fp_rate() const {
    return fp + tn == 0 ? 0.0 : static_cast<double>(fp) / (fp + tn);
  }
};

inline MetricsReport confusion_metrics(const std::vector<Label>& preds,
                                       const std::vector<Label>& labels) {
  if (preds.size() != labels.size())
    throw ValidationError("confusion_metrics: size mismatch");
  if (preds.empty())
    throw ValidationError("confusion_metrics: need at least one sample");
  MetricsReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool pred_p = preds[i] == Label::Plausible;
    const bool is_p = labels[i] == Label::Plausible;
    if (pred_p && is_p) ++r.tp;
    else if (pred_p && !is_p) ++r.fp;
    else if (!pred_p && is_p) ++r.fn;
    else ++r.tn;
  }
  return r;
}

inline std::vector<Label> hard_labels(const std::vector<Prediction>& preds) {
  std::vector<Label> out;
  out.reserve(preds.size());
  for (const auto& p : preds)
    out.push_back(p.predicted == 1 ? Label::Plausible : Label::NonPlausible);
  return out;
}

// ---------------------------------------------------------------------------
// Length x curvature partition.

struct CategoryCell {
  int length_class = 0;     // 0 short [0,50), 1 medium [50,100), 2 long
  int curvature_class = 0;  // 0 straight [0,.05), 1 curved [.05,.10), 2 very

  bool operator==(const CategoryCell&) const = default;
};

inline std::string to_string(const CategoryCell& c) {
  static const char* kLen[] = {"short", "medium", "long"};
  static const char* kCurv[] = {"straight", "curved", "very-curved"};
  return std::string(kLen[c.length_class]) + "/" + kCurv[c.curvature_class];
}

// Left-closed, right-open intervals; values past the last boundary clamp to
// the top class.
inline CategoryCell categorize(const Streamline& s) {
  s.validate();
  const double len = arc_length(s);
  const double curv = mean_curvature(s);
  CategoryCell cell;
  cell.length_class = len < 50.0 ? 0 : len < 100.0 ? 1 : 2;
  cell.curvature_class = curv < 0.05 ? 0 : curv < 0.10 ? 1 : 2;
  return cell;
}

struct CategoryReport {
  CategoryCell cell;
  MetricsReport metrics;
};

// Confusion metrics restricted to each populated cell of the partition, in
// fixed cell order (length-major); empty cells are absent.
inline std::vector<CategoryReport> per_category_report(
    const std::vector<Label>& preds, const std::vector<Label>& labels,
    const Tractogram& t) {
  if (preds.size() != labels.size() ||
      static_cast<int>(preds.size()) != t.size())
    throw ValidationError("per_category_report: size mismatch");
  std::array<MetricsReport, 9> cells;
  std::array<long long, 9> counts{};
  for (int i = 0; i < t.size(); ++i) {
    const CategoryCell c = categorize(t.streamlines[i]);
    const int idx = c.length_class * 3 + c.curvature_class;
    ++counts[idx];
    MetricsReport& r = cells[idx];
    const bool pred_p = preds[i] == Label::Plausible;
    const bool is_p = labels[i] == Label::Plausible;
    if (pred_p && is_p) ++r.tp;
    else if (pred_p && !is_p) ++r.fp;
    else if (!pred_p && is_p) ++r.fn;
    else ++r.tn;
  }
  std::vector<CategoryReport> out;
  for (int idx = 0; idx < 9; ++idx) {
    if (counts[idx] == 0) continue;
    out.push_back({CategoryCell{idx / 3, idx % 3}, cells[idx]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Invariance probes.

// Predicts every fiber after a seeded random shuffle of its (resampled)
// points; the identity permutation is rejected and redrawn. Metrics compare
// shuffled-input predictions against the original labels.
inline MetricsReport permutation_test(Model& model, const Tractogram& t,
                                      const std::vector<Label>& labels,
                                      std::uint64_t seed,
                                      int resample_to = 16) {
  if (static_cast<int>(labels.size()) != t.size())
    throw ValidationError("permutation_test: label count mismatch");
  if (t.size() == 0)
    throw ValidationError("permutation_test: empty tractogram");
  Rng rng(seed);
  std::vector<Label> preds;
  preds.reserve(t.size());
  for (const auto& s : t.streamlines) {
    Streamline rs = resample_to >= 2 && s.size() != resample_to
                        ? resample(s, resample_to)
                        : s;
    const int n = rs.size();
    std::vector<int> perm;
    bool identity = true;
    do {
      perm = rng.permutation(n);
      identity = true;
      for (int i = 0; i < n; ++i)
        if (perm[i] != i) {
          identity = false;
          break;
        }
    } while (identity);
    Streamline shuffled;
    shuffled.points.reserve(n);
    for (int i = 0; i < n; ++i) shuffled.points.push_back(rs.points[perm[i]]);
    preds.push_back(model.predict(shuffled).predicted == 1
                        ? Label::Plausible
                        : Label::NonPlausible);
  }
  return confusion_metrics(preds, labels);
}

// Max per-component logit deviation between each fiber and its flip.
inline double flip_test(Model& model, const Tractogram& t) {
  if (t.size() == 0) throw ValidationError("flip_test: empty tractogram");
  double worst = 0.0;
  for (const auto& s : t.streamlines) {
    const Prediction a = model.predict(s);
    const Prediction b = model.predict(flip(s));
    for (std::size_t j = 0; j < a.logits.size(); ++j)
      worst = std::max(worst, std::abs(a.logits[j] - b.logits[j]));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Voxel masks and volumetric DSC.

struct VoxelMask {
  std::array<int, 3> dims{};
  double voxel_mm = 1.0;
  Point3 origin{};  // position of the low corner of voxel (0,0,0)
  std::vector<std::uint8_t> occupied;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
  }
  bool same_grid(const VoxelMask& o) const {
    return dims == o.dims && voxel_mm == o.voxel_mm &&
           origin.x == o.origin.x && origin.y == o.origin.y &&
           origin.z == o.origin.z;
  }
  long long count() const {
    long long c = 0;
    for (auto b : occupied) c += b;
    return c;
  }
};

struct Bounds {
  Point3 lo{}, hi{};
};

// Bounds covering the whole tractogram, padded by one voxel.
inline Bounds bounds_of(const Tractogram& t, double pad_mm) {
  if (t.size() == 0) throw ValidationError("bounds_of: empty tractogram");
  Bounds b{t.streamlines[0].points[0], t.streamlines[0].points[0]};
  for (const auto& s : t.streamlines)
    for (const auto& p : s.points) {
      b.lo.x = std::min(b.lo.x, p.x);
      b.lo.y = std::min(b.lo.y, p.y);
      b.lo.z = std::min(b.lo.z, p.z);
      b.hi.x = std::max(b.hi.x, p.x);
      b.hi.y = std::max(b.hi.y, p.y);
      b.hi.z = std::max(b.hi.z, p.z);
    }
  b.lo.x -= pad_mm;
  b.lo.y -= pad_mm;
  b.lo.z -= pad_mm;
  b.hi.x += pad_mm;
  b.hi.y += pad_mm;
  b.hi.z += pad_mm;
  return b;
}

// A voxel is occupied iff some streamline segment intersects it. Segments
// are traversed with the 3D digital-differential-analyzer walk (one voxel
// step per boundary crossing), so the mask is independent of the sampling
// density along each fiber.
inline VoxelMask voxelize(const std::vector<Streamline>& streamlines,
                          double voxel_mm, const Bounds& bounds) {
  if (voxel_mm <= 0.0)
    throw ValidationError("voxelize: voxel size must be positive");
  VoxelMask m;
  m.voxel_mm = voxel_mm;
  m.origin = bounds.lo;
  for (int a = 0; a < 3; ++a) {
    const double lo = a == 0 ? bounds.lo.x : a == 1 ? bounds.lo.y
                                                    : bounds.lo.z;
    const double hi = a == 0 ? bounds.hi.x : a == 1 ? bounds.hi.y
                                                    : bounds.hi.z;
    if (hi <= lo) throw ValidationError("voxelize: empty bounds");
    m.dims[a] = static_cast<int>(std::ceil((hi - lo) / voxel_mm));
  }
  m.occupied.assign(static_cast<std::size_t>(m.dims[0]) * m.dims[1] *
                        m.dims[2],
                    0);

  auto cell_of = [&](const Point3& p, std::array<int, 3>& c) {
    const double q[3] = {(p.x - m.origin.x) / voxel_mm,
                         (p.y - m.origin.y) / voxel_mm,
                         (p.z - m.origin.z) / voxel_mm};
    for (int a = 0; a < 3; ++a) {
      if (q[a] < 0.0 || q[a] > m.dims[a])
        throw ValidationError("voxelize: point outside bounds");
      c[a] = std::min(m.dims[a] - 1, static_cast<int>(q[a]));
    }
  };

  for (const auto& s : streamlines) {
    s.validate();
    for (int i = 0; i + 1 < s.size(); ++i) {
      const Point3& a = s.points[i];
      const Point3& b = s.points[i + 1];
      std::array<int, 3> cell, goal;
      cell_of(a, cell);
      cell_of(b, goal);
      m.occupied[m.index(cell[0], cell[1], cell[2])] = 1;

      const double d[3] = {b.x - a.x, b.y - a.y, b.z - a.z};
      const double start[3] = {a.x - m.origin.x, a.y - m.origin.y,
                               a.z - m.origin.z};
      int step[3];
      double t_max[3], t_delta[3];
      for (int ax = 0; ax < 3; ++ax) {
        if (d[ax] > 0.0) {
          step[ax] = 1;
          t_delta[ax] = voxel_mm / d[ax];
          t_max[ax] = ((cell[ax] + 1) * voxel_mm - start[ax]) / d[ax];
        } else if (d[ax] < 0.0) {
          step[ax] = -1;
          t_delta[ax] = -voxel_mm / d[ax];
          t_max[ax] = (cell[ax] * voxel_mm - start[ax]) / d[ax];
        } else {
          step[ax] = 0;
          t_delta[ax] = std::numeric_limits<double>::infinity();
          t_max[ax] = std::numeric_limits<double>::infinity();
        }
      }
      // walk until the whole segment (t in [0,1]) is covered
      const long long max_steps =
          3LL * (m.dims[0] + m.dims[1] + m.dims[2]) + 8;
      for (long long it = 0; it < max_steps; ++it) {
        const int ax = t_max[0] <= t_max[1]
                           ? (t_max[0] <= t_max[2] ? 0 : 2)
                           : (t_max[1] <= t_max[2] ? 1 : 2);
        if (t_max[ax] > 1.0) break;
        cell[ax] += step[ax];
        if (cell[ax] < 0 || cell[ax] >= m.dims[ax]) break;
        t_max[ax] += t_delta[ax];
        m.occupied[m.index(cell[0], cell[1], cell[2])] = 1;
      }
    }
  }
  return m;
}

inline double volumetric_dsc(const VoxelMask& a, const VoxelMask& b) {
  if (!a.same_grid(b))
    throw ValidationError("volumetric_dsc: grid mismatch");
  long long na = 0, nb = 0, nab = 0;
  for (std::size_t i = 0; i < a.occupied.size(); ++i) {
    na += a.occupied[i];
    nb += b.occupied[i];
    nab += a.occupied[i] & b.occupied[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * nab / static_cast<double>(na + nb);
}

// ---------------------------------------------------------------------------
// Per-point attribution: for each input point, the number of global
// descriptor columns whose max-pooled value came from that point's row.
inline std::vector<int> max_activation_attribution(Model& model,
                                                   const Streamline& s) {
  s.validate();
  model.forward_logits(s.as_matrix());
  const std::vector<int>& rows = model.descriptor_argmax();
  if (static_cast<int>(rows.size()) != model.spec().descriptor_width)
    throw ValidationError(
        "max_activation_attribution: model exposes no max-pool argmax");
  std::vector<int> counts(s.size(), 0);
  for (int r : rows) {
    if (r < 0 || r >= s.size())
      throw ValidationError("max_activation_attribution: argmax out of range");
    ++counts[r];
  }
  return counts;
}

}  // namespace vf
