#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "vf/geometry.hpp"
#include "vf/rng.hpp"

namespace vf {

// Rule-based plausibility labeling: a fiber is non-plausible iff it is too
// short, accumulates a loop's worth of turning, or terminates away from the
// outer interface shell of the synthetic brain.
struct LabelRules {
  double min_length_mm = 20.0;
  double loop_angle_rad = 2.0 * std::numbers::pi;
  double shell_inner = 0.9;  // fractions of the brain radius
  double shell_outer = 1.0;
  double radius_mm = 70.0;

  void validate() const {
    if (!(shell_inner > 0.0 && shell_inner < shell_outer &&
          shell_outer <= 1.0))
      throw ValidationError("label rules: need 0 < inner < outer <= 1");
    if (min_length_mm <= 0.0)
      throw ValidationError("label rules: min length must be positive");
    if (radius_mm <= 0.0)
      throw ValidationError("label rules: brain radius must be positive");
  }

  bool in_shell(const Point3& p) const {
    const double r = p.norm();
    return r >= shell_inner * radius_mm && r <= shell_outer * radius_mm;
  }

  Label label_of(const Streamline& s) const {
    if (arc_length(s) < min_length_mm) return Label::NonPlausible;
    if (total_turning_angle(s) >= loop_angle_rad) return Label::NonPlausible;
    if (!in_shell(s.points.front()) || !in_shell(s.points.back()))
      return Label::NonPlausible;
    return Label::Plausible;
  }
};

inline std::vector<Label> apply_exclusive_rules(const Tractogram& t,
                                                const LabelRules& rules) {
  rules.validate();
  t.validate();
  std::vector<Label> out;
  out.reserve(t.streamlines.size());
  for (const auto& s : t.streamlines) out.push_back(rules.label_of(s));
  return out;
}

// Inclusive policy: a fiber is plausible iff its bundle class is in the
// included set; class 0 (unassigned) is never plausible.
inline std::vector<Label> relabel_inclusive(const std::vector<int>& class_ids,
                                            const std::set<int>& included) {
  std::vector<Label> out;
  out.reserve(class_ids.size());
  for (int c : class_ids)
    out.push_back(c != 0 && included.count(c) ? Label::Plausible
                                              : Label::NonPlausible);
  return out;
}

// A synthetic fiber bundle: a cubic Bezier backbone plus per-fiber control
// point jitter and per-point noise.
struct BundleTemplate {
  std::string name;
  int class_id = 1;  // 0 is reserved for unassigned/corrupted fibers
  std::array<Point3, 4> ctrl{};
  double jitter_mm = 1.5;  // per-fiber control-point jitter stddev
  double noise_mm = 0.5;   // pointwise noise amplitude (smooth harmonics)

  void validate(double brain_radius_mm) const {
    if (class_id < 1)
      throw ValidationError("template '" + name + "': class id must be >= 1");
    for (const auto& p : ctrl)
      if (p.norm() > brain_radius_mm)
        throw ValidationError("template '" + name +
                              "': control point outside the brain sphere");
  }
};

enum class Corruption { Short, Loop, Truncated, Uturn, RandomWalk };
inline constexpr int kCorruptionTypes = 5;

inline std::string to_string(Corruption c) {
  switch (c) {
    case Corruption::Short: return "short";
    case Corruption::Loop: return "loop";
    case Corruption::Truncated: return "truncated";
    case Corruption::Uturn: return "uturn";
    case Corruption::RandomWalk: return "random-walk";
  }
  return "?";
}

struct GenConfig {
  std::vector<BundleTemplate> templates;
  std::array<int, kCorruptionTypes> corruption_counts{};  // indexed by enum
  std::vector<int> plausible_counts;  // per template
  std::uint64_t seed = 0;
  int points_per_fiber = 64;
  LabelRules rules;

  int total() const {
    int n = 0;
    for (int c : plausible_counts) n += c;
    for (int c : corruption_counts) n += c;
    return n;
  }

  void validate() const {
    rules.validate();
    if (templates.empty())
      throw ValidationError("gen config: need at least one template");
    if (plausible_counts.size() != templates.size())
      throw ValidationError(
          "gen config: one plausible count per template required");
    for (int c : plausible_counts)
      if (c < 0) throw ValidationError("gen config: negative fiber count");
    for (int c : corruption_counts)
      if (c < 0) throw ValidationError("gen config: negative fiber count");
    if (total() < 2)
      throw ValidationError("gen config: total fiber count must be >= 2");
    if (points_per_fiber < 4)
      throw ValidationError("gen config: need >= 4 points per fiber");
    for (const auto& t : templates) t.validate(rules.radius_mm);
  }
};

struct Dataset {
  Tractogram tract;             // labels and class_ids filled in
  std::vector<int> corruption;  // -1 = plausible draw, else Corruption index
};

namespace detail {

inline Point3 bezier_at(const std::array<Point3, 4>& c, double t) {
  const double u = 1.0 - t;
  const double b0 = u * u * u, b1 = 3 * u * u * t, b2 = 3 * u * t * t,
               b3 = t * t * t;
  return {b0 * c[0].x + b1 * c[1].x + b2 * c[2].x + b3 * c[3].x,
          b0 * c[0].y + b1 * c[1].y + b2 * c[2].y + b3 * c[3].y,
          b0 * c[0].z + b1 * c[1].z + b2 * c[2].z + b3 * c[3].z};
}

inline Point3 unit_orthogonal(const Point3& d) {
  Point3 a = std::abs(d.x) < 0.9 ? Point3{1, 0, 0} : Point3{0, 1, 0};
  Point3 o = d.cross(a);
  return o * (1.0 / o.norm());
}

// Rotates v by `angle` around unit axis (Rodrigues).
inline Point3 rotate(const Point3& v, const Point3& axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Point3 k = axis;
  return v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c));
}

// One raw fiber from a template: jittered control points, Bezier samples,
// plus smooth low-frequency pointwise noise. White per-point noise would
// dominate the accumulated unsigned turning of a densely sampled polyline,
// so the noise is a sum of three random sinusoidal displacement fields whose
// added turning stays small.
inline Streamline raw_fiber(const BundleTemplate& tpl, int n_points,
                            Rng& rng) {
  std::array<Point3, 4> c = tpl.ctrl;
  for (auto& p : c) {
    p.x += tpl.jitter_mm * rng.normal();
    p.y += tpl.jitter_mm * rng.normal();
    p.z += tpl.jitter_mm * rng.normal();
  }
  struct Harmonic {
    Point3 dir;
    double amp, phase;
  };
  std::array<Harmonic, 3> noise;
  for (int h = 0; h < 3; ++h) {
    Point3 d{rng.normal(), rng.normal(), rng.normal()};
    const double n = d.norm();
    noise[h].dir = n > 1e-12 ? d * (1.0 / n) : Point3{1, 0, 0};
    noise[h].amp = tpl.noise_mm * rng.uniform() / ((h + 1) * (h + 1));
    noise[h].phase = 2.0 * std::numbers::pi * rng.uniform();
  }
  Streamline s;
  s.points.reserve(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double t = static_cast<double>(i) / (n_points - 1);
    Point3 p = bezier_at(c, t);
    for (int h = 0; h < 3; ++h)
      p = p + noise[h].dir *
                  (noise[h].amp *
                   std::sin(std::numbers::pi * (h + 1) * t + noise[h].phase));
    s.points.push_back(p);
  }
  return s;
}

// Scales the fiber about its centroid so its arc length drops below the
// minimum-length rule.
inline Streamline corrupt_short(const Streamline& base, Rng& rng) {
  const double target = 8.0 + 8.0 * rng.uniform();  // mm, well under 20
  const double len = arc_length(base);
  const double f = target / len;
  Point3 c{0, 0, 0};
  for (const auto& p : base.points) c = c + p;
  c = c * (1.0 / static_cast<double>(base.size()));
  Streamline out;
  out.points.reserve(base.size());
  for (const auto& p : base.points) out.points.push_back(c + (p - c) * f);
  return out;
}

// Appends a 2.5 pi helical loop at the end of the fiber.
inline Streamline corrupt_loop(const Streamline& base, Rng& rng) {
  Streamline out = base;
  const Point3& end = base.points.back();
  Point3 d = end - base.points[base.size() - 2];
  d = d * (1.0 / d.norm());
  Point3 a = unit_orthogonal(d);
  Point3 b = d.cross(a);
  const double r = 3.0 + 2.0 * rng.uniform();  // helix radius, mm
  const double pitch = 0.3;                    // mm per radian of sweep
  const double sweep = 2.5 * std::numbers::pi;
  const int steps = 24;
  for (int i = 1; i <= steps; ++i) {
    const double th = sweep * i / steps;
    out.points.push_back(end + a * (r * std::sin(th)) +
                         b * (r * (1.0 - std::cos(th))) + d * (pitch * th));
  }
  return out;
}

// Cuts the fiber at 40-70% of its arc length (endpoint leaves the shell).
inline Streamline corrupt_truncated(const Streamline& base, Rng& rng) {
  const double frac = 0.4 + 0.3 * rng.uniform();
  const double cut = frac * arc_length(base);
  Streamline out;
  out.points.push_back(base.points.front());
  double walked = 0.0;
  for (int i = 1; i < base.size(); ++i) {
    const Point3 seg = base.points[i] - base.points[i - 1];
    const double len = seg.norm();
    if (walked + len >= cut) {
      const double t = (cut - walked) / len;
      if (t > 1e-9) out.points.push_back(base.points[i - 1] + seg * t);
      break;
    }
    walked += len;
    out.points.push_back(base.points[i]);
  }
  if (out.size() < 2) out.points.push_back(base.points[1]);
  return out;
}

// Inserts a 170-degree turn at mid-fiber: the second half doubles back.
inline Streamline corrupt_uturn(const Streamline& base, Rng& rng) {
  const int pivot =
      base.size() / 3 + rng.index(std::max(1, base.size() / 3));
  Streamline out;
  for (int i = 0; i <= pivot; ++i) out.points.push_back(base.points[i]);
  const Point3 dir = base.points[pivot] - base.points[pivot - 1];
  const Point3 axis = unit_orthogonal(dir * (1.0 / dir.norm()));
  const double angle = 170.0 / 180.0 * std::numbers::pi;
  Point3 cur = out.points.back();
  for (int i = pivot + 1; i < base.size(); ++i) {
    const Point3 step = base.points[i] - base.points[i - 1];
    cur = cur + rotate(step, axis, angle);
    out.points.push_back(cur);
  }
  return out;
}

// Brownian polyline: accumulated turning far exceeds the loop threshold.
inline Streamline corrupt_random_walk(int n_points, double brain_radius,
                                      Rng& rng) {
  Streamline s;
  Point3 p{(rng.uniform() - 0.5) * brain_radius,
           (rng.uniform() - 0.5) * brain_radius,
           (rng.uniform() - 0.5) * brain_radius};
  s.points.push_back(p);
  for (int i = 1; i < n_points; ++i) {
    Point3 step{rng.normal(), rng.normal(), rng.normal()};
    const double n = step.norm();
    if (n < 1e-12) {
      --i;
      continue;
    }
    p = p + step * (2.0 / n);
    s.points.push_back(p);
  }
  return s;
}

}  // namespace detail

// Deterministic synthetic tractogram: per-template plausible fibers (verified
// against the rules, regenerated on violation) followed by rule-violating
// corruptions. Each template and corruption type draws from its own RNG
// stream, so per-template generation is order-independent.
inline Dataset generate(const GenConfig& cfg) {
  cfg.validate();
  Rng root(cfg.seed);
  Dataset ds;
  ds.tract.labels.emplace();
  ds.tract.class_ids.emplace();

  for (std::size_t ti = 0; ti < cfg.templates.size(); ++ti) {
    const BundleTemplate& tpl = cfg.templates[ti];
    Rng rng = root.split(ti);
    for (int f = 0; f < cfg.plausible_counts[ti]; ++f) {
      Streamline s;
      bool ok = false;
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        s = detail::raw_fiber(tpl, cfg.points_per_fiber, rng);
        ok = cfg.rules.label_of(s) == Label::Plausible;
      }
      if (!ok)
        throw ValidationError("template '" + tpl.name +
                              "': no rule-plausible fiber after 100 attempts");
      ds.tract.streamlines.push_back(std::move(s));
      ds.tract.labels->push_back(Label::Plausible);
      ds.tract.class_ids->push_back(tpl.class_id);
      ds.corruption.push_back(-1);
    }
  }

  for (int ci = 0; ci < kCorruptionTypes; ++ci) {
    const auto type = static_cast<Corruption>(ci);
    Rng rng = root.split(1000 + ci);
    for (int f = 0; f < cfg.corruption_counts[ci]; ++f) {
      Streamline s;
      bool ok = false;
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        const BundleTemplate& tpl =
            cfg.templates[rng.index(static_cast<int>(cfg.templates.size()))];
        Streamline base = detail::raw_fiber(tpl, cfg.points_per_fiber, rng);
        switch (type) {
          case Corruption::Short:
            s = detail::corrupt_short(base, rng);
            break;
          case Corruption::Loop:
            s = detail::corrupt_loop(base, rng);
            break;
          case Corruption::Truncated:
            s = detail::corrupt_truncated(base, rng);
            break;
          case Corruption::Uturn:
            s = detail::corrupt_uturn(base, rng);
            break;
          case Corruption::RandomWalk:
            s = detail::corrupt_random_walk(cfg.points_per_fiber,
                                            cfg.rules.radius_mm, rng);
            break;
        }
        ok = s.size() >= 2 && cfg.rules.label_of(s) == Label::NonPlausible;
      }
      if (!ok)
        throw ValidationError("corruption '" + to_string(type) +
                              "': no rule-violating fiber after 100 attempts");
      ds.tract.streamlines.push_back(std::move(s));
      ds.tract.labels->push_back(Label::NonPlausible);
      ds.tract.class_ids->push_back(0);
      ds.corruption.push_back(ci);
    }
  }

  ds.tract.validate();
  return ds;
}

// The default bundle set: circular arcs (expressed as cubic Beziers) whose
// endpoints sit on the interface shell, spanning the length and curvature
// ranges of the evaluation partition across distinct octants. Arc radius
// controls curvature (1/r); arc sweep controls length.
inline std::vector<BundleTemplate> default_templates() {
  struct ArcSpec {
    const char* name;
    double r;  // arc radius, mm (curvature = 1/r)
    double L;  // arc length, mm
    Point3 dir;  // octant the arc plane faces
  };
  // Long fibers must stay under 2 pi of turning (L/r < 2 pi), so high
  // curvature only appears on short bundles.
  const ArcSpec specs[] = {
      {"arch-long-straight", 120.0, 120.0, {1, 1, 1}},
      {"diag-long-straight", 90.0, 105.0, {-1, 1, 1}},
      {"band-medium-straight", 45.0, 70.0, {1, -1, 1}},
      {"bow-medium-straight", 30.0, 80.0, {1, 1, -1}},
      {"hook-medium-curved", 18.0, 60.0, {-1, -1, 1}},
      {"chord-short-straight", 25.0, 35.0, {-1, 1, -1}},
      {"bend-short-curved", 12.0, 30.0, {1, -1, -1}},
      {"curl-short-very-curved", 8.0, 24.0, {-1, -1, -1}},
  };
  const double shell_mid = 66.0;  // endpoint radius target, mm
  std::vector<BundleTemplate> out;
  int cid = 1;
  for (const ArcSpec& sp : specs) {
    Point3 e1 = sp.dir * (1.0 / sp.dir.norm());
    Point3 e2 = detail::unit_orthogonal(e1);
    const double alpha = sp.L / (2.0 * sp.r);
    const double sa = std::sin(alpha), ca = std::cos(alpha);
    // Arc center outside the brain along e1, arc apex dipping inward, so the
    // whole curve (and its Bezier control points) stays inside the sphere
    // while both endpoints land on the shell.
    const double d =
        sp.r * ca + std::sqrt(shell_mid * shell_mid - sp.r * sp.r * sa * sa);
    const Point3 p0 = e1 * (d - sp.r * ca) + e2 * (sp.r * sa);
    const Point3 p3 = e1 * (d - sp.r * ca) - e2 * (sp.r * sa);
    // Cubic Bezier approximation of the arc.
    const double k = (4.0 / 3.0) * sp.r * std::tan(alpha / 2.0);
    const Point3 t0 = e1 * (-sa) - e2 * ca;  // unit tangent at the start
    const Point3 t3 = e1 * sa - e2 * ca;     // unit tangent at the end
    BundleTemplate tpl;
    tpl.name = sp.name;
    tpl.class_id = cid++;
    tpl.ctrl = {p0, p0 + t0 * k, p3 - t3 * k, p3};
    out.push_back(std::move(tpl));
  }
  return out;
}

// total fibers split between plausible (per template, evenly) and the five
// corruption types (evenly); counts are exact.
inline GenConfig default_config(int total, double plausible_fraction,
                                std::uint64_t seed) {
  if (total < 2) throw ValidationError("default_config: total must be >= 2");
  if (plausible_fraction < 0.0 || plausible_fraction > 1.0)
    throw ValidationError("default_config: fraction must be in [0,1]");
  GenConfig cfg;
  cfg.templates = default_templates();
  cfg.seed = seed;
  const int n_p =
      static_cast<int>(std::lround(total * plausible_fraction));
  const int n_np = total - n_p;
  const int nt = static_cast<int>(cfg.templates.size());
  cfg.plausible_counts.assign(nt, n_p / nt);
  for (int i = 0; i < n_p % nt; ++i) ++cfg.plausible_counts[i];
  for (int i = 0; i < kCorruptionTypes; ++i)
    cfg.corruption_counts[i] = n_np / kCorruptionTypes;
  for (int i = 0; i < n_np % kCorruptionTypes; ++i)
    ++cfg.corruption_counts[i];
  return cfg;
}

}  // namespace vf
