#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vf/error.hpp"
#include "vf/matrix.hpp"

namespace vf {

// All coordinates in millimeters.
struct Point3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Point3 operator*(double s) const { return {x * s, y * s, z * s}; }

  double dot(const Point3& o) const { return x * o.x + y * o.y + z * o.z; }
  Point3 cross(const Point3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline double distance(const Point3& a, const Point3& b) {
  return (a - b).norm();
}

// Ordered polyline of >= 2 points. Consecutive duplicates are invalid
// (every segment must have positive length).
struct Streamline {
  std::vector<Point3> points;

  Streamline() = default;
  explicit Streamline(std::vector<Point3> pts) : points(std::move(pts)) {}

  int size() const { return static_cast<int>(points.size()); }

  void validate() const {
    if (points.size() < 2)
      throw ValidationError("streamline needs at least 2 points");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!points[i].finite())
        throw ValidationError("streamline has non-finite coordinate at point " +
                              std::to_string(i));
      if (i > 0 && distance(points[i - 1], points[i]) <= 0.0)
        throw ValidationError("streamline has zero-length segment at point " +
                              std::to_string(i));
    }
  }

  Matrix as_matrix() const {
    Matrix m(size(), 3);
    for (int i = 0; i < size(); ++i) {
      m(i, 0) = points[i].x;
      m(i, 1) = points[i].y;
      m(i, 2) = points[i].z;
    }
    return m;
  }

  static Streamline from_matrix(const Matrix& m) {
    Streamline s;
    s.points.resize(m.rows);
    for (int i = 0; i < m.rows; ++i)
      s.points[i] = {m(i, 0), m(i, 1), m(i, 2)};
    return s;
  }
};

enum class Label : std::uint8_t { NonPlausible = 0, Plausible = 1 };

// Streamline container with optional sidecar annotations. class_id 0 means
// "unassigned"; positive ids identify the generating bundle.
struct Tractogram {
  std::vector<Streamline> streamlines;
  std::optional<std::vector<Label>> labels;
  std::optional<std::vector<int>> class_ids;

  int size() const { return static_cast<int>(streamlines.size()); }

  void validate() const {
    if (labels && labels->size() != streamlines.size())
      throw ValidationError("label count does not match streamline count");
    if (class_ids && class_ids->size() != streamlines.size())
      throw ValidationError("class-id count does not match streamline count");
    for (const auto& s : streamlines) s.validate();
  }
};

namespace detail {
// Sums in ascending order so the result is bit-identical for any input
// ordering of the terms; used to make the polyline metrics exactly
// invariant under point-order reversal.
inline double stable_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}
}  // namespace detail

inline double arc_length(const Streamline& s) {
  std::vector<double> terms;
  terms.reserve(s.points.size());
  for (std::size_t i = 1; i < s.points.size(); ++i)
    terms.push_back(distance(s.points[i - 1], s.points[i]));
  return detail::stable_sum(terms);
}

// m points equally spaced by arc length; endpoints preserved exactly.
inline Streamline resample(const Streamline& s, int m) {
  if (m < 2) throw ValidationError("resample: need at least 2 points");
  const int n = s.size();
  std::vector<double> cum(n, 0.0);
  for (int i = 1; i < n; ++i)
    cum[i] = cum[i - 1] + distance(s.points[i - 1], s.points[i]);
  const double total = cum[n - 1];

  Streamline out;
  out.points.reserve(m);
  out.points.push_back(s.points.front());
  int seg = 0;
  for (int j = 1; j < m - 1; ++j) {
    const double target = total * j / (m - 1);
    while (seg < n - 2 && cum[seg + 1] < target) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double t = seg_len > 0.0 ? (target - cum[seg]) / seg_len : 0.0;
    out.points.push_back(s.points[seg] +
                         (s.points[seg + 1] - s.points[seg]) * t);
  }
  out.points.push_back(s.points.back());
  return out;
}

// Menger curvature of a point triple: reciprocal circumradius, 0 for
// (near-)collinear triples.
inline double menger_curvature(const Point3& p, const Point3& q,
                               const Point3& r) {
  // Computed from the sorted side lengths only (Kahan's stable triangle
  // area), so the value is bit-identical under any reordering of the
  // triple, including point-order reversal.
  double a = distance(p, q);
  double b = distance(q, r);
  double c = distance(r, p);
  if (a < b) std::swap(a, b);
  if (b < c) std::swap(b, c);
  if (a < b) std::swap(a, b);  // now a >= b >= c
  const double prod = a * b * c;
  if (prod <= 0.0) return 0.0;
  const double t = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
  if (t <= 0.0) return 0.0;  // degenerate (collinear) triple
  const double area4 = std::sqrt(t);  // 4 * triangle area
  return area4 / prod;
}

// Mean Menger curvature over interior points; 0 by convention when n < 3.
inline double mean_curvature(const Streamline& s) {
  const int n = s.size();
  if (n < 3) return 0.0;
  std::vector<double> terms;
  terms.reserve(n - 2);
  for (int i = 1; i + 1 < n; ++i)
    terms.push_back(
        menger_curvature(s.points[i - 1], s.points[i], s.points[i + 1]));
  return detail::stable_sum(terms) / (n - 2);
}

inline Streamline flip(const Streamline& s) {
  Streamline out = s;
  std::reverse(out.points.begin(), out.points.end());
  return out;
}

// Sum of unsigned angles between successive segment directions; 0 when n < 3.
inline double total_turning_angle(const Streamline& s) {
  const int n = s.size();
  if (n < 3) return 0.0;
  std::vector<double> terms;
  terms.reserve(n - 2);
  for (int i = 1; i + 1 < n; ++i) {
    const Point3 u = s.points[i] - s.points[i - 1];
    const Point3 v = s.points[i + 1] - s.points[i];
    const double nu = u.norm(), nv = v.norm();
    if (nu <= 0.0 || nv <= 0.0) continue;
    double c = u.dot(v) / (nu * nv);
    c = std::max(-1.0, std::min(1.0, c));
    terms.push_back(std::acos(c));
  }
  return detail::stable_sum(terms);
}

}  // namespace vf
