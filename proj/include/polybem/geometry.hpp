#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "polybem/quadrature.hpp"

namespace polybem {

template <class Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <class Scalar>
Scalar cross2(const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

/** One straight edge of a polygon, oriented along the boundary. */
template <class Scalar>
struct Segment {
  Vec2<Scalar> start;
  Vec2<Scalar> end;
  Vec2<Scalar> tangent;         // unit, start -> end
  Vec2<Scalar> outward_normal;  // unit, points out of the enclosed domain
  Scalar length;
  Scalar arc_offset;  // arclength of `start` from the first vertex

  Vec2<Scalar> point_at_local(Scalar s) const { return start + s * tangent; }
};

/**
 * Closed simple polygon, traversed counter-clockwise. Segments, interior
 * angles, and arclength offsets are derived once at construction; instances
 * are treated as immutable afterwards.
 */
template <class Scalar>
struct Polygon {
  std::vector<Vec2<Scalar>> vertices;
  std::vector<Segment<Scalar>> segments;
  std::vector<Scalar> interior_angles;  // at vertices[j], in (0, 2*pi)
  Scalar perimeter = Scalar(0);
  Scalar scale = Scalar(1);  // cumulative factor applied to the raw coordinates

  int side_count() const { return static_cast<int>(segments.size()); }

  Scalar longest_side() const {
    Scalar m = Scalar(0);
    for (const auto& seg : segments) m = std::max(m, seg.length);
    return m;
  }

  /** Arclength coordinate of vertex j (vertex 0 sits at 0). */
  Scalar vertex_arc(int j) const { return segments[j].arc_offset; }

  int segment_of(Scalar t) const {
    if (t < Scalar(0) || t > perimeter)
      throw std::out_of_range("Polygon::segment_of: arclength outside [0, perimeter]");
    int lo = 0, hi = side_count() - 1;
    while (lo < hi) {
      const int mid = (lo + hi + 1) / 2;
      if (segments[mid].arc_offset <= t)
        lo = mid;
      else
        hi = mid - 1;
    }
    return lo;
  }

  Vec2<Scalar> point_at(Scalar t) const {
    if (t == perimeter) return vertices[0];
    const int j = segment_of(t);
    return segments[j].point_at_local(t - segments[j].arc_offset);
  }

  /** Mean of the vertices; the reference point for uniform scaling. */
  Vec2<Scalar> vertex_centroid() const {
    Vec2<Scalar> c = Vec2<Scalar>::Zero();
    for (const auto& v : vertices) c += v;
    return c / Scalar(vertices.size());
  }

  /** Radius of the smallest disk about the vertex centroid containing the polygon. */
  Scalar enclosing_radius() const {
    const Vec2<Scalar> c = vertex_centroid();
    Scalar r = Scalar(0);
    for (const auto& v : vertices) r = std::max(r, (v - c).norm());
    return r;
  }

  /** Smallest of pi/beta_j and pi/(2*pi - beta_j) over all corners. */
  Scalar singularity_index() const {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    Scalar s = std::numeric_limits<Scalar>::max();
    for (const Scalar beta : interior_angles) {
      s = std::min(s, pi / beta);
      s = std::min(s, pi / (Scalar(2) * pi - beta));
    }
    return s;
  }

  /** Crossing-number point-in-polygon test (points on edges are unreliable). */
  bool contains(const Vec2<Scalar>& p) const {
    bool inside = false;
    const int n = static_cast<int>(vertices.size());
    for (int i = 0, j = n - 1; i < n; j = i++) {
      const Vec2<Scalar>& a = vertices[j];
      const Vec2<Scalar>& b = vertices[i];
      if ((b.y() > p.y()) != (a.y() > p.y())) {
        const Scalar x_cross = b.x() + (p.y() - b.y()) * (a.x() - b.x()) / (a.y() - b.y());
        if (p.x() < x_cross) inside = !inside;
      }
    }
    return inside;
  }
};

namespace detail {

template <class Scalar>
bool segments_properly_intersect(const Vec2<Scalar>& a, const Vec2<Scalar>& b,
                                 const Vec2<Scalar>& c, const Vec2<Scalar>& d) {
  const auto orient = [](const Vec2<Scalar>& p, const Vec2<Scalar>& q, const Vec2<Scalar>& r) {
    const Scalar v = cross2<Scalar>(q - p, r - p);
    return (v > Scalar(0)) - (v < Scalar(0));
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

}  // namespace detail

/**
 * Builds a polygon from a counter-clockwise vertex list and validates it:
 * positive area, no repeated vertices, no crossing edges.
 */
template <class Scalar>
Polygon<Scalar> make_polygon(std::vector<Vec2<Scalar>> vertices, Scalar scale = Scalar(1)) {
  const int n = static_cast<int>(vertices.size());
  if (n < 3) throw std::invalid_argument("make_polygon: need at least 3 vertices");

  Polygon<Scalar> p;
  p.vertices = std::move(vertices);
  p.scale = scale;

  Scalar doubled_area = Scalar(0);
  for (int i = 0; i < n; ++i) {
    const Vec2<Scalar>& a = p.vertices[i];
    const Vec2<Scalar>& b = p.vertices[(i + 1) % n];
    doubled_area += cross2<Scalar>(a, b);
  }
  if (!(doubled_area > Scalar(0)))
    throw std::invalid_argument("make_polygon: vertices must be counter-clockwise");

  p.segments.resize(n);
  Scalar offset = Scalar(0);
  for (int i = 0; i < n; ++i) {
    Segment<Scalar>& seg = p.segments[i];
    seg.start = p.vertices[i];
    seg.end = p.vertices[(i + 1) % n];
    const Vec2<Scalar> d = seg.end - seg.start;
    seg.length = d.norm();
    if (!(seg.length > Scalar(0)))
      throw std::invalid_argument("make_polygon: repeated vertex");
    seg.tangent = d / seg.length;
    seg.outward_normal = Vec2<Scalar>(seg.tangent.y(), -seg.tangent.x());
    seg.arc_offset = offset;
    offset += seg.length;
  }
  p.perimeter = offset;

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (detail::segments_properly_intersect(p.vertices[i], p.vertices[(i + 1) % n],
                                              p.vertices[j], p.vertices[(j + 1) % n]))
        throw std::invalid_argument("make_polygon: edges cross");
    }

  const Scalar pi = std::numbers::pi_v<Scalar>;
  p.interior_angles.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vec2<Scalar> incoming = p.segments[(i + n - 1) % n].tangent;
    const Vec2<Scalar> outgoing = p.segments[i].tangent;
    const Scalar turn = std::atan2(cross2<Scalar>(incoming, outgoing), incoming.dot(outgoing));
    Scalar beta = pi - turn;
    if (beta <= Scalar(0)) beta += Scalar(2) * pi;
    if (beta >= Scalar(2) * pi) beta -= Scalar(2) * pi;
    p.interior_angles[i] = beta;
  }
  return p;
}

/**
 * The canonical L-shaped hexagon with the re-entrant corner (interior angle
 * 3*pi/2) at the origin. Perimeter 8 at scale 1.
 */
template <class Scalar = double>
Polygon<Scalar> make_l_shape() {
  std::vector<Vec2<Scalar>> v = {
      {Scalar(0), Scalar(0)},  {Scalar(1), Scalar(0)},  {Scalar(1), Scalar(1)},
      {Scalar(-1), Scalar(1)}, {Scalar(-1), Scalar(-1)}, {Scalar(0), Scalar(-1)}};
  return make_polygon<Scalar>(std::move(v));
}

/** Uniform scaling about the vertex centroid; compounds the stored scale factor. */
template <class Scalar>
Polygon<Scalar> scale_polygon(const Polygon<Scalar>& p, Scalar factor) {
  if (!(factor > Scalar(0))) throw std::invalid_argument("scale_polygon: factor must be positive");
  const Vec2<Scalar> c = p.vertex_centroid();
  std::vector<Vec2<Scalar>> v = p.vertices;
  for (auto& x : v) x = c + factor * (x - c);
  return make_polygon<Scalar>(std::move(v), p.scale * factor);
}

/**
 * Shrinks the polygon about its vertex centroid until it fits in a disk of
 * the given radius. The logarithmic capacity of the boundary is bounded by
 * the radius of any enclosing disk, so radius_bound < 1 guarantees the
 * coercivity of the single-layer form. Polygons already inside the bound
 * are returned unchanged.
 */
template <class Scalar>
Polygon<Scalar> scale_for_capacity(const Polygon<Scalar>& p, Scalar radius_bound) {
  if (!(radius_bound > Scalar(0) && radius_bound < Scalar(1)))
    throw std::invalid_argument("scale_for_capacity: radius bound must lie in (0, 1)");
  const Scalar r = p.enclosing_radius();
  if (r <= radius_bound) return p;
  return scale_polygon(p, radius_bound / r);
}

enum class MeshKind { Uniform, Graded, Combined };

/**
 * Partition of the boundary into arclength elements. Breakpoints are global
 * arclength coordinates; every polygon vertex is a breakpoint, so each
 * element lies inside a single straight segment. Element i covers
 * [breakpoints[i], breakpoints[i+1]), with the final element closing the loop
 * at the perimeter.
 */
template <class Scalar>
struct Mesh {
  Polygon<Scalar> polygon;
  std::vector<Scalar> breakpoints;   // size count()+1, 0 to perimeter
  std::vector<int> element_segment;  // host segment of each element
  MeshKind kind = MeshKind::Uniform;
  int requested_n = 0;
  Scalar grading_exponent = Scalar(0);
  Scalar grading_zone = Scalar(0);
  Scalar uniform_spacing = Scalar(0);  // spacing of the uniform elements / runs

  int count() const { return static_cast<int>(element_segment.size()); }
  Scalar element_lo(int i) const { return breakpoints[i]; }
  Scalar element_hi(int i) const { return breakpoints[i + 1]; }
  Scalar element_length(int i) const { return breakpoints[i + 1] - breakpoints[i]; }
  Scalar max_element_length() const {
    Scalar h = Scalar(0);
    for (int i = 0; i < count(); ++i) h = std::max(h, element_length(i));
    return h;
  }

  /** Element owning arclength t in [0, perimeter); breakpoints belong to the element they start. */
  int locate(Scalar t) const {
    if (t < Scalar(0) || t >= polygon.perimeter)
      throw std::out_of_range("Mesh::locate: arclength outside [0, perimeter)");
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    return static_cast<int>(it - breakpoints.begin()) - 1;
  }
};

namespace detail {

template <class Scalar>
Mesh<Scalar> finalize_mesh(Polygon<Scalar> polygon, std::vector<Scalar> breakpoints) {
  Mesh<Scalar> mesh;
  mesh.polygon = std::move(polygon);
  mesh.breakpoints = std::move(breakpoints);
  const int count = static_cast<int>(mesh.breakpoints.size()) - 1;
  mesh.element_segment.resize(count);
  const Scalar tol = Scalar(1e-12) * mesh.polygon.perimeter;
  for (int i = 0; i < count; ++i) {
    if (!(mesh.breakpoints[i + 1] > mesh.breakpoints[i]))
      throw std::logic_error("mesh construction produced a non-positive element");
    const Scalar mid = (mesh.breakpoints[i] + mesh.breakpoints[i + 1]) / Scalar(2);
    mesh.element_segment[i] = mesh.polygon.segment_of(mid);
    const auto& seg = mesh.polygon.segments[mesh.element_segment[i]];
    if (mesh.breakpoints[i] < seg.arc_offset - tol ||
        mesh.breakpoints[i + 1] > seg.arc_offset + seg.length + tol)
      throw std::logic_error("mesh element straddles a vertex");
  }
  return mesh;
}

}  // namespace detail

/**
 * Uniform mesh with n elements of length perimeter/n. The spacing must place
 * a breakpoint on every vertex; otherwise the request is rejected (for the
 * L-shape this means n must be a multiple of 8).
 */
template <class Scalar>
Mesh<Scalar> uniform_mesh(const Polygon<Scalar>& p, int n) {
  if (n < p.side_count()) throw std::invalid_argument("uniform_mesh: fewer elements than sides");
  const Scalar h = p.perimeter / Scalar(n);
  std::vector<Scalar> breakpoints;
  breakpoints.reserve(n + 1);
  for (const auto& seg : p.segments) {
    const Scalar ratio = seg.length / h;
    const int m = static_cast<int>(std::lround(double(ratio)));
    if (m < 1 || std::abs(ratio - Scalar(m)) > Scalar(1e-9) * std::max(Scalar(1), ratio))
      throw std::invalid_argument(
          "uniform_mesh: spacing perimeter/" + std::to_string(n) +
          " does not place a breakpoint on every vertex");
    for (int k = 0; k < m; ++k)
      breakpoints.push_back(seg.arc_offset + seg.length * Scalar(k) / Scalar(m));
  }
  breakpoints.push_back(p.perimeter);
  Mesh<Scalar> mesh = detail::finalize_mesh(p, std::move(breakpoints));
  mesh.kind = MeshKind::Uniform;
  mesh.requested_n = n;
  mesh.uniform_spacing = h;
  return mesh;
}

namespace detail {

// Breakpoints for one segment carrying graded zones of half-width `zone` at
// both ends (distances zone*(k/m)^beta from each vertex) and `runs` uniform
// elements between them. Appends the segment's start vertex and everything up
// to but excluding its end vertex. Strong grading can place breakpoints below
// representable resolution; those are collapsed, always in favour of keeping
// the vertices themselves.
template <class Scalar>
void append_graded_segment(std::vector<Scalar>& breakpoints, const Segment<Scalar>& seg,
                           int m, Scalar beta, Scalar zone, int runs, Scalar merge_floor) {
  std::vector<Scalar> local;
  for (int k = 1; k <= m; ++k)
    local.push_back(zone * std::pow(Scalar(k) / Scalar(m), beta));
  const Scalar run_length = seg.length - Scalar(2) * zone;
  for (int k = 1; k < runs; ++k)
    local.push_back(zone + run_length * Scalar(k) / Scalar(runs));
  for (int k = m; k >= 1; --k)
    local.push_back(seg.length - zone * std::pow(Scalar(k) / Scalar(m), beta));

  breakpoints.push_back(seg.arc_offset);  // the start vertex always survives
  for (const Scalar t : local) {
    if (t < merge_floor || t > seg.length - merge_floor) continue;
    const Scalar global = seg.arc_offset + t;
    if (global - breakpoints.back() >= merge_floor) breakpoints.push_back(global);
  }
}

template <class Scalar>
Mesh<Scalar> build_graded(const Polygon<Scalar>& p, int n, Scalar beta, Scalar zone,
                          bool match_uniform_spacing) {
  if (!(beta >= Scalar(1))) throw std::invalid_argument("graded mesh: exponent must be >= 1");
  if (!(zone > Scalar(0))) throw std::invalid_argument("graded mesh: zone must be positive");
  for (const auto& seg : p.segments)
    if (!(Scalar(2) * zone < seg.length))
      throw std::invalid_argument("graded mesh: zones overlap on a segment");

  const Scalar h = p.perimeter / Scalar(n);
  const Scalar merge_floor = Scalar(1e-10) * p.perimeter;
  std::vector<Scalar> breakpoints;
  breakpoints.reserve(2 * n);
  for (const auto& seg : p.segments) {
    const Scalar run_length = seg.length - Scalar(2) * zone;
    int runs, m;
    if (match_uniform_spacing) {
      const Scalar ratio = run_length / h;
      runs = static_cast<int>(std::lround(double(ratio)));
      if (runs < 1 || std::abs(ratio - Scalar(runs)) > Scalar(1e-9) * std::max(Scalar(1), ratio))
        throw std::invalid_argument(
            "combined mesh: uniform spacing perimeter/" + std::to_string(n) +
            " does not fit the runs between graded zones");
      m = std::max(1, static_cast<int>(std::ceil(double(beta * zone / h) - 1e-12)));
    } else {
      runs = std::max(1, static_cast<int>(std::lround(double(run_length / h))));
      m = std::max(1, static_cast<int>(std::lround(double(zone / h))));
    }
    detail::append_graded_segment(breakpoints, seg, m, beta, zone, runs, merge_floor);
  }
  if (p.perimeter - breakpoints.back() < merge_floor) breakpoints.pop_back();
  breakpoints.push_back(p.perimeter);
  Mesh<Scalar> mesh = detail::finalize_mesh(p, std::move(breakpoints));
  mesh.kind = match_uniform_spacing ? MeshKind::Combined : MeshKind::Graded;
  mesh.requested_n = n;
  mesh.grading_exponent = beta;
  mesh.grading_zone = zone;
  mesh.uniform_spacing = h;
  return mesh;
}

}  // namespace detail

/**
 * Mesh graded algebraically toward every vertex: within distance `zone` of a
 * vertex the breakpoints sit at zone*(k/m)^beta, uniform elements elsewhere.
 * The per-zone count m keeps the total element count near n by redistributing
 * the uniform budget, so element sizes jump by about a factor beta at the
 * zone boundary.
 */
template <class Scalar>
Mesh<Scalar> graded_mesh(const Polygon<Scalar>& p, int n, Scalar beta, Scalar zone) {
  return detail::build_graded(p, n, beta, zone, false);
}

/**
 * Graded zones combined with exactly uniform runs of spacing perimeter/n
 * between them. The per-zone count is chosen so the largest graded element
 * matches the uniform spacing; the total element count therefore exceeds n
 * (it is reported by the mesh). This is the layout the smoothing operator
 * expects: a locally uniform grid away from the corners, fully resolved
 * corner singularities inside the zones.
 */
template <class Scalar>
Mesh<Scalar> combined_mesh(const Polygon<Scalar>& p, int n, Scalar beta, Scalar zone) {
  return detail::build_graded(p, n, beta, zone, true);
}

/**
 * The boundary with a neighbourhood of every corner removed: on each segment
 * the interval [trim, length - trim] in local arclength. Intervals collapse
 * to empty (and are flagged) when the trim eats a whole segment.
 */
template <class Scalar>
struct ObservationRegion {
  struct Interval {
    int segment;
    Scalar lo, hi;  // global arclength, lo <= hi
    bool empty;
  };
  std::vector<Interval> intervals;
  Scalar trim = Scalar(0);

  Scalar total_measure() const {
    Scalar m = Scalar(0);
    for (const auto& iv : intervals)
      if (!iv.empty) m += iv.hi - iv.lo;
    return m;
  }
};

template <class Scalar>
ObservationRegion<Scalar> trim_region(const Polygon<Scalar>& p, Scalar trim) {
  if (trim < Scalar(0)) throw std::invalid_argument("trim_region: trim must be non-negative");
  ObservationRegion<Scalar> region;
  region.trim = trim;
  for (int j = 0; j < p.side_count(); ++j) {
    const auto& seg = p.segments[j];
    typename ObservationRegion<Scalar>::Interval iv;
    iv.segment = j;
    iv.lo = seg.arc_offset + trim;
    iv.hi = seg.arc_offset + seg.length - trim;
    iv.empty = !(iv.lo < iv.hi);
    if (iv.empty) iv.lo = iv.hi = seg.arc_offset + seg.length / Scalar(2);
    region.intervals.push_back(iv);
  }
  if (region.total_measure() == Scalar(0))
    throw std::invalid_argument("trim_region: trim " + std::to_string(double(trim)) +
                                " leaves no observation region (longest side is " +
                                std::to_string(double(p.longest_side())) + ")");
  return region;
}

using Polygond = Polygon<double>;
using Meshd = Mesh<double>;

}  // namespace polybem
