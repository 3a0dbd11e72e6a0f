#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "polybem/geometry.hpp"
#include "polybem/quadrature.hpp"

namespace polybem {

enum class PairClass { Coincident, Adjacent, Separated };

/** Relation of two mesh elements: identical, sharing one breakpoint, or disjoint. */
template <class Scalar>
PairClass classify_pair(const Mesh<Scalar>& mesh, int i, int j) {
  if (i == j) return PairClass::Coincident;
  const int n = mesh.count();
  const int lo = std::min(i, j), hi = std::max(i, j);
  if (hi - lo == 1 || (lo == 0 && hi == n - 1)) return PairClass::Adjacent;
  return PairClass::Separated;
}

namespace detail {

// Antiderivative of log(u^2 + q^2): F(u) = u log(u^2+q^2) - 2u + 2q atan(u/q).
template <class Scalar>
Scalar log_sq_antiderivative(Scalar u, Scalar q) {
  if (u == Scalar(0) && q == Scalar(0)) return Scalar(0);
  const Scalar atan_part = q > Scalar(0) ? Scalar(2) * q * std::atan(u / q) : Scalar(0);
  return u * std::log(u * u + q * q) - Scalar(2) * u + atan_part;
}

// Exact integral of log|x - y| over the straight piece y(t) = a + t*d, t in [0, len].
template <class Scalar>
Scalar log_distance_integral(const Vec2<Scalar>& x, const Vec2<Scalar>& a,
                             const Vec2<Scalar>& d, Scalar len) {
  const Vec2<Scalar> w = x - a;
  const Scalar p = w.dot(d);
  const Scalar q = std::sqrt(std::max(w.squaredNorm() - p * p, Scalar(0)));
  return (log_sq_antiderivative(len - p, q) - log_sq_antiderivative(-p, q)) / Scalar(2);
}

template <class Scalar>
struct ElementGeometry {
  Vec2<Scalar> start;
  Vec2<Scalar> tangent;
  Scalar length;
};

template <class Scalar>
ElementGeometry<Scalar> element_geometry(const Mesh<Scalar>& mesh, int i) {
  const auto& seg = mesh.polygon.segments[mesh.element_segment[i]];
  const Scalar local = mesh.element_lo(i) - seg.arc_offset;
  return {seg.point_at_local(local), seg.tangent, mesh.element_length(i)};
}

}  // namespace detail

/**
 * Galerkin entry of the single-layer operator with kernel -(1/pi) log|x-y|
 * for piecewise-constant trial and test functions:
 *
 *   V_ij = -(1/pi) int_{e_i} int_{e_j} log|x - y| ds_y ds_x.
 *
 * The inner integral over the straight element e_j is evaluated in closed
 * form. Coincident entries reduce to -(1/pi) h^2 (log h - 3/2). For the
 * remaining outer integral, separated pairs use a 16-point Gauss rule;
 * adjacent pairs use 24 points on four panels shrinking geometrically toward
 * the shared breakpoint, where the integrand has a weak (s log s) kink.
 * Entries are computed in a canonical index order, so V_ij == V_ji exactly.
 */
template <class Scalar>
Scalar single_layer_entry(const Mesh<Scalar>& mesh, int i, int j) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= mesh.count()) throw std::out_of_range("single_layer_entry: element index");

  if (i == j) {
    const Scalar h = mesh.element_length(i);
    return -(h * h) * (std::log(h) - Scalar(1.5)) / pi;
  }

  const auto inner = detail::element_geometry(mesh, j);
  const auto outer = detail::element_geometry(mesh, i);
  const auto integrand = [&](Scalar s) {
    const Vec2<Scalar> x = outer.start + s * outer.tangent;
    return detail::log_distance_integral(x, inner.start, inner.tangent, inner.length);
  };

  const PairClass cls = classify_pair(mesh, i, j);
  if (cls == PairClass::Separated) {
    const auto& rule = gauss_legendre<Scalar>(16);
    return -integrate(rule, integrand, Scalar(0), outer.length) / pi;
  }

  // Shared breakpoint: either e_i's upper end meets e_j, or the pair wraps
  // around the arclength origin and e_i's lower end meets e_j.
  const bool shared_at_upper = (j == i + 1);
  const auto& rule = gauss_legendre<Scalar>(24);
  const Scalar len = outer.length;
  // Distances from the shared point: panels [0, L/1000], ..., [L/10, L].
  const Scalar boundaries[5] = {Scalar(0), len * Scalar(1e-3), len * Scalar(1e-2),
                                len * Scalar(1e-1), len};
  Scalar sum = Scalar(0);
  for (int panel = 0; panel < 4; ++panel) {
    const Scalar lo = shared_at_upper ? len - boundaries[panel + 1] : boundaries[panel];
    const Scalar hi = shared_at_upper ? len - boundaries[panel] : boundaries[panel + 1];
    sum += integrate(rule, integrand, lo, hi);
  }
  return -sum / pi;
}

/** Dense Galerkin matrix of the single-layer operator; symmetric by construction. */
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> assemble_matrix(const Mesh<Scalar>& mesh) {
  const int n = mesh.count();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const Scalar value = single_layer_entry(mesh, i, j);
      matrix(i, j) = value;
      matrix(j, i) = value;
    }
  return matrix;
}

namespace detail {

// Composite Gauss panels on [0, len] shrinking geometrically (ratio 1/2)
// toward both endpoints. depth_lo/depth_hi control how far the refinement
// descends at each end.
template <class Scalar, class F>
Scalar integrate_graded_panels(F&& f, Scalar len, int depth_lo, int depth_hi,
                               const QuadRule<Scalar>& rule) {
  Scalar sum = Scalar(0);
  const Scalar mid = len / Scalar(2);
  Scalar edge = mid;
  for (int k = 1; k <= depth_lo; ++k) {
    const Scalar next = k == depth_lo ? Scalar(0) : mid * std::ldexp(Scalar(1), -k);
    sum += integrate(rule, f, next, edge);
    edge = next;
  }
  edge = mid;
  for (int k = 1; k <= depth_hi; ++k) {
    const Scalar next = k == depth_hi ? len : len - mid * std::ldexp(Scalar(1), -k);
    sum += integrate(rule, f, edge, next);
    edge = next;
  }
  return sum;
}

template <class Scalar>
int panel_depth(Scalar len, Scalar distance, Scalar rel_tol) {
  // Enough levels that r^{2/3}-type boundary data converges below rel_tol,
  // plus extra levels when the evaluation point sits close to this endpoint.
  const int base = std::max(14, static_cast<int>(std::ceil(0.62 * std::log2(1.0 / double(rel_tol)))));
  int extra = 0;
  const Scalar floor_dist = Scalar(1e-14) * std::max(len, Scalar(1));
  if (distance < len) extra = static_cast<int>(std::ceil(std::log2(double(len / std::max(distance, floor_dist)))));
  return std::min(base + std::max(extra, 0), 50);
}

template <class Scalar>
bool element_touches_vertex(const Mesh<Scalar>& mesh, int i) {
  const auto& seg = mesh.polygon.segments[mesh.element_segment[i]];
  const Scalar tol = Scalar(1e-12) * mesh.polygon.perimeter;
  return std::abs(mesh.element_lo(i) - seg.arc_offset) <= tol ||
         std::abs(mesh.element_hi(i) - (seg.arc_offset + seg.length)) <= tol;
}

// Keeps deep adaptive quadrature from evaluating an integrand exactly on an
// element endpoint: nodes generated at extreme subdivision depths can round
// onto the endpoint arclength, and on vertex elements that means evaluating
// a singular density or an angle-dependent kernel limit at the corner itself.
// The frozen sliver is orders of magnitude below every quadrature tolerance.
template <class Scalar>
Scalar pull_into_interval(Scalar t, Scalar lo, Scalar hi) {
  const Scalar guard = Scalar(1e-13) * (Scalar(1) + std::abs(hi));
  if (!(hi - lo > Scalar(2) * guard)) return (lo + hi) / Scalar(2);
  return std::min(std::max(t, lo + guard), hi - guard);
}

}  // namespace detail

/**
 * Double-layer potential with kernel -(1/pi) d/dn_y log|x-y| applied to a
 * boundary function g and evaluated at a boundary point x:
 *
 *   (Kg)(x) = -(1/pi) sum_m int_{segment m} (n_y . (y - x)) / |x-y|^2 g(y) ds_y.
 *
 * The segment carrying x is skipped (its kernel vanishes identically there);
 * x must not be a vertex. Each remaining segment is integrated by composite
 * Gauss panels graded toward both segment ends, which resolves corner
 * singularities of g as well as the near-singular kernel when x approaches a
 * shared vertex. rel_tol steers the grading depth.
 */
template <class Scalar, class G>
Scalar double_layer_apply(const Polygon<Scalar>& p, G&& g, const Vec2<Scalar>& x,
                          int host_segment, Scalar rel_tol = Scalar(1e-10)) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  if (host_segment < 0 || host_segment >= p.side_count())
    throw std::out_of_range("double_layer_apply: segment index");
  for (const auto& v : p.vertices)
    if ((x - v).squaredNorm() == Scalar(0))
      throw std::invalid_argument("double_layer_apply: evaluation point must not be a vertex");

  const auto& rule = gauss_legendre<Scalar>(16);
  Scalar total = Scalar(0);
  for (int m = 0; m < p.side_count(); ++m) {
    if (m == host_segment) continue;
    const auto& seg = p.segments[m];
    const Vec2<Scalar> w = x - seg.start;
    const Scalar e = -seg.outward_normal.dot(w);  // n_y . (y - x), constant along seg
    if (e == Scalar(0)) continue;
    const Scalar proj = seg.tangent.dot(w);
    // e is the signed distance from x to the segment line, so e^2 is the
    // squared offset; subtracting proj^2 from |w|^2 instead cancels badly
    // near a shared vertex and can collapse to zero.
    const Scalar q2 = e * e;
    const auto integrand = [&](Scalar t) {
      const Scalar dt = t - proj;
      return g(seg.point_at_local(t)) / (dt * dt + q2);
    };
    const int depth_lo = detail::panel_depth(seg.length, (x - seg.start).norm(), rel_tol);
    const int depth_hi = detail::panel_depth(seg.length, (x - seg.end).norm(), rel_tol);
    total += e * detail::integrate_graded_panels(integrand, seg.length, depth_lo, depth_hi, rule);
  }
  return -total / pi;
}

/**
 * Right-hand-side vector b_i = int_{e_i} f ds. Elements whose closure touches
 * a polygon vertex are integrated adaptively (boundary data may lose
 * smoothness at corners); all others use a fixed 16-point Gauss rule.
 * f receives the evaluation point and its host segment.
 */
template <class Scalar, class F>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> assemble_rhs(const Mesh<Scalar>& mesh, F&& f,
                                                      Scalar rel_tol = Scalar(1e-10)) {
  const int n = mesh.count();
  const Polygon<Scalar>& p = mesh.polygon;
  const auto& rule = gauss_legendre<Scalar>(16);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b(n);

  for (int i = 0; i < n; ++i) {
    const int seg_index = mesh.element_segment[i];
    const auto& seg = p.segments[seg_index];
    const Scalar lo = mesh.element_lo(i), hi = mesh.element_hi(i);
    const auto integrand = [&](Scalar t) {
      t = detail::pull_into_interval(t, lo, hi);
      return f(seg.point_at_local(t - seg.arc_offset), seg_index);
    };
    if (detail::element_touches_vertex(mesh, i)) {
      auto result = adaptive_integrate(integrand, lo, hi, rel_tol);
      const Scalar acceptable = std::max(Scalar(1e-12), Scalar(1e-8) * std::abs(result.value));
      if (!result.converged && !(result.error_estimate <= acceptable))
        throw std::runtime_error("assemble_rhs: adaptive integration failed on element " +
                                 std::to_string(i));
      b[i] = result.value;
    } else {
      b[i] = integrate(rule, integrand, lo, hi);
    }
  }
  return b;
}

}  // namespace polybem
