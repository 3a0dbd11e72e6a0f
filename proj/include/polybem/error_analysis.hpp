#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "polybem/galerkin.hpp"
#include "polybem/geometry.hpp"
#include "polybem/quadrature.hpp"

namespace polybem {

template <class Scalar>
struct RegionPiece {
  int element;
  Scalar lo, hi;  // arclength bounds, contained in the element
};

/** Intersect an observation region with the mesh elements. */
template <class Scalar>
std::vector<RegionPiece<Scalar>> region_pieces(const ObservationRegion<Scalar>& region,
                                               const Mesh<Scalar>& mesh) {
  std::vector<RegionPiece<Scalar>> pieces;
  for (const auto& interval : region.intervals) {
    if (interval.empty) continue;
    int e = mesh.locate(interval.lo);
    while (e < mesh.count() && mesh.element_lo(e) < interval.hi) {
      const Scalar lo = std::max(interval.lo, mesh.element_lo(e));
      const Scalar hi = std::min(interval.hi, mesh.element_hi(e));
      if (hi > lo) pieces.push_back({e, lo, hi});
      ++e;
    }
  }
  return pieces;
}

namespace detail {

// Composite Gauss integration of f over [lo, hi] with panels halving toward
// the vertex end, ending in a directly integrated stub. Resolves integrable
// endpoint singularities such as r^{-2/3}.
template <class Scalar, class F>
Scalar integrate_toward_endpoint(F&& f, Scalar lo, Scalar hi, bool vertex_at_lo,
                                 const QuadRule<Scalar>& rule, int levels = 40) {
  const Scalar len = hi - lo;
  Scalar sum = Scalar(0);
  Scalar width = len;
  for (int k = 0; k < levels; ++k) {
    const Scalar next = width / Scalar(2);
    if (vertex_at_lo)
      sum += integrate(rule, f, lo + next, lo + width);
    else
      sum += integrate(rule, f, hi - width, hi - next);
    width = next;
  }
  if (vertex_at_lo)
    sum += integrate(rule, f, lo, lo + width);
  else
    sum += integrate(rule, f, hi - width, hi);
  return sum;
}

}  // namespace detail

/**
 * L2 error of the piecewise-constant density on an observation region,
 * ||psi - psi_h||_{L2(Gamma_a)}. Pieces whose end lies on a polygon vertex
 * (only possible for trim 0) are integrated with panels graded toward the
 * vertex, where the squared density may behave like r^{-2/3}.
 */
template <class Scalar>
Scalar local_l2_error(const GalerkinSolution<Scalar>& solution,
                      const HarmonicCornerProblem<Scalar>& problem,
                      const ObservationRegion<Scalar>& region, int order = 16) {
  const auto& mesh = solution.mesh;
  const auto& rule = gauss_legendre<Scalar>(order);
  const Scalar vertex_tol = Scalar(1e-12) * mesh.polygon.perimeter;
  Scalar sum = Scalar(0);
  for (const auto& piece : region_pieces(region, mesh)) {
    const int seg_index = mesh.element_segment[piece.element];
    const auto& seg = mesh.polygon.segments[seg_index];
    const Scalar c = solution.coefficients[piece.element];
    const auto squared = [&](Scalar t) {
      const Scalar d = problem.density(seg.point_at_local(t - seg.arc_offset), seg_index) - c;
      return d * d;
    };
    const bool lo_vertex = std::abs(piece.lo - seg.arc_offset) <= vertex_tol;
    const bool hi_vertex = std::abs(piece.hi - (seg.arc_offset + seg.length)) <= vertex_tol;
    if (lo_vertex && hi_vertex) {
      const Scalar mid = (piece.lo + piece.hi) / Scalar(2);
      sum += detail::integrate_toward_endpoint(squared, piece.lo, mid, true, rule);
      sum += detail::integrate_toward_endpoint(squared, mid, piece.hi, false, rule);
    } else if (lo_vertex || hi_vertex) {
      sum += detail::integrate_toward_endpoint(squared, piece.lo, piece.hi, lo_vertex, rule);
    } else {
      sum += integrate(rule, squared, piece.lo, piece.hi);
    }
  }
  return std::sqrt(sum);
}

/** Estimated order of convergence from errors on meshes refined by `ratio`. */
template <class Scalar>
Scalar eoc(Scalar coarse_error, Scalar fine_error, Scalar ratio = Scalar(2)) {
  if (!(coarse_error > Scalar(0)) || !(fine_error > Scalar(0)))
    throw std::invalid_argument("eoc: errors must be positive");
  if (!(ratio > Scalar(1))) throw std::invalid_argument("eoc: refinement ratio must exceed 1");
  return std::log(coarse_error / fine_error) / std::log(ratio);
}

/**
 * Errors of a refinement study: one row per mesh size, one column per trim
 * radius. Trim labels refer to the unit-scale polygon; physical radii are
 * label times the polygon scale.
 */
template <class Scalar>
struct ConvergenceTable {
  std::vector<int> ns;
  std::vector<Scalar> trims;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> errors;
  std::string norm_label = "L2";
  MeshKind mesh_kind = MeshKind::Uniform;
  Scalar grading_exponent = Scalar(0);
  std::optional<std::pair<int, int>> kernel;  // smoothing kernel (order, moment count)

  /** Rate observed between rows `row` and `row+1` in column `col`. */
  Scalar rate(int row, int col) const {
    const Scalar ratio = Scalar(ns[row + 1]) / Scalar(ns[row]);
    return eoc(errors(row, col), errors(row + 1, col), ratio);
  }
};

namespace detail {

inline void append_formatted(std::string& out, const char* fmt, ...) {
  char buffer[128];
  va_list args;
  va_start(args, fmt);
  vsnprintf(buffer, sizeof(buffer), fmt, args);
  va_end(args);
  out += buffer;
}

}  // namespace detail

/** Long-form CSV: one row per (N, trim) pair, rates attached to the finer row. */
template <class Scalar>
std::string render_csv(const ConvergenceTable<Scalar>& table) {
  std::string out = "N,a,error,eoc\n";
  const int rows = static_cast<int>(table.ns.size());
  for (int col = 0; col < static_cast<int>(table.trims.size()); ++col)
    for (int row = 0; row < rows; ++row) {
      detail::append_formatted(out, "%d,%g,%.10e", table.ns[row], double(table.trims[col]),
                               double(table.errors(row, col)));
      if (row > 0)
        detail::append_formatted(out, ",%.6f", double(table.rate(row - 1, col)));
      else
        out += ",";
      out += "\n";
    }
  return out;
}

/** Markdown pivot: mesh sizes down, trims across, rate next to each error. */
template <class Scalar>
std::string render_markdown(const ConvergenceTable<Scalar>& table) {
  std::string out;
  out += table.mesh_kind == MeshKind::Uniform ? "Mesh: uniform" : "Mesh: graded toward corners";
  if (table.mesh_kind != MeshKind::Uniform)
    detail::append_formatted(out, " (beta=%g)", double(table.grading_exponent));
  out += ", norm: " + table.norm_label;
  if (table.kernel)
    detail::append_formatted(out, ", smoothing kernel (%d,%d)", table.kernel->first,
                             table.kernel->second);
  out += "\n\n";

  out += "| N |";
  for (Scalar a : table.trims) detail::append_formatted(out, " a=%g | EOC |", double(a));
  out += "\n|--:|";
  for (size_t k = 0; k < table.trims.size(); ++k) out += "--:|--:|";
  out += "\n";
  for (int row = 0; row < static_cast<int>(table.ns.size()); ++row) {
    detail::append_formatted(out, "| %d |", table.ns[row]);
    for (int col = 0; col < static_cast<int>(table.trims.size()); ++col) {
      detail::append_formatted(out, " %.3e |", double(table.errors(row, col)));
      if (row > 0)
        detail::append_formatted(out, " %.2f |", double(table.rate(row - 1, col)));
      else
        out += " |";
    }
    out += "\n";
  }
  return out;
}

}  // namespace polybem
