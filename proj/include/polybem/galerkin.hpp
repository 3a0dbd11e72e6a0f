#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "polybem/geometry.hpp"
#include "polybem/operators.hpp"
#include "polybem/problems.hpp"
#include "polybem/quadrature.hpp"

namespace polybem {

template <class Scalar>
struct SolveInfo {
  Scalar relative_residual = Scalar(0);
  int refinement_steps = 0;
  bool residual_warning = false;
};

template <class Scalar>
struct GalerkinSolution {
  Mesh<Scalar> mesh;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coefficients;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs;
  int order = 1;
  SolveInfo<Scalar> info;

  /** Piecewise-constant density value at arclength t. */
  Scalar operator()(Scalar t) const { return coefficients[mesh.locate(t)]; }
};

/**
 * Solve the symmetric positive definite Galerkin system V c = b by Cholesky.
 * The system is symmetrically scaled by its diagonal first; strongly graded
 * meshes make the raw diagonal span many orders of magnitude, which the
 * scaling removes without changing the solution. One step of iterative
 * refinement is applied whenever the relative residual of the original
 * system exceeds 1e-10.
 */
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_scaled_spd(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& matrix,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b, SolveInfo<Scalar>& info) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  if ((matrix.diagonal().array() <= Scalar(0)).any())
    throw std::runtime_error(
        "solve_scaled_spd: non-positive diagonal; coercivity violated, check capacity scaling");

  const Vector scale = matrix.diagonal().array().rsqrt();
  const Matrix scaled = scale.asDiagonal() * matrix * scale.asDiagonal();
  Eigen::LLT<Matrix> llt(scaled);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "solve_scaled_spd: Cholesky failed; coercivity violated, check capacity scaling");

  Vector c = scale.asDiagonal() * llt.solve((scale.asDiagonal() * b).eval());
  const Scalar b_norm = b.norm();
  const auto rel_residual = [&](const Vector& x) {
    const Scalar r = (b - matrix * x).norm();
    return b_norm > Scalar(0) ? r / b_norm : r;
  };

  info = {};
  info.relative_residual = rel_residual(c);
  while (info.relative_residual > Scalar(1e-10) && info.refinement_steps < 2) {
    const Vector residual = b - matrix * c;
    c += scale.asDiagonal() * llt.solve((scale.asDiagonal() * residual).eval());
    info.relative_residual = rel_residual(c);
    ++info.refinement_steps;
  }
  info.residual_warning = info.relative_residual > Scalar(1e-8);
  return c;
}

/**
 * Galerkin approximation of the single-layer density with piecewise-constant
 * elements on the given mesh. Only order 1 (piecewise constants) is
 * implemented; other orders are rejected.
 */
template <class Scalar>
GalerkinSolution<Scalar> solve(const Mesh<Scalar>& mesh, const HarmonicCornerProblem<Scalar>& problem,
                               int order = 1, Scalar rhs_tol = Scalar(1e-10)) {
  if (order != 1)
    throw std::invalid_argument("solve: only piecewise-constant elements (order 1) are implemented");
  const auto matrix = assemble_matrix(mesh);
  const auto f = [&](const Vec2<Scalar>& x, int segment) { return problem.rhs(x, segment, rhs_tol); };
  const auto b = assemble_rhs(mesh, f, rhs_tol);
  GalerkinSolution<Scalar> solution{mesh, {}, b, order, {}};
  solution.coefficients = solve_scaled_spd(matrix, b, solution.info);
  return solution;
}

/**
 * Energy-norm error ||psi - psi_h||_V = sqrt(<f, psi - psi_h>), using the
 * Galerkin orthogonality of the solution. The inner product is accumulated
 * element by element as int_e f (psi - c_e) ds, so the integrand is already
 * the small difference and no large terms are subtracted. Elements touching
 * a vertex are integrated adaptively with a small absolute floor; the rest
 * use a fixed Gauss rule.
 */
template <class Scalar>
Scalar energy_error(const GalerkinSolution<Scalar>& solution,
                    const HarmonicCornerProblem<Scalar>& problem,
                    Scalar rel_tol = Scalar(1e-10)) {
  const auto& mesh = solution.mesh;
  const auto& rule = gauss_legendre<Scalar>(16);
  Scalar radicand = Scalar(0);
  Scalar magnitude = Scalar(0);
  for (int i = 0; i < mesh.count(); ++i) {
    const int seg_index = mesh.element_segment[i];
    const auto& seg = mesh.polygon.segments[seg_index];
    const Scalar c = solution.coefficients[i];
    const Scalar lo = mesh.element_lo(i), hi = mesh.element_hi(i);
    const auto integrand = [&](Scalar t) {
      t = detail::pull_into_interval(t, lo, hi);
      const Vec2<Scalar> x = seg.point_at_local(t - seg.arc_offset);
      return problem.rhs(x, seg_index, rel_tol) * (problem.density(x, seg_index) - c);
    };
    Scalar piece;
    if (detail::element_touches_vertex(mesh, i)) {
      const Scalar abs_floor =
          Scalar(1e-14) * std::max(Scalar(1), std::abs(c)) * std::max(Scalar(1), std::abs(solution.rhs[i]));
      auto result = adaptive_integrate(integrand, lo, hi, rel_tol, abs_floor);
      // The corner tail decays too slowly to meet an absolute floor within the
      // depth cap, so accept a small error relative to the piece instead.
      const Scalar acceptable =
          std::max(abs_floor * Scalar(100), Scalar(1e-6) * std::abs(result.value));
      if (!result.converged && !(result.error_estimate <= acceptable))
        throw std::runtime_error("energy_error: adaptive integration failed on element " +
                                 std::to_string(i));
      piece = result.value;
    } else {
      piece = integrate(rule, integrand, lo, hi);
    }
    radicand += piece;
    magnitude += std::abs(piece);
  }
  // The identity <f, psi - psi_h> = ||psi - psi_h||_V^2 is exact only for the
  // unperturbed Galerkin solution; rhs quadrature and solver roundoff enter
  // linearly, so the noise floor scales with |b| |c| rather than with the
  // radicand itself. Values below that are clamped, anything further negative
  // signals an inconsistent system.
  const Scalar noise = Scalar(1e-8) * solution.rhs.template lpNorm<1>() *
                       std::max(Scalar(1), solution.coefficients.template lpNorm<Eigen::Infinity>());
  const Scalar floor = Scalar(1e-12) * std::max(Scalar(1), magnitude) + noise;
  if (radicand < -floor)
    throw std::runtime_error("energy_error: negative radicand beyond tolerance");
  return std::sqrt(std::max(radicand, Scalar(0)));
}

}  // namespace polybem
