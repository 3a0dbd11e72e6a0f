#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "polybem/geometry.hpp"
#include "polybem/operators.hpp"

namespace polybem {

/**
 * Harmonic test problem with a prescribed corner singularity.
 *
 * Around the chosen vertex z_c, in a frame rotated so the outgoing edge lies
 * along the positive real axis, the potential is
 *
 *   g(z) = Im (e^{-i theta0} (z - z_c))^mu = r^mu sin(mu phi),
 *
 * with the angle phi measured from the outgoing edge and the branch cut
 * placed along the bisector of the exterior wedge, so g is smooth on the
 * closed domain. The Neumann density psi = dg/dn behaves like r^{mu-1} at the
 * vertex. For Dirichlet data g, the single-layer density solves
 *
 *   V psi = (I + K) g
 *
 * with K the double-layer operator, which provides the right-hand side.
 */
template <class Scalar>
class HarmonicCornerProblem {
 public:
  HarmonicCornerProblem(const Polygon<Scalar>& polygon, int corner, Scalar exponent)
      : polygon_(polygon), corner_(corner), mu_(exponent) {
    if (corner < 0 || corner >= polygon.side_count())
      throw std::out_of_range("HarmonicCornerProblem: corner index");
    if (!(exponent > Scalar(0)))
      throw std::invalid_argument("HarmonicCornerProblem: exponent must be positive");
    center_ = polygon.vertices[corner];
    frame_cos_ = polygon.segments[corner].tangent.x();
    frame_sin_ = polygon.segments[corner].tangent.y();
    const Scalar beta = polygon.interior_angles[corner];
    cut_angle_ = -(Scalar(2) * std::numbers::pi_v<Scalar> - beta) / Scalar(2);
  }

  const Polygon<Scalar>& polygon() const { return polygon_; }
  int corner() const { return corner_; }
  Scalar exponent() const { return mu_; }
  Scalar singular_radius(const Vec2<Scalar>& x) const { return (x - center_).norm(); }

  /** Dirichlet boundary data (the harmonic potential itself). */
  Scalar dirichlet(const Vec2<Scalar>& x) const {
    const auto [r, phi] = polar(x);
    if (r == Scalar(0)) return Scalar(0);
    return std::pow(r, mu_) * std::sin(mu_ * phi);
  }

  /** Gradient of the potential; diverges like r^{mu-1} at the corner. */
  Vec2<Scalar> gradient(const Vec2<Scalar>& x) const {
    const auto [r, phi] = polar(x);
    if (!(r > Scalar(0)))
      throw std::invalid_argument("HarmonicCornerProblem::gradient: singular at the corner itself");
    const Scalar amp = mu_ * std::pow(r, mu_ - Scalar(1));
    const Scalar a = (mu_ - Scalar(1)) * phi;
    const Scalar ca = std::cos(a), sa = std::sin(a);
    // Derivative of the analytic map, rotated back to world coordinates.
    return {amp * (frame_cos_ * sa - frame_sin_ * ca),
            amp * (frame_cos_ * ca + frame_sin_ * sa)};
  }

  /** Exact density psi = n . grad g on the given boundary segment. */
  Scalar density(const Vec2<Scalar>& x, int segment) const {
    return polygon_.segments[segment].outward_normal.dot(gradient(x));
  }

  /** Right-hand side f = g + Kg of the single-layer equation. */
  Scalar rhs(const Vec2<Scalar>& x, int segment, Scalar rel_tol = Scalar(1e-10)) const {
    const auto g = [this](const Vec2<Scalar>& y) { return dirichlet(y); };
    return dirichlet(x) + double_layer_apply(polygon_, g, x, segment, rel_tol);
  }

 private:
  std::pair<Scalar, Scalar> polar(const Vec2<Scalar>& x) const {
    const Vec2<Scalar> w = x - center_;
    const Scalar wx = frame_cos_ * w.x() + frame_sin_ * w.y();
    const Scalar wy = frame_cos_ * w.y() - frame_sin_ * w.x();
    const Scalar r = w.norm();
    Scalar phi = std::atan2(wy, wx);
    if (phi < cut_angle_) phi += Scalar(2) * std::numbers::pi_v<Scalar>;
    return {r, phi};
  }

  Polygon<Scalar> polygon_;
  int corner_;
  Scalar mu_;
  Vec2<Scalar> center_;
  Scalar frame_cos_, frame_sin_, cut_angle_;
};

template <class Scalar>
HarmonicCornerProblem<Scalar> make_corner_problem(const Polygon<Scalar>& polygon, int corner,
                                                  Scalar exponent) {
  return HarmonicCornerProblem<Scalar>(polygon, corner, exponent);
}

}  // namespace polybem
