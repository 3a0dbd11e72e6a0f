#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "polybem/error_analysis.hpp"
#include "polybem/galerkin.hpp"
#include "polybem/geometry.hpp"
#include "polybem/quadrature.hpp"

namespace polybem {

/** Centered cardinal B-spline of order l (degree l-1), support [-l/2, l/2]. */
template <class Scalar>
Scalar bspline(int order, Scalar x) {
  if (order < 1) throw std::invalid_argument("bspline: order must be at least 1");
  const Scalar half = Scalar(order) / 2;
  if (x <= -half || x >= half) {
    // Order 1 is the box; give its endpoints the symmetric value 1/2.
    if (order == 1 && (x == -half || x == half)) return Scalar(0.5);
    return Scalar(0);
  }
  if (order == 1) return Scalar(1);
  Scalar sum = Scalar(0);
  Scalar binom = Scalar(1);
  for (int k = 0; k <= order; ++k) {
    const Scalar base = x + half - Scalar(k);
    if (base > Scalar(0)) sum += binom * std::pow(base, order - 1);
    binom *= -Scalar(order - k) / Scalar(k + 1);
  }
  Scalar factorial = Scalar(1);
  for (int k = 2; k < order; ++k) factorial *= Scalar(k);
  return sum / factorial;
}

/** Antiderivative of the order-l B-spline, normalized to run from 0 to 1. */
template <class Scalar>
Scalar bspline_cdf(int order, Scalar x) {
  if (order < 1) throw std::invalid_argument("bspline_cdf: order must be at least 1");
  const Scalar half = Scalar(order) / 2;
  if (x <= -half) return Scalar(0);
  if (x >= half) return Scalar(1);
  Scalar sum = Scalar(0);
  Scalar binom = Scalar(1);
  for (int k = 0; k <= order; ++k) {
    const Scalar base = x + half - Scalar(k);
    if (base > Scalar(0)) sum += binom * std::pow(base, order);
    binom *= -Scalar(order - k) / Scalar(k + 1);
  }
  Scalar factorial = Scalar(1);
  for (int k = 2; k <= order; ++k) factorial *= Scalar(k);
  return sum / factorial;
}

/** Exact fraction arithmetic for the small moment systems. */
struct Fraction {
  long long num = 0;
  long long den = 1;

  Fraction() = default;
  Fraction(long long n) : num(n), den(1) {}
  Fraction(long long n, long long d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw std::invalid_argument("Fraction: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  static Fraction from_product(__int128 n, __int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 a = n < 0 ? -n : n, b = d;
    while (b) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      n /= a;
      d /= a;
    }
    constexpr __int128 lim = 0x7fffffffffffffff;
    if (n > lim || n < -lim || d > lim)
      throw std::overflow_error("Fraction: value does not fit 64 bits");
    Fraction f;
    f.num = static_cast<long long>(n);
    f.den = static_cast<long long>(d);
    return f;
  }

  friend Fraction operator+(const Fraction& a, const Fraction& b) {
    return from_product(__int128(a.num) * b.den + __int128(b.num) * a.den,
                        __int128(a.den) * b.den);
  }
  friend Fraction operator-(const Fraction& a, const Fraction& b) {
    return from_product(__int128(a.num) * b.den - __int128(b.num) * a.den,
                        __int128(a.den) * b.den);
  }
  friend Fraction operator*(const Fraction& a, const Fraction& b) {
    return from_product(__int128(a.num) * b.num, __int128(a.den) * b.den);
  }
  friend Fraction operator/(const Fraction& a, const Fraction& b) {
    if (b.num == 0) throw std::invalid_argument("Fraction: division by zero");
    return from_product(__int128(a.num) * b.den, __int128(a.den) * b.num);
  }
  friend bool operator==(const Fraction& a, const Fraction& b) {
    return a.num == b.num && a.den == b.den;
  }
  bool zero() const { return num == 0; }
  double value() const { return double(num) / double(den); }
  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }
};

namespace detail {

// Central moments m_k = int x^k psi_l(x) dx, built by convolving l copies of
// the unit box; odd moments vanish by symmetry.
inline std::vector<Fraction> bspline_moments(int order, int max_k) {
  std::vector<Fraction> box(max_k + 1), m(max_k + 1);
  for (int k = 0; k <= max_k; ++k)
    box[k] = (k % 2 == 0) ? Fraction(1, (k + 1) * (1LL << k)) : Fraction(0);
  m = box;
  std::vector<long long> binom(max_k + 1);
  for (int step = 2; step <= order; ++step) {
    std::vector<Fraction> next(max_k + 1);
    for (int k = 0; k <= max_k; ++k) {
      binom[0] = 1;
      for (int j = 1; j <= k; ++j) binom[j] = binom[j - 1] * (k - j + 1) / j;
      Fraction sum(0);
      for (int j = 0; j <= k; ++j)
        if (!m[j].zero() && !box[k - j].zero()) sum = sum + Fraction(binom[j]) * m[j] * box[k - j];
      next[k] = sum;
    }
    m = next;
  }
  return m;
}

inline std::vector<Fraction> solve_fraction_system(std::vector<std::vector<Fraction>> a,
                                                   std::vector<Fraction> rhs) {
  const int n = static_cast<int>(rhs.size());
  for (int col = 0; col < n; ++col) {
    int pivot = -1;
    for (int row = col; row < n; ++row)
      if (!a[row][col].zero()) {
        pivot = row;
        break;
      }
    if (pivot < 0) throw std::runtime_error("moment system is singular");
    std::swap(a[col], a[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (int row = 0; row < n; ++row) {
      if (row == col || a[row][col].zero()) continue;
      const Fraction factor = a[row][col] / a[col][col];
      for (int k = col; k < n; ++k) a[row][k] = a[row][k] - factor * a[col][k];
      rhs[row] = rhs[row] - factor * rhs[col];
    }
  }
  std::vector<Fraction> x(n);
  for (int k = 0; k < n; ++k) x[k] = rhs[k] / a[k][k];
  return x;
}

}  // namespace detail

/**
 * Exact coefficients k_0..k_{q-1} of the symmetric smoothing kernel
 *
 *   psi(x) = k_0 psi_l(x) + sum_{j=1}^{q-1} k_j (psi_l(x-j) + psi_l(x+j)),
 *
 * determined by unit mass and vanishing even moments 2..2(q-1). Odd moments
 * vanish by symmetry, so the kernel reproduces polynomials up to degree
 * 2q-1 under convolution.
 */
inline std::vector<Fraction> kernel_coefficients_exact(int order, int moments) {
  if (order < 1 || moments < 1)
    throw std::invalid_argument("kernel_coefficients: order and moment count must be positive");
  const int q = moments;
  const auto m = detail::bspline_moments(order, 2 * (q - 1));
  std::vector<std::vector<Fraction>> a(q, std::vector<Fraction>(q));
  std::vector<Fraction> rhs(q, Fraction(0));
  rhs[0] = Fraction(1);
  for (int s = 0; s < q; ++s) {
    a[s][0] = m[2 * s];
    for (int j = 1; j < q; ++j) {
      // int (x-j)^{2s} + (x+j)^{2s} against psi_l: even binomial terms survive.
      Fraction sum(0);
      std::vector<long long> jpow(2 * s + 1, 1);
      for (int k = 1; k <= 2 * s; ++k) jpow[k] = jpow[k - 1] * j;
      long long binom = 1;
      for (int k = 0; k <= 2 * s; ++k) {
        if (k % 2 == 0 && !m[k].zero())
          sum = sum + Fraction(2 * binom) * Fraction(jpow[2 * s - k]) * m[k];
        binom = binom * (2 * s - k) / (k + 1);
      }
      a[s][j] = sum;
    }
  }
  return detail::solve_fraction_system(std::move(a), std::move(rhs));
}

template <class Scalar>
std::vector<Scalar> kernel_coefficients(int order, int moments) {
  const auto exact = kernel_coefficients_exact(order, moments);
  std::vector<Scalar> out(exact.size());
  for (size_t k = 0; k < exact.size(); ++k)
    out[k] = Scalar(exact[k].num) / Scalar(exact[k].den);
  return out;
}

/** Moment-matched smoothing kernel on a lattice of spacing `width`. */
template <class Scalar>
struct SmoothingKernel {
  int order = 2;    // underlying B-spline order l
  int moments = 2;  // number of enforced moment conditions q
  Scalar width = Scalar(1);
  std::vector<Scalar> coefficients;  // k_0..k_{q-1}

  Scalar half_support() const {
    return (Scalar(moments - 1) + Scalar(order) / 2) * width;
  }
};

template <class Scalar>
SmoothingKernel<Scalar> make_kernel(int order, int moments, Scalar width) {
  if (!(width > Scalar(0))) throw std::invalid_argument("make_kernel: width must be positive");
  return {order, moments, width, kernel_coefficients<Scalar>(order, moments)};
}

/** Kernel value at physical offset x (integrates to 1 over the line). */
template <class Scalar>
Scalar kernel_eval(const SmoothingKernel<Scalar>& kernel, Scalar x) {
  const Scalar v = x / kernel.width;
  Scalar sum = kernel.coefficients[0] * bspline(kernel.order, v);
  for (int j = 1; j < kernel.moments; ++j)
    sum += kernel.coefficients[j] *
           (bspline(kernel.order, v - Scalar(j)) + bspline(kernel.order, v + Scalar(j)));
  return sum / kernel.width;
}

/** Kernel antiderivative in lattice units: integral of the kernel up to v*width. */
template <class Scalar>
Scalar kernel_cdf(const SmoothingKernel<Scalar>& kernel, Scalar v) {
  Scalar sum = kernel.coefficients[0] * bspline_cdf(kernel.order, v);
  for (int j = 1; j < kernel.moments; ++j)
    sum += kernel.coefficients[j] *
           (bspline_cdf(kernel.order, v - Scalar(j)) + bspline_cdf(kernel.order, v + Scalar(j)));
  return sum;
}

/**
 * Convolution of the smoothing kernel with a piecewise-constant density,
 * evaluated by arclength. Valid only where the window [t - W, t + W] stays
 * inside a uniform run of elements matching the kernel width; apply()
 * enforces this for a whole observation region.
 */
template <class Scalar>
struct SmoothedSolution {
  SmoothingKernel<Scalar> kernel;
  GalerkinSolution<Scalar> solution;

  Scalar operator()(Scalar t) const {
    const auto& mesh = solution.mesh;
    const Scalar w = kernel.half_support();
    const Scalar lo = std::max(t - w, Scalar(0));
    const Scalar hi = std::min(t + w, mesh.polygon.perimeter);
    Scalar sum = Scalar(0);
    for (int e = mesh.locate(lo); e < mesh.count() && mesh.element_lo(e) < hi; ++e) {
      const Scalar a = (t - mesh.element_lo(e)) / kernel.width;
      const Scalar b = (t - mesh.element_hi(e)) / kernel.width;
      sum += solution.coefficients[e] * (kernel_cdf(kernel, a) - kernel_cdf(kernel, b));
    }
    return sum;
  }
};

/**
 * Bind the kernel to a solution after checking that every smoothing window
 * over the region stays inside a uniform-width run of elements. Rejection
 * names the trim that would make the region admissible.
 */
template <class Scalar>
SmoothedSolution<Scalar> apply(const SmoothingKernel<Scalar>& kernel,
                               const GalerkinSolution<Scalar>& solution,
                               const ObservationRegion<Scalar>& region) {
  const auto& mesh = solution.mesh;
  const Scalar w = kernel.half_support();
  const Scalar h = kernel.width;
  const Scalar width_tol = Scalar(1e-9) * h;

  for (const auto& interval : region.intervals) {
    if (interval.empty) continue;
    const Scalar lo = interval.lo - w, hi = interval.hi + w;
    Scalar deficit = Scalar(0);
    if (lo < Scalar(0) || hi > mesh.polygon.perimeter) {
      deficit = std::max(-lo, hi - mesh.polygon.perimeter);
    } else {
      const int seg = mesh.element_segment[mesh.locate(interval.lo)];
      Scalar run_lo = interval.lo, run_hi = interval.hi;
      for (int e = mesh.locate(interval.lo); e >= 0 && mesh.element_segment[e] == seg &&
                                             std::abs(mesh.element_length(e) - h) <= width_tol;
           --e)
        run_lo = mesh.element_lo(e);
      for (int e = mesh.locate(interval.lo); e < mesh.count() && mesh.element_segment[e] == seg &&
                                             std::abs(mesh.element_length(e) - h) <= width_tol;
           ++e)
        run_hi = mesh.element_hi(e);
      deficit = std::max(run_lo - lo, hi - run_hi);
    }
    if (deficit > Scalar(0)) {
      const Scalar required = region.trim + deficit;
      char msg[256];
      snprintf(msg, sizeof(msg),
               "smoothing window of half-width %.6g leaves the uniform element run on "
               "segment %d; trim of at least %.6g is required (given %.6g)",
               double(w), mesh.element_segment[mesh.locate(interval.lo)], double(required),
               double(region.trim));
      throw std::invalid_argument(msg);
    }
  }
  return {kernel, solution};
}

/**
 * L2 error of the smoothed density on the observation region,
 * ||psi - K_h psi_h||_{L2(Gamma_a)}. The smoothed density is piecewise
 * polynomial with breakpoints on the element lattice (plus element midpoints
 * for odd-order B-splines), so a fixed Gauss rule per piece is exact in the
 * quadrature sense.
 */
template <class Scalar>
Scalar postprocessed_error(const SmoothingKernel<Scalar>& kernel,
                           const GalerkinSolution<Scalar>& solution,
                           const HarmonicCornerProblem<Scalar>& problem,
                           const ObservationRegion<Scalar>& region, int order = 16) {
  const auto smoothed = apply(kernel, solution, region);
  const auto& mesh = solution.mesh;
  const auto& rule = gauss_legendre<Scalar>(order);
  Scalar sum = Scalar(0);
  for (const auto& piece : region_pieces(region, mesh)) {
    const int seg_index = mesh.element_segment[piece.element];
    const auto& seg = mesh.polygon.segments[seg_index];
    const auto squared = [&](Scalar t) {
      const Scalar d =
          smoothed(t) - problem.density(seg.point_at_local(t - seg.arc_offset), seg_index);
      return d * d;
    };
    const Scalar mid = mesh.element_lo(piece.element) + mesh.element_length(piece.element) / 2;
    if (kernel.order % 2 == 1 && piece.lo < mid && mid < piece.hi) {
      sum += integrate(rule, squared, piece.lo, mid);
      sum += integrate(rule, squared, mid, piece.hi);
    } else {
      sum += integrate(rule, squared, piece.lo, piece.hi);
    }
  }
  return std::sqrt(sum);
}

}  // namespace polybem
