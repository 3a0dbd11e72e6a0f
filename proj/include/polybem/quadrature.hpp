#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace polybem {

/** Gauss-Legendre rule on the reference interval [-1, 1]. */
template <class Scalar>
struct QuadRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  int size() const { return static_cast<int>(nodes.size()); }
};

namespace detail {

// Legendre polynomial P_n and derivative at x via the three-term recurrence.
template <class Scalar>
std::pair<Scalar, Scalar> legendre_with_derivative(int n, Scalar x) {
  Scalar p_prev = Scalar(1);
  Scalar p = x;
  for (int k = 2; k <= n; ++k) {
    Scalar p_next = ((Scalar(2 * k - 1)) * x * p - Scalar(k - 1) * p_prev) / Scalar(k);
    p_prev = p;
    p = p_next;
  }
  Scalar dp = Scalar(n) * (x * p - p_prev) / (x * x - Scalar(1));
  return {p, dp};
}

template <class Scalar>
QuadRule<Scalar> compute_gauss_legendre(int n) {
  QuadRule<Scalar> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = Scalar(0);
    rule.weights[0] = Scalar(2);
    return rule;
  }
  const Scalar pi = Scalar(3.14159265358979323846264338327950288L);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi-type initial guess, then Newton until the update stalls.
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dx = Scalar(1);
    for (int iter = 0; iter < 100 && std::abs(dx) > Scalar(1e-15); ++iter) {
      auto [p, dp] = legendre_with_derivative(n, x);
      dx = -p / dp;
      x += dx;
    }
    auto [p, dp] = legendre_with_derivative(n, x);
    (void)p;
    const Scalar w = Scalar(2) / ((Scalar(1) - x * x) * dp * dp);
    // Fill symmetrically so the rule is exactly even.
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[half - 1] = Scalar(0);
  return rule;
}

}  // namespace detail

/**
 * Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
 * exact for polynomials of degree 2n-1. Rules are cached; the cache
 * is shared across threads.
 */
template <class Scalar>
const QuadRule<Scalar>& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
  static std::map<int, QuadRule<Scalar>> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre<Scalar>(n)).first;
  return it->second;
}

/** Integral of f over [a, b] with a fixed Gauss-Legendre rule. */
template <class Scalar, class F>
Scalar integrate(const QuadRule<Scalar>& rule, F&& f, Scalar a, Scalar b) {
  const Scalar mid = (a + b) / Scalar(2);
  const Scalar half = (b - a) / Scalar(2);
  Scalar sum = Scalar(0);
  for (int i = 0; i < rule.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return sum * half;
}

template <class Scalar>
struct AdaptiveResult {
  Scalar value = Scalar(0);
  Scalar error_estimate = Scalar(0);
  bool converged = false;
  long evaluations = 0;
  int max_depth_reached = 0;
};

/**
 * Globally adaptive integration of f over [a, b] by interval bisection
 * with an embedded 8/16-point Gauss pair. The interval with the largest
 * error estimate is split first, so integrable endpoint singularities
 * (log r, r^{-2/3}, ...) are refined geometrically toward the endpoint.
 *
 * Stops when the accumulated estimate drops below
 *   max(rel_tol * |value|, abs_tol).
 * Intervals are never split beyond max_depth bisections or below a width
 * of 1e-15 * (b - a); if the tolerance is still not met once every hot
 * interval is frozen, the result is returned with converged = false.
 */
template <class Scalar, class F>
AdaptiveResult<Scalar> adaptive_integrate(F&& f, Scalar a, Scalar b, Scalar rel_tol,
                                          Scalar abs_tol = Scalar(0), int max_depth = 52) {
  const QuadRule<Scalar>& coarse = gauss_legendre<Scalar>(8);
  const QuadRule<Scalar>& fine = gauss_legendre<Scalar>(16);

  struct Piece {
    Scalar lo, hi, value, error;
    int depth;
    bool operator<(const Piece& other) const { return error < other.error; }
  };

  AdaptiveResult<Scalar> result;
  const Scalar width_floor = Scalar(1e-15) * std::abs(b - a);

  auto evaluate_piece = [&](Scalar lo, Scalar hi, int depth) {
    const Scalar coarse_value = integrate(coarse, f, lo, hi);
    const Scalar fine_value = integrate(fine, f, lo, hi);
    result.evaluations += coarse.size() + fine.size();
    return Piece{lo, hi, fine_value, std::abs(fine_value - coarse_value), depth};
  };

  std::priority_queue<Piece> active;
  active.push(evaluate_piece(a, b, 0));
  Scalar frozen_value = Scalar(0);
  Scalar frozen_error = Scalar(0);
  Scalar active_value = active.top().value;
  Scalar active_error = active.top().error;
  constexpr int kMaxPieces = 40000;
  int pieces = 1;

  auto tolerance = [&]() {
    const Scalar total = std::abs(frozen_value + active_value);
    return std::max(rel_tol * total, abs_tol);
  };

  while (!active.empty()) {
    // The Gauss pair under-reports the deficit of pieces holding an endpoint
    // singularity by a constant factor, so accept only with a margin.
    if (frozen_error + active_error <= tolerance() / Scalar(2)) break;
    Piece worst = active.top();
    if (!(worst.error > Scalar(0)) || std::isnan(worst.error)) break;
    active.pop();
    active_value -= worst.value;
    active_error -= worst.error;
    const Scalar width = worst.hi - worst.lo;
    if (worst.depth >= max_depth || width <= width_floor || pieces >= kMaxPieces) {
      frozen_value += worst.value;
      frozen_error += worst.error;
      result.max_depth_reached = std::max(result.max_depth_reached, worst.depth);
      continue;
    }
    const Scalar mid = worst.lo + width / Scalar(2);
    Piece left = evaluate_piece(worst.lo, mid, worst.depth + 1);
    Piece right = evaluate_piece(mid, worst.hi, worst.depth + 1);
    ++pieces;
    result.max_depth_reached = std::max(result.max_depth_reached, worst.depth + 1);
    active_value += left.value + right.value;
    active_error += left.error + right.error;
    active.push(left);
    active.push(right);
  }

  result.value = frozen_value + active_value;
  result.error_estimate = frozen_error + active_error;
  result.converged = !std::isnan(result.error_estimate) &&
                     result.error_estimate <= std::max(rel_tol * std::abs(result.value), abs_tol);
  return result;
}

/** adaptive_integrate that throws when the tolerance cannot be certified. */
template <class Scalar, class F>
Scalar adaptive_integrate_or_throw(F&& f, Scalar a, Scalar b, Scalar rel_tol,
                                   Scalar abs_tol = Scalar(0), int max_depth = 52) {
  auto result = adaptive_integrate(std::forward<F>(f), a, b, rel_tol, abs_tol, max_depth);
  if (!result.converged)
    throw std::runtime_error("adaptive_integrate: tolerance not met before subdivision limit");
  return result.value;
}

}  // namespace polybem
