#include <polybem/geometry.hpp>
#include <polybem/quadrature.hpp>

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

using namespace polybem;

namespace {

std::vector<double> sorted_nodes(const QuadRule<double>& rule) {
  std::vector<double> nodes(rule.nodes.data(), rule.nodes.data() + rule.nodes.size());
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

Polygond unit_square() {
  return make_polygon<double>({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
}

}  // namespace

TEST_CASE("gauss rules reproduce the small closed forms") {
  const auto& r1 = gauss_legendre<double>(1);
  REQUIRE(r1.size() == 1);
  CHECK(r1.nodes[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r1.weights[0] == doctest::Approx(2.0).epsilon(1e-15));

  const auto& r2 = gauss_legendre<double>(2);
  const auto n2 = sorted_nodes(r2);
  CHECK(n2[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(n2[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(r2.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r2.weights[1] == doctest::Approx(1.0).epsilon(1e-14));

  const auto& r3 = gauss_legendre<double>(3);
  const double quartic = integrate(r3, [](double x) { return x * x * x * x; }, -1.0, 1.0);
  CHECK(quartic == doctest::Approx(2.0 / 5.0).epsilon(1e-14));

  CHECK_THROWS_AS(gauss_legendre<double>(0), std::invalid_argument);
}

TEST_CASE("gauss rules are symmetric and integrate constants exactly") {
  for (int n : {2, 5, 8, 16, 31, 32}) {
    const auto& rule = gauss_legendre<double>(n);
    CHECK(rule.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
    const auto nodes = sorted_nodes(rule);
    for (int i = 0; i < n / 2; ++i)
      CHECK(nodes[i] == doctest::Approx(-nodes[n - 1 - i]).epsilon(1e-14));
  }
}

TEST_CASE("gauss rules are exact through degree 2n-1") {
  for (int n = 1; n <= 32; ++n) {
    const auto& rule = gauss_legendre<double>(n);
    const int degree = 2 * n - 1;
    const double value =
        integrate(rule, [&](double x) { return std::pow(x, degree); }, 0.0, 1.0);
    CHECK(value == doctest::Approx(1.0 / (degree + 1)).epsilon(1e-12));
  }
}

TEST_CASE("integrate maps rules onto arbitrary intervals") {
  const auto& rule = gauss_legendre<double>(4);
  const double value = integrate(rule, [](double x) { return x * x; }, 2.0, 5.0);
  CHECK(value == doctest::Approx(39.0).epsilon(1e-14));
}

TEST_CASE("adaptive integration handles endpoint singularities") {
  const auto log_result =
      adaptive_integrate([](double x) { return std::log(x); }, 0.0, 1.0, 1e-10);
  CHECK(log_result.converged);
  CHECK(log_result.value == doctest::Approx(-1.0).epsilon(1e-10));

  const auto power_result =
      adaptive_integrate([](double x) { return std::pow(x, -2.0 / 3.0); }, 0.0, 1.0, 1e-4);
  CHECK(power_result.converged);
  CHECK(power_result.value == doctest::Approx(3.0).epsilon(1e-4));

  const auto unit_result = adaptive_integrate([](double) { return 1.0; }, 0.0, 1.0, 1e-14);
  CHECK(unit_result.converged);
  CHECK(unit_result.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(unit_result.evaluations <= 48);

  const auto split_result =
      adaptive_integrate([](double x) { return 1.0 / std::sqrt(std::abs(x)); }, -1.0, 1.0, 1e-3);
  CHECK(split_result.converged);
  CHECK(split_result.value == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("adaptive integration fails loudly") {
  const auto divergent = adaptive_integrate([](double x) { return 1.0 / x; }, 0.0, 1.0, 1e-8);
  CHECK_FALSE(divergent.converged);
  CHECK_THROWS_AS(
      adaptive_integrate_or_throw([](double x) { return 1.0 / x; }, 0.0, 1.0, 1e-8),
      std::runtime_error);

  const auto poisoned = adaptive_integrate(
      [](double x) { return x < 0.5 ? std::numeric_limits<double>::quiet_NaN() : 1.0; }, 0.0,
      1.0, 1e-8);
  CHECK_FALSE(poisoned.converged);
}

TEST_CASE("l-shape construction") {
  const auto p = make_l_shape<double>();
  REQUIRE(p.side_count() == 6);
  CHECK(p.perimeter == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(p.scale == 1.0);

  const double arcs[6] = {0, 1, 2, 4, 6, 7};
  for (int j = 0; j < 6; ++j) CHECK(p.vertex_arc(j) == doctest::Approx(arcs[j]).epsilon(1e-15));

  const double pi = std::numbers::pi;
  CHECK(p.interior_angles[0] == doctest::Approx(1.5 * pi).epsilon(1e-14));
  for (int j = 1; j < 6; ++j)
    CHECK(p.interior_angles[j] == doctest::Approx(0.5 * pi).epsilon(1e-14));
  CHECK(p.singularity_index() == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  CHECK(p.segments[0].outward_normal.x() == doctest::Approx(0.0));
  CHECK(p.segments[0].outward_normal.y() == doctest::Approx(-1.0));
  CHECK(p.segments[1].outward_normal.x() == doctest::Approx(1.0));
  CHECK(p.segments[2].outward_normal.y() == doctest::Approx(1.0));

  CHECK(p.vertex_centroid().norm() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(p.enclosing_radius() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("boundary parameterization walks the l-shape counterclockwise") {
  const auto p = make_l_shape<double>();
  CHECK(p.point_at(0.5).isApprox(Vec2<double>(0.5, 0.0), 1e-14));
  CHECK(p.point_at(3.0).isApprox(Vec2<double>(0.0, 1.0), 1e-14));
  CHECK(p.point_at(6.5).isApprox(Vec2<double>(-0.5, -1.0), 1e-14));
  CHECK(p.point_at(8.0).isApprox(Vec2<double>(0.0, 0.0), 1e-14));

  CHECK(p.segment_of(0.5) == 0);
  CHECK(p.segment_of(1.0) == 1);
  CHECK(p.segment_of(3.9) == 2);
  CHECK(p.segment_of(7.5) == 5);
  CHECK_THROWS_AS(p.segment_of(-0.1), std::out_of_range);
  CHECK_THROWS_AS(p.segment_of(8.1), std::out_of_range);
}

TEST_CASE("point containment on the l-shape") {
  const auto p = make_l_shape<double>();
  CHECK(p.contains({0.5, 0.5}));
  CHECK(p.contains({-0.5, -0.5}));
  CHECK(p.contains({-0.5, 0.5}));
  CHECK_FALSE(p.contains({0.5, -0.5}));
  CHECK_FALSE(p.contains({2.0, 0.0}));
}

TEST_CASE("polygon validation rejects degenerate input") {
  CHECK_THROWS_AS(make_polygon<double>({{0, 0}, {1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_polygon<double>({{0, 0}, {0, 1}, {1, 1}, {1, 0}}),
                  std::invalid_argument);  // clockwise
  CHECK_THROWS_AS(make_polygon<double>({{0, 0}, {1, 0}, {1, 0}, {0, 1}}),
                  std::invalid_argument);  // repeated vertex
  CHECK_THROWS_AS(make_polygon<double>({{0, 0}, {1, 1}, {1, 0}, {0, 1}}),
                  std::invalid_argument);  // bowtie
}

TEST_CASE("scaling preserves shape and tracks the cumulative factor") {
  const auto p = make_l_shape<double>();
  const auto half = scale_polygon(p, 0.5);
  CHECK(half.scale == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(half.perimeter == doctest::Approx(4.0).epsilon(1e-14));
  for (int j = 0; j < 6; ++j)
    CHECK(half.interior_angles[j] == doctest::Approx(p.interior_angles[j]).epsilon(1e-13));

  const auto capped = scale_for_capacity(p, 0.4);
  CHECK(capped.scale == doctest::Approx(0.4 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(capped.enclosing_radius() == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(capped.perimeter == doctest::Approx(8.0 * 0.4 / std::sqrt(2.0)).epsilon(1e-14));

  const auto small = scale_for_capacity(capped, 0.9);
  CHECK(small.scale == capped.scale);

  CHECK_THROWS_AS(scale_for_capacity(p, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(scale_polygon(p, 0.0), std::invalid_argument);
}

TEST_CASE("uniform meshes split every segment exactly") {
  const auto p = make_l_shape<double>();
  const auto m8 = uniform_mesh(p, 8);
  REQUIRE(m8.count() == 8);
  CHECK(m8.kind == MeshKind::Uniform);
  CHECK(m8.uniform_spacing == doctest::Approx(1.0).epsilon(1e-15));
  const int segs[8] = {0, 1, 2, 2, 3, 3, 4, 5};
  for (int i = 0; i < 8; ++i) {
    CHECK(m8.element_segment[i] == segs[i]);
    CHECK(m8.element_length(i) == doctest::Approx(1.0).epsilon(1e-15));
  }

  const auto m16 = uniform_mesh(p, 16);
  REQUIRE(m16.count() == 16);
  CHECK(m16.breakpoints[2] == 1.0);
  CHECK(m16.breakpoints[4] == 2.0);
  CHECK(m16.breakpoints[8] == 4.0);
  CHECK(m16.max_element_length() == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(uniform_mesh(p, 12), std::invalid_argument);
  CHECK_THROWS_AS(uniform_mesh(p, 0), std::invalid_argument);
}

TEST_CASE("elements never straddle a vertex") {
  const auto p = make_l_shape<double>();
  for (const auto& mesh :
       {uniform_mesh(p, 16), graded_mesh(p, 64, 3.0, 0.25), combined_mesh(p, 64, 3.0, 0.25)}) {
    for (int i = 0; i < mesh.count(); ++i) {
      const auto& seg = p.segments[mesh.element_segment[i]];
      CHECK(mesh.element_lo(i) >= seg.arc_offset - 1e-12);
      CHECK(mesh.element_hi(i) <= seg.arc_offset + seg.length + 1e-12);
      CHECK(mesh.element_length(i) > 0.0);
    }
    for (int j = 0; j < p.side_count(); ++j) {
      const double arc = p.vertex_arc(j);
      bool hit = false;
      for (double b : mesh.breakpoints) hit = hit || b == arc;
      CHECK(hit);
    }
  }
}

TEST_CASE("graded meshes concentrate elements at the corners") {
  const auto p = make_l_shape<double>();
  const auto m = graded_mesh(p, 64, 3.0, 0.25);
  CHECK(m.kind == MeshKind::Graded);
  CHECK(m.requested_n == 64);
  CHECK(m.count() == 64);
  CHECK(m.grading_exponent == 3.0);

  double smallest = std::numeric_limits<double>::max();
  for (int i = 0; i < m.count(); ++i) smallest = std::min(smallest, m.element_length(i));
  CHECK(smallest == doctest::Approx(0.25 / 8.0).epsilon(1e-13));

  CHECK_THROWS_AS(graded_mesh(p, 64, 0.5, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(graded_mesh(p, 64, 3.0, 0.6), std::invalid_argument);
}

TEST_CASE("combined meshes keep the interior spacing and refine the corner zones") {
  const auto p = make_l_shape<double>();
  const auto m = combined_mesh(p, 64, 3.0, 0.25);
  CHECK(m.kind == MeshKind::Combined);
  CHECK(m.count() == 112);
  CHECK(m.uniform_spacing == doctest::Approx(0.125).epsilon(1e-15));

  double largest_graded = 0.0;
  int uniform_elements = 0;
  for (int i = 0; i < m.count(); ++i) {
    if (std::abs(m.element_length(i) - 0.125) < 1e-12)
      ++uniform_elements;
    else
      largest_graded = std::max(largest_graded, m.element_length(i));
  }
  CHECK(largest_graded <= 0.125 + 1e-12);
  CHECK(largest_graded == doctest::Approx(0.25 * (1.0 - std::pow(5.0 / 6.0, 3.0))).epsilon(1e-12));
  CHECK(uniform_elements > 0);

  CHECK_THROWS_AS(combined_mesh(p, 24, 3.0, 0.25), std::invalid_argument);
}

TEST_CASE("element lookup respects the half-open convention") {
  const auto m = uniform_mesh(make_l_shape<double>(), 16);
  CHECK(m.locate(0.0) == 0);
  CHECK(m.locate(0.49) == 0);
  CHECK(m.locate(0.5) == 1);
  CHECK(m.locate(7.999) == 15);
  CHECK_THROWS_AS(m.locate(8.0), std::out_of_range);
  CHECK_THROWS_AS(m.locate(-0.1), std::out_of_range);
}

TEST_CASE("square mesh sanity on a second polygon") {
  const auto p = unit_square();
  CHECK(p.perimeter == doctest::Approx(4.0).epsilon(1e-15));
  // The exterior opening 2*pi - pi/2 drives the index even at convex corners.
  CHECK(p.singularity_index() == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  const auto m = uniform_mesh(p, 8);
  CHECK(m.count() == 8);
  CHECK(m.uniform_spacing == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("observation regions trim symmetrically around every vertex") {
  const auto p = make_l_shape<double>();

  const auto full = trim_region(p, 0.0);
  CHECK(full.total_measure() == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(full.intervals.size() == 6);

  const auto trimmed = trim_region(p, 0.15);
  CHECK(trimmed.trim == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(trimmed.total_measure() == doctest::Approx(6.2).epsilon(1e-13));
  for (const auto& iv : trimmed.intervals) CHECK_FALSE(iv.empty);
  CHECK(trimmed.intervals[0].lo == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(trimmed.intervals[0].hi == doctest::Approx(0.85).epsilon(1e-15));

  const auto collapsed = trim_region(p, 0.5);
  CHECK(collapsed.total_measure() == doctest::Approx(2.0).epsilon(1e-13));
  int empties = 0;
  for (const auto& iv : collapsed.intervals) empties += iv.empty ? 1 : 0;
  CHECK(empties == 4);

  CHECK_THROWS_AS(trim_region(p, -0.1), std::invalid_argument);
}

TEST_CASE("regions nest and scale with the polygon") {
  const auto p = make_l_shape<double>();
  const auto wide = trim_region(p, 0.02);
  const auto narrow = trim_region(p, 0.15);
  CHECK(narrow.total_measure() < wide.total_measure());
  for (size_t k = 0; k < narrow.intervals.size(); ++k) {
    if (narrow.intervals[k].empty) continue;
    CHECK(narrow.intervals[k].lo >= wide.intervals[k].lo - 1e-15);
    CHECK(narrow.intervals[k].hi <= wide.intervals[k].hi + 1e-15);
  }

  const auto scaled = scale_for_capacity(p, 0.4);
  const auto region = trim_region(scaled, 0.15 * scaled.scale);
  CHECK(region.total_measure() == doctest::Approx(6.2 * scaled.scale).epsilon(1e-12));
}
