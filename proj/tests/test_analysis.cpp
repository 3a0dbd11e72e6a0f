#include <polybem/error_analysis.hpp>
#include <polybem/galerkin.hpp>
#include <polybem/postprocess.hpp>
#include <polybem/problems.hpp>

#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

using namespace polybem;

namespace {

Polygond study() { return scale_for_capacity(make_l_shape<double>(), 0.4); }

GalerkinSolution<double> constant_solution(const Meshd& mesh, double value) {
  GalerkinSolution<double> sol;
  sol.mesh = mesh;
  sol.coefficients = Eigen::VectorXd::Constant(mesh.count(), value);
  sol.rhs = Eigen::VectorXd::Zero(mesh.count());
  return sol;
}

ConvergenceTable<double> tiny_table() {
  ConvergenceTable<double> table;
  table.ns = {8, 16};
  table.trims = {0.0};
  table.errors.resize(2, 1);
  table.errors(0, 0) = 1e-1;
  table.errors(1, 0) = 5e-2;
  return table;
}

}  // namespace

TEST_CASE("region pieces partition the observation region") {
  const auto p = make_l_shape<double>();
  const auto mesh = uniform_mesh(p, 16);
  const auto region = trim_region(p, 0.15);
  const auto pieces = region_pieces(region, mesh);
  REQUIRE(pieces.size() == 16);
  double measure = 0.0;
  for (const auto& piece : pieces) {
    CHECK(piece.hi > piece.lo);
    CHECK(piece.lo >= mesh.element_lo(piece.element) - 1e-15);
    CHECK(piece.hi <= mesh.element_hi(piece.element) + 1e-15);
    measure += piece.hi - piece.lo;
  }
  CHECK(measure == doctest::Approx(6.2).epsilon(1e-12));

  const auto collapsed = trim_region(p, 0.5);
  for (const auto& piece : region_pieces(collapsed, mesh)) {
    const int seg = mesh.element_segment[piece.element];
    CHECK((seg == 2 || seg == 3));  // only the long sides survive
  }

  CHECK_THROWS_AS(trim_region(p, 1.0), std::invalid_argument);
}

TEST_CASE("local error of an in-space solve is at solver level") {
  const auto p = study();
  const auto prob = make_corner_problem(p, 0, 1.0);
  const auto sol = solve(uniform_mesh(p, 16), prob);
  const auto region = trim_region(p, 0.15 * p.scale);
  CHECK(local_l2_error(sol, prob, region) <= 1e-8);
}

TEST_CASE("local error is stable under quadrature refinement") {
  const auto p = study();
  const auto prob = make_corner_problem(p, 0, 2.0 / 3.0);
  const auto sol = solve(uniform_mesh(p, 32), prob);

  const auto region = trim_region(p, 0.15 * p.scale);
  const double e16 = local_l2_error(sol, prob, region, 16);
  const double e32 = local_l2_error(sol, prob, region, 32);
  CHECK(std::abs(e16 - e32) <= 1e-6 * e16);

  const auto full = trim_region(p, 0.0);
  const double f16 = local_l2_error(sol, prob, full, 16);
  const double f32 = local_l2_error(sol, prob, full, 32);
  CHECK(std::abs(f16 - f32) <= 1e-4 * f16);

  // Monotone in the region: a larger trim never increases the error.
  const double e02 = local_l2_error(sol, prob, trim_region(p, 0.02 * p.scale));
  CHECK(e16 <= e02);
  CHECK(e02 <= f16);
}

TEST_CASE("eoc arithmetic") {
  CHECK(eoc(0.2, 0.1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(eoc(4.0, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(eoc(8.26e-1, 7.37e-1) == doctest::Approx(0.16).epsilon(0.05));
  CHECK(eoc(5.40e-2, 2.00e-2) == doctest::Approx(1.43).epsilon(0.01));
  CHECK_THROWS_AS(eoc(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(eoc(1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(eoc(1.0, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("table rates come straight from the stored errors") {
  const auto table = tiny_table();
  CHECK(table.rate(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("csv rendering is byte-stable") {
  const std::string expected =
      "N,a,error,eoc\n"
      "8,0,1.0000000000e-01,\n"
      "16,0,5.0000000000e-02,1.000000\n";
  CHECK(render_csv(tiny_table()) == expected);
}

TEST_CASE("markdown rendering pivots mesh sizes against trims") {
  auto table = tiny_table();
  const std::string md = render_markdown(table);
  CHECK(md.find("Mesh: uniform, norm: L2") != std::string::npos);
  CHECK(md.find("| N | a=0 | EOC |") != std::string::npos);
  CHECK(md.find("| 8 | 1.000e-01 | |") != std::string::npos);
  CHECK(md.find("| 16 | 5.000e-02 | 1.00 |") != std::string::npos);

  table.mesh_kind = MeshKind::Combined;
  table.grading_exponent = 3.0;
  table.kernel = std::make_pair(2, 2);
  const std::string graded = render_markdown(table);
  CHECK(graded.find("graded toward corners (beta=3)") != std::string::npos);
  CHECK(graded.find("smoothing kernel (2,2)") != std::string::npos);
}

TEST_CASE("b-splines take their textbook values") {
  CHECK(bspline(1, 0.0) == 1.0);
  CHECK(bspline(1, 0.75) == 0.0);
  CHECK(bspline(1, 0.5) == doctest::Approx(0.5).epsilon(1e-15));

  CHECK(bspline(2, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(bspline(2, 0.25) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(bspline(2, -0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(bspline(2, 1.0) == doctest::Approx(0.0).epsilon(1e-14));

  CHECK(bspline(3, 0.0) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(bspline(3, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(bspline(3, 1.0) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(bspline(3, 1.6) == 0.0);

  CHECK(bspline(4, 0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(bspline(4, 1.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(bspline(4, 2.0) == doctest::Approx(0.0).epsilon(1e-14));

  CHECK_THROWS_AS(bspline(0, 0.0), std::invalid_argument);
}

TEST_CASE("b-splines are nonnegative, normalized, and partition unity") {
  for (int l = 1; l <= 4; ++l) {
    const auto& rule = gauss_legendre<double>(12);
    double mass = 0.0;
    for (int cell = -2; cell < 2; ++cell)
      mass += integrate(rule, [&](double x) { return bspline(l, x); }, double(cell),
                        double(cell + 1));
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-14));

    for (double x : {-1.3, -0.4, 0.0, 0.7, 2.2}) {
      CHECK(bspline(l, x) >= 0.0);
      double sum = 0.0;
      for (int j = -5; j <= 5; ++j) sum += bspline(l, x - j);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(bspline(l, x) == doctest::Approx(bspline(l, -x)).epsilon(1e-14));
    }
  }
}

TEST_CASE("b-spline antiderivative matches the density") {
  for (int l = 1; l <= 4; ++l) {
    CHECK(bspline_cdf(l, -0.5 * l) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(bspline_cdf(l, 0.5 * l) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(bspline_cdf(l, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(bspline_cdf(l, -0.5 * l - 2.0) == 0.0);
    CHECK(bspline_cdf(l, 0.5 * l + 2.0) == 1.0);

    const double eps = 1e-6;
    for (double x : {-0.7, -0.3, 0.3, 0.7}) {
      const double fd = (bspline_cdf(l, x + eps) - bspline_cdf(l, x - eps)) / (2 * eps);
      CHECK(fd == doctest::Approx(bspline(l, x)).epsilon(1e-6));
    }
  }
}

TEST_CASE("fraction arithmetic stays exact") {
  const Fraction third{1, 3};
  const Fraction sixth{1, 6};
  CHECK((third + sixth) == Fraction{1, 2});
  CHECK((third - sixth) == Fraction{1, 6});
  CHECK((third * sixth) == Fraction{1, 18});
  CHECK((third / sixth) == Fraction{2, 1});
  CHECK(Fraction{-2, -4} == Fraction{1, 2});
  CHECK(Fraction{7, 6}.str() == "7/6");
  CHECK(Fraction{3, 1}.str() == "3");
  CHECK(Fraction{7, 6}.value() == doctest::Approx(7.0 / 6.0).epsilon(1e-16));
  CHECK_THROWS_AS(third / Fraction(0, 1), std::invalid_argument);
}

TEST_CASE("kernel coefficients solve the moment system exactly") {
  const auto k22 = kernel_coefficients_exact(2, 2);
  REQUIRE(k22.size() == 2);
  CHECK(k22[0] == Fraction{7, 6});
  CHECK(k22[1] == Fraction{-1, 12});

  const auto k12 = kernel_coefficients_exact(1, 2);
  CHECK(k12[0] == Fraction{13, 12});
  CHECK(k12[1] == Fraction{-1, 24});

  CHECK(kernel_coefficients_exact(1, 1) == std::vector<Fraction>{Fraction{1, 1}});
  CHECK(kernel_coefficients_exact(2, 1) == std::vector<Fraction>{Fraction{1, 1}});

  CHECK_THROWS_AS(kernel_coefficients_exact(0, 2), std::invalid_argument);
  CHECK_THROWS_AS(kernel_coefficients_exact(2, 0), std::invalid_argument);
}

TEST_CASE("high order kernels still satisfy their moment conditions") {
  const auto kernel = make_kernel(4, 4, 1.0);
  const double w = kernel.half_support();
  const auto& rule = gauss_legendre<double>(24);
  for (int i = 0; i < 8; ++i) {
    double moment = 0.0;
    // Integrate between half-integer knots so every piece is polynomial.
    for (double lo = -w; lo < w - 0.25; lo += 0.5)
      moment += integrate(
          rule, [&](double x) { return std::pow(x, i) * kernel_eval(kernel, x); }, lo, lo + 0.5);
    CHECK(std::abs(moment - (i == 0 ? 1.0 : 0.0)) <= 1e-12);
  }
}

TEST_CASE("kernel evaluation is even, local, and normalized") {
  const auto kernel = make_kernel(2, 2, 0.1);
  CHECK(kernel.half_support() == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(kernel_eval(kernel, 0.21) == 0.0);
  CHECK(kernel_eval(kernel, -0.21) == 0.0);
  for (double x : {0.02, 0.07, 0.13, 0.19})
    CHECK(kernel_eval(kernel, x) == doctest::Approx(kernel_eval(kernel, -x)).epsilon(1e-13));

  const auto& rule = gauss_legendre<double>(16);
  double mass = 0.0;
  for (int cell = -4; cell < 4; ++cell)
    mass += integrate(rule, [&](double x) { return kernel_eval(kernel, x); }, 0.05 * cell,
                      0.05 * (cell + 1));
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-13));

  CHECK_THROWS_AS(make_kernel(2, 2, 0.0), std::invalid_argument);
}

TEST_CASE("smoothing windows must fit inside the uniform run") {
  const auto p = study();
  const auto mesh = uniform_mesh(p, 64);
  const auto sol = constant_solution(mesh, 4.2);
  const auto kernel = make_kernel(2, 2, mesh.uniform_spacing);

  const auto good = trim_region(p, 0.3 * p.scale);
  const auto smoothed = apply(kernel, sol, good);
  for (const auto& iv : good.intervals)
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double t = iv.lo + s * (iv.hi - iv.lo);
      CHECK(smoothed(t) == doctest::Approx(4.2).epsilon(1e-13));
    }

  try {
    apply(kernel, sol, trim_region(p, 0.1 * p.scale));
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    const std::string message = e.what();
    CHECK(message.find("trim") != std::string::npos);
  }
}

TEST_CASE("smoothing a projected linear recovers it exactly") {
  const auto p = study();
  const auto mesh = uniform_mesh(p, 64);
  GalerkinSolution<double> sol = constant_solution(mesh, 0.0);
  const auto linear = [](double t) { return 3.0 - 0.5 * t; };
  for (int i = 0; i < mesh.count(); ++i) {
    const double mid = 0.5 * (mesh.element_lo(i) + mesh.element_hi(i));
    sol.coefficients[i] = linear(mid);  // cell average of a linear
  }

  const auto kernel = make_kernel(2, 2, mesh.uniform_spacing);
  const auto region = trim_region(p, 0.3 * p.scale);
  const auto smoothed = apply(kernel, sol, region);
  for (const auto& iv : region.intervals)
    for (int k = 0; k <= 10; ++k) {
      const double t = iv.lo + k * (iv.hi - iv.lo) / 10.0;
      CHECK(smoothed(t) == doctest::Approx(linear(t)).epsilon(1e-12));
    }
}

TEST_CASE("smoothing accepts the graded-plus-uniform mesh away from corners") {
  const auto p = study();
  const auto mesh = combined_mesh(p, 128, 3.0, 0.25 * p.scale);
  const auto sol = constant_solution(mesh, 1.0);
  const auto kernel = make_kernel(2, 2, mesh.uniform_spacing);

  const auto region = trim_region(p, 0.4 * p.scale);
  const auto smoothed = apply(kernel, sol, region);
  CHECK(smoothed(0.5 * (region.intervals[2].lo + region.intervals[2].hi)) ==
        doctest::Approx(1.0).epsilon(1e-13));

  CHECK_THROWS_AS(apply(kernel, sol, trim_region(p, 0.3 * p.scale)), std::invalid_argument);
}

TEST_CASE("smoothing reduces the local error of the corner problem") {
  const auto p = study();
  const auto prob = make_corner_problem(p, 0, 2.0 / 3.0);
  const auto mesh = uniform_mesh(p, 128);
  const auto sol = solve(mesh, prob);
  const auto region = trim_region(p, 0.15 * p.scale);

  const double raw = local_l2_error(sol, prob, region);
  const auto kernel = make_kernel(2, 2, mesh.uniform_spacing);
  const double smoothed = postprocessed_error(kernel, sol, prob, region);
  CHECK(smoothed > 0.0);
  CHECK(smoothed < raw);

  // Smoothing a projected linear has no error either through this route.
  GalerkinSolution<double> linear_sol = constant_solution(mesh, 0.0);
  const auto linear_prob = make_corner_problem(p, 0, 1.0);
  for (int i = 0; i < mesh.count(); ++i) {
    const double mid = 0.5 * (mesh.element_lo(i) + mesh.element_hi(i));
    linear_sol.coefficients[i] =
        linear_prob.density(p.point_at(mid), mesh.element_segment[i]);
  }
  // Piecewise-constant exact density: smoothing must preserve it where the
  // window sees a single segment's plateau.
  const auto plateau = postprocessed_error(kernel, linear_sol, linear_prob, region);
  CHECK(plateau <= 1e-12);
}
