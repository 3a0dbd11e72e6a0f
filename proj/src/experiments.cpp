#include "polybem/experiments.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "polybem/io.hpp"
#include "polybem/operators.hpp"
#include "polybem/quadrature.hpp"

namespace polybem {

namespace {

std::string strip(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Reference Galerkin entry by nested adaptive quadrature in world
// coordinates, independent of the closed-form path.
double reference_entry(const Mesh<double>& mesh, int i, int j) {
  const auto& p = mesh.polygon;
  const auto inner = [&](double t) {
    const Vec2<double> x = p.point_at(t);
    const auto logdist = [&](double s) { return std::log((p.point_at(s) - x).norm()); };
    const double lo = mesh.element_lo(j), hi = mesh.element_hi(j);
    if (i == j) {
      const auto left = adaptive_integrate(logdist, lo, t, 1e-12, 1e-15);
      const auto right = adaptive_integrate(logdist, t, hi, 1e-12, 1e-15);
      return left.value + right.value;
    }
    return adaptive_integrate(logdist, lo, hi, 1e-12, 1e-15).value;
  };
  const auto outer =
      adaptive_integrate(inner, mesh.element_lo(i), mesh.element_hi(i), 1e-11, 1e-14);
  return -outer.value / std::numbers::pi;
}

}  // namespace

std::pair<int, int> parse_kernel_spec(const std::string& value) {
  const auto comma = value.find(',');
  if (comma == std::string::npos)
    throw std::invalid_argument("kernel spec must be 'order,moments', got '" + value + "'");
  try {
    const int l = std::stoi(strip(value.substr(0, comma)));
    const int q = std::stoi(strip(value.substr(comma + 1)));
    if (l < 1 || q < 1) throw std::invalid_argument("");
    return {l, q};
  } catch (...) {
    throw std::invalid_argument("kernel spec must be two positive integers, got '" + value + "'");
  }
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig config) {
  size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const size_t eol = std::min(text.find('\n', pos), text.size());
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = strip(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key=value");
    std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    for (auto& c : key) c = c == '-' ? '_' : static_cast<char>(std::tolower(c));
    try {
      if (key == "preset")
        config.preset = value;
      else if (key == "max_n")
        config.max_n = std::stoi(value);
      else if (key == "jobs")
        config.jobs = std::stoi(value);
      else if (key == "out")
        config.out_prefix = value;
      else if (key == "grading_exponent")
        config.grading_exponent = std::stod(value);
      else if (key == "kernel")
        config.kernel = parse_kernel_spec(value);
      else if (key == "trim")
        config.trim = std::stod(value);
      else if (key == "tol")
        config.rhs_tol = std::stod(value);
      else
        throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" +
                                    key + "'");
    } catch (const std::invalid_argument&) {
      throw;
    } catch (...) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad value '" +
                                  value + "' for key '" + key + "'");
    }
  }
  return config;
}

Polygon<double> study_polygon() { return scale_for_capacity(make_l_shape<double>(), 0.4); }

RunResult run_experiment(const ExperimentConfig& config) {
  std::vector<int> ns;
  std::vector<double> trims;
  std::vector<double> betas;
  TableOptions<double> options;
  options.jobs = config.jobs;
  options.rhs_tol = config.rhs_tol;

  if (config.preset == "table1") {
    ns = {8, 16, 32, 64, 128, 256, 512, 1024};
    trims = {0.0, 0.02, 0.07, 0.15};
  } else if (config.preset == "kop-uniform") {
    ns = {128, 256, 512, 1024};
    trims = {0.15};
    options.kernel = {2, 2};
  } else if (config.preset == "kop-graded") {
    ns = {128, 256, 512, 1024};
    trims = {0.4};
    options.kernel = {2, 2};
    options.mesh_kind = MeshKind::Combined;
    betas = {3.0, 4.0, 5.0};
  } else {
    throw std::invalid_argument("unknown preset '" + config.preset + "'");
  }

  if (config.max_n > 0) {
    std::vector<int> kept;
    for (int n : ns)
      if (n <= config.max_n) kept.push_back(n);
    if (kept.empty())
      throw std::invalid_argument("max_n " + std::to_string(config.max_n) +
                                  " excludes every mesh size of preset '" + config.preset + "'");
    ns = std::move(kept);
  }
  if (config.trim) trims = {*config.trim};
  if (config.kernel) options.kernel = config.kernel;
  if (config.grading_exponent) {
    if (betas.empty())
      throw std::invalid_argument("preset '" + config.preset + "' has no graded meshes");
    betas = {*config.grading_exponent};
  }

  RunResult result;
  result.polygon = study_polygon();
  const auto problem = make_corner_problem(result.polygon, 0, 2.0 / 3.0);
  const std::string prefix = config.out_prefix.empty() ? config.preset : config.out_prefix;

  if (betas.empty()) {
    options.grading_exponent = 0;
    result.tables.push_back(
        {prefix, convergence_table(problem, ns, trims, options), "", "", {}, {}});
  } else {
    for (double beta : betas) {
      options.grading_exponent = beta;
      char name[64];
      snprintf(name, sizeof(name), "%s-beta%g", prefix.c_str(), beta);
      result.tables.push_back(
          {name, convergence_table(problem, ns, trims, options), "", "", {}, {}});
    }
  }

  for (auto& entry : result.tables) {
    entry.csv = render_csv(entry.run.table);
    entry.markdown = render_markdown(entry.run.table);
  }
  if (config.write_files) {
    for (auto& entry : result.tables) {
      const std::filesystem::path base(entry.name);
      if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
      entry.csv_path = base;
      entry.csv_path += ".csv";
      entry.md_path = base;
      entry.md_path += ".md";
      atomic_write_file(entry.csv_path, entry.csv);
      atomic_write_file(entry.md_path, entry.markdown);
    }
  }
  return result;
}

std::string VerifyReport::to_string() const {
  std::string out;
  for (const auto& c : checks) {
    char line[256];
    snprintf(line, sizeof(line), "[%s] %s (measured %.3e, tolerance %.3e)\n",
             c.passed ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.threshold);
    out += line;
  }
  return out;
}

VerifyReport verify(const VerifyOptions& options) {
  VerifyReport report;
  const double tighten = options.tighten > 0 ? options.tighten : 1.0;
  const auto polygon = study_polygon();
  const auto problem = make_corner_problem(polygon, 0, 2.0 / 3.0);

  {
    const auto mesh = uniform_mesh(polygon, 16);
    const auto matrix = assemble_matrix(mesh);
    double worst = 0;
    for (int i = 0; i < mesh.count(); ++i)
      for (int j = i; j < mesh.count(); ++j) {
        const double reference = reference_entry(mesh, i, j);
        const double deviation = std::abs(matrix(i, j) - reference) / std::abs(reference);
        worst = std::max(worst, deviation);
      }
    const double tol = 1e-8 / tighten;
    report.checks.push_back(
        {"single-layer Galerkin entries match independent double integration", worst, tol,
         worst <= tol});
  }

  {
    double worst = 0;
    const auto& rule = gauss_legendre<double>(16);
    for (int l = 1; l <= 3; ++l)
      for (int q = 1; q <= 3; ++q) {
        const auto kernel = make_kernel<double>(l, q, 1.0);
        const double w = kernel.half_support();
        for (int k = 0; k <= 2 * q - 1; ++k) {
          double moment = 0;
          for (double a = -w; a < w - 0.25; a += 0.5)
            moment += integrate(
                rule, [&](double x) { return std::pow(x, k) * kernel_eval(kernel, x); }, a,
                a + 0.5);
          const double target = k == 0 ? 1.0 : 0.0;
          worst = std::max(worst, std::abs(moment - target));
        }
      }
    const double tol = 1e-12 / tighten;
    report.checks.push_back({"smoothing kernel moment conditions", worst, tol, worst <= tol});
  }

  {
    const auto kernel = make_kernel<double>(2, 2, 0.1);
    const double w = kernel.half_support();
    const auto& rule = gauss_legendre<double>(16);
    const auto poly = [](double x) { return 1.0 + 2.0 * x - x * x + 0.5 * x * x * x; };
    double worst = 0;
    const int pieces = static_cast<int>(std::lround(2 * w / (kernel.width / 2)));
    for (int k = 0; k < 100; ++k) {
      const double x = -1.0 + 2.0 * k / 99.0;
      double conv = 0;
      for (int piece = 0; piece < pieces; ++piece) {
        const double a = x - w + 2 * w * piece / pieces;
        const double b = x - w + 2 * w * (piece + 1) / pieces;
        conv +=
            integrate(rule, [&](double y) { return kernel_eval(kernel, x - y) * poly(y); }, a, b);
      }
      worst = std::max(worst, std::abs(conv - poly(x)));
    }
    const double tol = 1e-10 / tighten;
    report.checks.push_back(
        {"smoothing kernel reproduces cubic polynomials", worst, tol, worst <= tol});
  }

  {
    const double pi = std::numbers::pi;
    double worst = 0;
    for (int seg_x = 0; seg_x < 5; ++seg_x) {
      const auto& host = polygon.segments[seg_x];
      const double t_x = host.arc_offset + host.length / 2;
      const Vec2<double> x = polygon.point_at(t_x);

      double v_psi = 0;
      for (int m = 0; m < polygon.side_count(); ++m) {
        const auto integrand = [&](double s) {
          const int seg = polygon.segment_of(s);
          return std::log((polygon.point_at(s) - x).norm()) *
                 problem.density(polygon.point_at(s), seg);
        };
        const double lo = polygon.segments[m].arc_offset;
        const double hi = lo + polygon.segments[m].length;
        if (m == seg_x) {
          v_psi += adaptive_integrate(integrand, lo, t_x, 1e-9, 1e-12).value;
          v_psi += adaptive_integrate(integrand, t_x, hi, 1e-9, 1e-12).value;
        } else {
          v_psi += adaptive_integrate(integrand, lo, hi, 1e-9, 1e-12).value;
        }
      }
      v_psi = -v_psi / pi;

      double kg = 0;
      for (int m = 0; m < polygon.side_count(); ++m) {
        if (m == seg_x) continue;
        const auto& seg = polygon.segments[m];
        const auto integrand = [&](double s) {
          const Vec2<double> y = seg.point_at_local(s - seg.arc_offset);
          const Vec2<double> r = options.double_layer_sign * (y - x);
          return seg.outward_normal.dot(r) / (y - x).squaredNorm() * problem.dirichlet(y);
        };
        kg +=
            adaptive_integrate(integrand, seg.arc_offset, seg.arc_offset + seg.length, 1e-9, 1e-12)
                .value;
      }
      const double f_check = problem.dirichlet(x) - kg / pi;
      worst = std::max(worst, std::abs(v_psi - f_check) / std::max(1.0, std::abs(f_check)));
    }
    const double tol = 1e-4 / tighten;
    report.checks.push_back(
        {"exact density satisfies the boundary integral identity", worst, tol, worst <= tol});
  }

  return report;
}

}  // namespace polybem
