#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "polybem/error_analysis.hpp"
#include "polybem/galerkin.hpp"
#include "polybem/geometry.hpp"
#include "polybem/postprocess.hpp"
#include "polybem/problems.hpp"

namespace polybem {

template <class Scalar>
struct TableOptions {
  MeshKind mesh_kind = MeshKind::Uniform;
  Scalar grading_exponent = Scalar(3);
  Scalar zone = Scalar(0.25);  // unit-scale half-width of the graded corner zones
  std::optional<std::pair<int, int>> kernel;
  int jobs = 1;
  Scalar rhs_tol = Scalar(1e-10);
  int quad_order = 16;
};

template <class Scalar>
struct TableRun {
  ConvergenceTable<Scalar> table;
  std::vector<GalerkinSolution<Scalar>> solutions;  // one per mesh size
};

/**
 * Refinement study: solve on each mesh size and measure the density error on
 * every trimmed region. Trim labels are unit-scale lengths; they are mapped
 * to physical arclength by the polygon scale. With a kernel requested, the
 * error is that of the smoothed density instead of the raw one. Rows can be
 * computed concurrently (`jobs`); results are deterministic either way.
 */
template <class Scalar>
TableRun<Scalar> convergence_table(const HarmonicCornerProblem<Scalar>& problem,
                                   std::vector<int> ns, std::vector<Scalar> trims,
                                   const TableOptions<Scalar>& options) {
  if (ns.empty()) throw std::invalid_argument("convergence_table: no mesh sizes");
  for (size_t k = 1; k < ns.size(); ++k)
    if (ns[k] <= ns[k - 1])
      throw std::invalid_argument("convergence_table: mesh sizes must be strictly increasing");
  if (trims.empty()) throw std::invalid_argument("convergence_table: no trim radii");

  const Polygon<Scalar>& p = problem.polygon();
  const int rows = static_cast<int>(ns.size());
  const int cols = static_cast<int>(trims.size());

  TableRun<Scalar> run;
  run.table.ns = ns;
  run.table.trims = trims;
  run.table.errors.resize(rows, cols);
  run.table.mesh_kind = options.mesh_kind;
  run.table.grading_exponent =
      options.mesh_kind == MeshKind::Uniform ? Scalar(0) : options.grading_exponent;
  run.table.kernel = options.kernel;
  run.table.norm_label = "L2 on trimmed boundary";
  run.solutions.resize(rows);

  std::vector<std::exception_ptr> failures(rows);
  const auto compute_row = [&](int row) {
    try {
      Mesh<Scalar> mesh;
      switch (options.mesh_kind) {
        case MeshKind::Uniform: mesh = uniform_mesh(p, ns[row]); break;
        case MeshKind::Graded:
          mesh = graded_mesh(p, ns[row], options.grading_exponent, options.zone * p.scale);
          break;
        case MeshKind::Combined:
          mesh = combined_mesh(p, ns[row], options.grading_exponent, options.zone * p.scale);
          break;
      }
      auto solution = solve(mesh, problem, 1, options.rhs_tol);
      for (int col = 0; col < cols; ++col) {
        const auto region = trim_region(p, trims[col] * p.scale);
        if (options.kernel) {
          const auto kernel = make_kernel<Scalar>(options.kernel->first, options.kernel->second,
                                                  mesh.uniform_spacing);
          run.table.errors(row, col) =
              postprocessed_error(kernel, solution, problem, region, options.quad_order);
        } else {
          run.table.errors(row, col) =
              local_l2_error(solution, problem, region, options.quad_order);
        }
      }
      run.solutions[row] = std::move(solution);
    } catch (...) {
      failures[row] = std::current_exception();
    }
  };

  const int workers = std::min(std::max(options.jobs, 1), rows);
  if (workers <= 1) {
    for (int row = 0; row < rows; ++row) compute_row(row);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int row = next.fetch_add(1); row < rows; row = next.fetch_add(1)) compute_row(row);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& failure : failures)
    if (failure) std::rethrow_exception(failure);
  return run;
}

struct ExperimentConfig {
  std::string preset = "table1";
  int max_n = 0;  // keep mesh sizes <= max_n when positive
  int jobs = 1;
  std::string out_prefix;  // defaults to the preset name
  std::optional<double> grading_exponent;
  std::optional<std::pair<int, int>> kernel;
  std::optional<double> trim;
  double rhs_tol = 1e-10;
  bool write_files = true;
};

/** Parse "order,moments", e.g. "2,2". */
std::pair<int, int> parse_kernel_spec(const std::string& value);

/**
 * key = value configuration, one entry per line, '#' starts a comment.
 * Recognized keys: preset, max_n, jobs, out, grading_exponent, kernel, trim,
 * tol. Dashes in keys are treated as underscores.
 */
ExperimentConfig parse_config(const std::string& text, ExperimentConfig config = {});

struct NamedTable {
  std::string name;
  TableRun<double> run;
  std::string csv, markdown;
  std::filesystem::path csv_path, md_path;  // empty when writing is disabled
};

struct RunResult {
  Polygon<double> polygon;
  std::vector<NamedTable> tables;
};

/** The study geometry: the L-shape shrunk inside a disk of radius 0.4. */
Polygon<double> study_polygon();

/**
 * Run one of the bundled studies.
 *
 *  - table1: raw density error on uniform meshes, trims 0 / 0.02 / 0.07 / 0.15.
 *  - kop-uniform: smoothed density error, kernel (2,2), uniform meshes, trim 0.15.
 *  - kop-graded: smoothed density error on combined graded+uniform meshes,
 *    exponent sweep 3/4/5, trim 0.4 (one table per exponent).
 *
 * Every table is computed before anything is written; files then appear
 * atomically as <prefix>.csv/.md (plus -beta<b> for the sweep).
 */
RunResult run_experiment(const ExperimentConfig& config);

struct VerifyOptions {
  double tighten = 1.0;            // divides every tolerance
  double double_layer_sign = 1.0;  // hook for self-testing the compatibility check
};

struct VerifyCheck {
  std::string name;
  double measured = 0;
  double threshold = 0;
  bool passed = false;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }

  std::string to_string() const;
};

/**
 * Self-contained consistency checks, each against quadrature routes that do
 * not share code with the production paths: Galerkin entries against nested
 * adaptive integration, kernel moments and polynomial reproduction against
 * knot-aligned Gauss rules, and the exact density against the boundary
 * integral identity it must satisfy. Returns a report; nothing is thrown on
 * failure.
 */
VerifyReport verify(const VerifyOptions& options = {});

}  // namespace polybem
