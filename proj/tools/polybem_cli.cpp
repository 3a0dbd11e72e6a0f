#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>

#include "CLI11.hpp"
#include "polybem/polybem.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Piecewise-constant boundary element solver with corner-aware error studies"};

  std::string preset, config_path, out_prefix, kernel_spec, dump_solution, dump_geometry;
  int max_n = 0, jobs = 0;
  double grading = 0, trim = 0, tol = 0, tighten = 1;
  bool do_verify = false, dump_kernel = false;

  app.add_option("--preset", preset, "study preset: table1, kop-uniform, kop-graded");
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--max-n", max_n, "drop mesh sizes above this bound");
  app.add_option("--jobs", jobs, "number of meshes solved concurrently");
  app.add_option("--out", out_prefix, "output file prefix (default: the preset name)");
  app.add_option("--grading-exponent", grading, "mesh grading exponent for graded presets");
  app.add_option("--kernel", kernel_spec, "smoothing kernel as order,moments (e.g. 2,2)");
  app.add_option("--trim", trim, "override the corner trim radius (unit-scale)");
  app.add_option("--tol", tol, "quadrature tolerance for the right-hand side");
  app.add_flag("--verify", do_verify, "run the consistency checks and print a report");
  app.add_option("--tighten", tighten, "divide verification tolerances by this factor");
  app.add_flag("--dump-kernel", dump_kernel, "print exact kernel coefficients and exit");
  app.add_option("--dump-solution", dump_solution, "write the finest solved density to this file");
  app.add_option("--dump-geometry", dump_geometry, "write the study polygon to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (do_verify) {
      polybem::VerifyOptions options;
      options.tighten = tighten;
      const auto report = polybem::verify(options);
      std::fputs(report.to_string().c_str(), stdout);
      return 0;
    }
    if (dump_kernel) {
      int l = 2, q = 2;
      if (!kernel_spec.empty()) std::tie(l, q) = polybem::parse_kernel_spec(kernel_spec);
      const auto exact = polybem::kernel_coefficients_exact(l, q);
      std::printf("kernel order %d, moment conditions %d\n", l, q);
      for (size_t k = 0; k < exact.size(); ++k)
        std::printf("k_%zu = %s\n", k, exact[k].str().c_str());
      return 0;
    }

    polybem::ExperimentConfig config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::fprintf(stderr, "error: cannot open config file %s\n", config_path.c_str());
        return 1;
      }
      std::stringstream buffer;
      buffer << in.rdbuf();
      config = polybem::parse_config(buffer.str());
    }
    if (!preset.empty()) config.preset = preset;
    if (app.count("--max-n")) config.max_n = max_n;
    if (app.count("--jobs")) config.jobs = jobs;
    if (!out_prefix.empty()) config.out_prefix = out_prefix;
    if (app.count("--grading-exponent")) config.grading_exponent = grading;
    if (!kernel_spec.empty()) config.kernel = polybem::parse_kernel_spec(kernel_spec);
    if (app.count("--trim")) config.trim = trim;
    if (app.count("--tol")) config.rhs_tol = tol;

    const auto result = polybem::run_experiment(config);
    for (const auto& table : result.tables) {
      std::printf("## %s\n\n%s\n", table.name.c_str(), table.markdown.c_str());
      if (!table.csv_path.empty())
        std::printf("wrote %s and %s\n\n", table.csv_path.c_str(), table.md_path.c_str());
    }
    if (!dump_geometry.empty())
      polybem::atomic_write_file(dump_geometry, polybem::write_polygon(result.polygon));
    if (!dump_solution.empty())
      polybem::atomic_write_file(
          dump_solution, polybem::write_solution(result.tables.front().run.solutions.back()));
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
