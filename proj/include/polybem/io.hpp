#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "polybem/galerkin.hpp"
#include "polybem/geometry.hpp"

namespace polybem {

/** Write via a temporary and rename, so readers never observe a partial file. */
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("atomic_write_file: cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("atomic_write_file: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace detail {

inline void append_number(std::string& out, double value) {
  char buffer[40];
  snprintf(buffer, sizeof(buffer), "%.17g", value);
  out += buffer;
}

}  // namespace detail

template <class Scalar>
std::string write_polygon(const Polygon<Scalar>& p) {
  std::string out = "polygon\nscale ";
  detail::append_number(out, double(p.scale));
  out += "\nvertices " + std::to_string(p.side_count()) + "\n";
  for (const auto& v : p.vertices) {
    detail::append_number(out, double(v.x()));
    out += " ";
    detail::append_number(out, double(v.y()));
    out += "\n";
  }
  return out;
}

template <class Scalar = double>
Polygon<Scalar> read_polygon(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  in >> tag;
  if (tag != "polygon") throw std::invalid_argument("read_polygon: missing polygon header");
  double scale = 1;
  int count = 0;
  in >> tag >> scale >> tag >> count;
  if (!in || count < 3) throw std::invalid_argument("read_polygon: malformed header");
  std::vector<Vec2<Scalar>> vertices(count);
  for (auto& v : vertices) {
    double x = 0, y = 0;
    in >> x >> y;
    if (!in) throw std::invalid_argument("read_polygon: malformed vertex list");
    v = {Scalar(x), Scalar(y)};
  }
  auto p = make_polygon(vertices);
  p.scale = Scalar(scale);
  return p;
}

template <class Scalar>
std::string write_mesh(const Mesh<Scalar>& mesh) {
  std::string out = "mesh ";
  switch (mesh.kind) {
    case MeshKind::Uniform: out += "uniform"; break;
    case MeshKind::Graded: out += "graded"; break;
    case MeshKind::Combined: out += "combined"; break;
  }
  out += "\nrequested " + std::to_string(mesh.requested_n) + "\n";
  if (mesh.kind != MeshKind::Uniform) {
    out += "grading ";
    detail::append_number(out, double(mesh.grading_exponent));
    out += " ";
    detail::append_number(out, double(mesh.grading_zone));
    out += "\n";
  }
  out += "breakpoints " + std::to_string(mesh.breakpoints.size()) + "\n";
  for (const auto& b : mesh.breakpoints) {
    detail::append_number(out, double(b));
    out += "\n";
  }
  return out;
}

template <class Scalar>
std::string write_solution(const GalerkinSolution<Scalar>& solution) {
  std::string out = "solution\nelements " + std::to_string(solution.mesh.count()) + "\n";
  out += "residual ";
  detail::append_number(out, double(solution.info.relative_residual));
  out += "\n";
  for (int i = 0; i < solution.mesh.count(); ++i) {
    detail::append_number(out, double(solution.mesh.element_lo(i)));
    out += " ";
    detail::append_number(out, double(solution.mesh.element_hi(i)));
    out += " ";
    detail::append_number(out, double(solution.coefficients[i]));
    out += "\n";
  }
  return out;
}

}  // namespace polybem
