#include "pflow/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace pflow {

namespace {

void check_extent(double l, const char* name) {
  if (!(l > 0.0) || !std::isfinite(l)) {
    throw std::invalid_argument(std::string(name) + " must be a positive finite extent");
  }
}

void check_count(long n, const char* name) {
  if (n < 1) {
    throw std::invalid_argument(std::string(name) + " must be >= 1");
  }
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed number '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& path) {
  double v = parse_double(s, path);
  long n = static_cast<long>(v);
  if (static_cast<double>(n) != v) throw std::runtime_error(path + ": expected integer, got '" + s + "'");
  return n;
}

}  // namespace

std::shared_ptr<const Grid> Grid::interval(double length, long n) {
  check_extent(length, "length");
  check_count(n, "n");
  auto g = std::shared_ptr<Grid>(new Grid());
  g->dim_ = 1;
  g->nx_ = n;
  g->ny_ = 0;
  g->lx_ = length;
  g->ly_ = 0.0;
  g->hx_ = length / static_cast<double>(n + 1);
  g->hy_ = 0.0;
  g->vol_ = g->hx_;
  g->mask_.assign(static_cast<std::size_t>(n), 1);
  g->active_ = n;
  return g;
}

std::shared_ptr<const Grid> Grid::rectangle(double lx, double ly, long nx, long ny) {
  return masked_rectangle(lx, ly, nx, ny,
                          std::vector<std::uint8_t>(static_cast<std::size_t>(nx * ny), 1));
}

std::shared_ptr<const Grid> Grid::masked_rectangle(double lx, double ly, long nx, long ny,
                                                   std::vector<std::uint8_t> mask) {
  check_extent(lx, "lx");
  check_extent(ly, "ly");
  check_count(nx, "nx");
  check_count(ny, "ny");
  if (static_cast<long>(mask.size()) != nx * ny) {
    throw std::invalid_argument("mask shape mismatch: expected nx*ny entries");
  }
  long active = 0;
  for (auto m : mask) active += (m != 0) ? 1 : 0;
  if (active == 0) throw std::invalid_argument("empty domain: mask has no active node");
  auto g = std::shared_ptr<Grid>(new Grid());
  g->dim_ = 2;
  g->nx_ = nx;
  g->ny_ = ny;
  g->lx_ = lx;
  g->ly_ = ly;
  g->hx_ = lx / static_cast<double>(nx + 1);
  g->hy_ = ly / static_cast<double>(ny + 1);
  g->vol_ = g->hx_ * g->hy_;
  g->mask_ = std::move(mask);
  g->active_ = active;
  return g;
}

bool Grid::same_layout(const Grid& other) const {
  return dim_ == other.dim_ && nx_ == other.nx_ && ny_ == other.ny_ && hx_ == other.hx_ &&
         hy_ == other.hy_ && mask_ == other.mask_;
}

GridFunction GridFunction::zeros(std::shared_ptr<const Grid> grid) {
  if (!grid) throw std::invalid_argument("null grid");
  std::vector<double> v(static_cast<std::size_t>(grid->num_nodes()), 0.0);
  return GridFunction(std::move(grid), std::move(v));
}

GridFunction::GridFunction(std::shared_ptr<const Grid> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw std::invalid_argument("null grid");
  if (static_cast<long>(values_.size()) != grid_->num_nodes()) {
    throw std::invalid_argument("value count does not match grid");
  }
  for (long i = 0; i < grid_->num_nodes(); ++i) {
    auto idx = static_cast<std::size_t>(i);
    if (!grid_->active(i)) {
      values_[idx] = 0.0;  // masked-out nodes are pinned to zero
    } else if (!std::isfinite(values_[idx])) {
      throw std::invalid_argument("non-finite grid function value");
    }
  }
}

double lp_mass(const GridFunction& u, double p) {
  if (!u.valid()) throw std::invalid_argument("invalid grid function");
  if (!std::isfinite(p) || p < 2.0) {
    throw std::invalid_argument("p out of supported range (p >= 2)");
  }
  return detail::lp_mass_raw(u.grid(), u.values(), p);
}

double sup_norm(const GridFunction& u) {
  if (!u.valid()) throw std::invalid_argument("invalid grid function");
  return detail::sup_norm_raw(u.values());
}

GridFunction scale(const GridFunction& u, double c) {
  std::vector<double> v(u.values().begin(), u.values().end());
  for (auto& x : v) x *= c;
  return GridFunction(u.grid_ptr(), std::move(v));
}

GridFunction add_scaled(const GridFunction& u, const GridFunction& w, double c) {
  if (!u.grid().same_layout(w.grid())) throw std::invalid_argument("grid layout mismatch");
  std::vector<double> v(u.values().begin(), u.values().end());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += c * w.values()[i];
  return GridFunction(u.grid_ptr(), std::move(v));
}

namespace detail {

double lp_mass_raw(const Grid& g, std::span<const double> v, double p) {
  const double vol = g.cell_volume();
  double acc = 0.0;
  if (p == 2.0) {
    for (double x : v) acc += x * x;
  } else {
    for (double x : v) acc += std::pow(std::fabs(x), p);
  }
  return vol * acc;
}

double sup_norm_raw(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace detail

void write_snapshot(const std::string& path, const GridFunction& u, double p, double t) {
  const Grid& g = u.grid();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << g.dim() << ',' << g.nx() << ',' << g.ny() << ',' << fmt17(g.hx()) << ','
      << fmt17(g.hy()) << ',' << fmt17(p) << ',' << fmt17(t) << '\n';
  const long rows = (g.dim() == 1) ? 1 : g.ny();
  const long cols = g.nx();
  for (long j = 0; j < rows; ++j) {
    for (long i = 0; i < cols; ++i) {
      if (i) out << ',';
      out << fmt17(u[j * cols + i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header");
  auto head = split_commas(line);
  if (head.size() != 7) throw std::runtime_error(path + ": header must have 7 fields");
  Snapshot s;
  s.dim = static_cast<int>(parse_long(head[0], path));
  s.nx = parse_long(head[1], path);
  s.ny = parse_long(head[2], path);
  s.hx = parse_double(head[3], path);
  s.hy = parse_double(head[4], path);
  s.p = parse_double(head[5], path);
  s.t = parse_double(head[6], path);
  if (s.dim != 1 && s.dim != 2) throw std::runtime_error(path + ": dim must be 1 or 2");
  const long rows = (s.dim == 1) ? 1 : s.ny;
  s.values.reserve(static_cast<std::size_t>(rows * s.nx));
  for (long j = 0; j < rows; ++j) {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated values");
    auto cells = split_commas(line);
    if (static_cast<long>(cells.size()) != s.nx) {
      throw std::runtime_error(path + ": row length mismatch");
    }
    for (auto& c : cells) s.values.push_back(parse_double(c, path));
  }
  return s;
}

GridFunction snapshot_function(const Snapshot& snap, std::shared_ptr<const Grid> grid) {
  if (!grid) throw std::invalid_argument("null grid");
  const bool ok = snap.dim == grid->dim() && snap.nx == grid->nx() &&
                  (grid->dim() == 1 || snap.ny == grid->ny()) && snap.hx == grid->hx() &&
                  (grid->dim() == 1 || snap.hy == grid->hy());
  if (!ok) throw std::runtime_error("snapshot layout does not match grid");
  return GridFunction(std::move(grid), snap.values);
}

void write_mask(const std::string& path, const Grid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << grid.dim() << ',' << grid.nx() << ',' << grid.ny() << '\n';
  const long rows = (grid.dim() == 1) ? 1 : grid.ny();
  for (long j = 0; j < rows; ++j) {
    for (long i = 0; i < grid.nx(); ++i) {
      if (i) out << ',';
      out << (grid.active(j * grid.nx() + i) ? 1 : 0);
    }
    out << '\n';
  }
}

MaskData read_mask(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mask '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header");
  auto head = split_commas(line);
  if (head.size() != 3) throw std::runtime_error(path + ": header must have 3 fields");
  MaskData m;
  m.dim = static_cast<int>(parse_long(head[0], path));
  m.nx = parse_long(head[1], path);
  m.ny = parse_long(head[2], path);
  if (m.dim != 1 && m.dim != 2) throw std::runtime_error(path + ": dim must be 1 or 2");
  const long rows = (m.dim == 1) ? 1 : m.ny;
  for (long j = 0; j < rows; ++j) {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated mask");
    auto cells = split_commas(line);
    if (static_cast<long>(cells.size()) != m.nx) throw std::runtime_error(path + ": row length mismatch");
    for (auto& c : cells) {
      long v = parse_long(c, path);
      if (v != 0 && v != 1) throw std::runtime_error(path + ": mask entries must be 0 or 1");
      m.mask.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return m;
}

}  // namespace pflow
