#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pflow {

/// Uniform grid over an interval or rectangle with homogeneous Dirichlet
/// boundary. Only interior nodes are stored; boundary values are implicit
/// zeros. A node mask carves a general domain out of the bounding rectangle;
/// nodes outside the mask are pinned to zero exactly like boundary nodes.
class Grid {
public:
  static std::shared_ptr<const Grid> interval(double length, long n);
  static std::shared_ptr<const Grid> rectangle(double lx, double ly, long nx, long ny);
  static std::shared_ptr<const Grid> masked_rectangle(double lx, double ly, long nx, long ny,
                                                      std::vector<std::uint8_t> mask);

  int dim() const { return dim_; }
  long nx() const { return nx_; }
  long ny() const { return ny_; }    // 0 in 1D
  double lx() const { return lx_; }
  double ly() const { return ly_; }  // 0 in 1D
  double hx() const { return hx_; }
  double hy() const { return hy_; }  // 0 in 1D
  double cell_volume() const { return vol_; }

  /// Number of interior storage slots: nx (1D) or nx*ny (2D).
  long num_nodes() const { return static_cast<long>(mask_.size()); }
  /// Number of mask-true (degree-of-freedom) nodes.
  long num_active() const { return active_; }
  bool fully_active() const { return active_ == num_nodes(); }

  bool active(long idx) const { return mask_[static_cast<std::size_t>(idx)] != 0; }
  std::span<const std::uint8_t> mask() const { return mask_; }

  long index(long i, long j) const { return j * nx_ + i; }
  double node_x(long i) const { return hx_ * static_cast<double>(i + 1); }
  double node_y(long j) const { return hy_ * static_cast<double>(j + 1); }

  /// Same dimension, counts, spacings and mask.
  bool same_layout(const Grid& other) const;

private:
  Grid() = default;

  int dim_ = 1;
  long nx_ = 0, ny_ = 0;
  double lx_ = 0, ly_ = 0, hx_ = 0, hy_ = 0, vol_ = 0;
  long active_ = 0;
  std::vector<std::uint8_t> mask_;
};

/// Node values of a function on a Grid. Immutable after construction.
/// Values at masked-out nodes are forced to zero; non-finite values are
/// rejected.
class GridFunction {
public:
  GridFunction() = default;

  static GridFunction zeros(std::shared_ptr<const Grid> grid);
  GridFunction(std::shared_ptr<const Grid> grid, std::vector<double> values);

  bool valid() const { return static_cast<bool>(grid_); }
  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](long idx) const { return values_[static_cast<std::size_t>(idx)]; }
  long size() const { return static_cast<long>(values_.size()); }

private:
  std::shared_ptr<const Grid> grid_;
  std::vector<double> values_;
};

/// Sum over nodes of cell_volume * |u_i|^p. Requires p >= 2.
double lp_mass(const GridFunction& u, double p);

/// Max over nodes of |u_i|.
double sup_norm(const GridFunction& u);

/// c * u.
GridFunction scale(const GridFunction& u, double c);

/// u + c * w (same grid required).
GridFunction add_scaled(const GridFunction& u, const GridFunction& w, double c);

// --- snapshot / mask text files ---------------------------------------------
//
// Snapshot: line 1 is `dim,nx,ny,hx,hy,p,t` (ny = hy = 0 in 1D), followed by
// the interior values in row-major order, one grid row per line,
// comma-separated, printed with 17 significant digits.
// Mask file: same layout with 0/1 entries and header `dim,nx,ny`.

struct Snapshot {
  int dim = 1;
  long nx = 0, ny = 0;
  double hx = 0, hy = 0;
  double p = 0, t = 0;
  std::vector<double> values;
};

void write_snapshot(const std::string& path, const GridFunction& u, double p, double t);
Snapshot read_snapshot(const std::string& path);

/// Attach snapshot values to an existing grid; layout must match.
GridFunction snapshot_function(const Snapshot& snap, std::shared_ptr<const Grid> grid);

struct MaskData {
  int dim = 2;
  long nx = 0, ny = 0;
  std::vector<std::uint8_t> mask;
};

void write_mask(const std::string& path, const Grid& grid);
MaskData read_mask(const std::string& path);

namespace detail {
double lp_mass_raw(const Grid& g, std::span<const double> v, double p);
double sup_norm_raw(std::span<const double> v);
}  // namespace detail

}  // namespace pflow
