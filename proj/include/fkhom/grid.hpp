#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fkhom {

/// Scalar values on the cells of a window, indexed (i, j) with i along x.
using GridFunction = Eigen::ArrayXXd;

/// Rectangular window of nx x ny square cells of side h. Cell (i, j) covers
/// origin + h*[i, i+1] x h*[j, j+1].
struct GridWindow {
  int nx = 0;
  int ny = 0;
  double h = 1.0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();

  Eigen::Vector2d center(int i, int j) const { return origin + h * Eigen::Vector2d(i + 0.5, j + 0.5); }
  bool contains(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  long cells() const { return static_cast<long>(nx) * ny; }

  /// Square window of side `side` (rounded up to whole cells) centred at c.
  static GridWindow centered(const Eigen::Vector2d& c, double side, double h);
};

/// Binary occupancy grid representing a bounded open set U.
class DomainMask {
 public:
  using Cells = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

  DomainMask() = default;
  explicit DomainMask(const GridWindow& w);

  const GridWindow& window() const { return window_; }
  int nx() const { return window_.nx; }
  int ny() const { return window_.ny; }
  double h() const { return window_.h; }

  bool operator()(int i, int j) const { return window_.contains(i, j) && cells_(i, j) != 0; }
  void set(int i, int j, bool v) { cells_(i, j) = v ? 1 : 0; }
  const Cells& cells() const { return cells_; }
  Cells& cells() { return cells_; }

  long count() const;
  double volume() const { return window_.h * window_.h * static_cast<double>(count()); }
  bool empty() const { return count() == 0; }

  /// Occupied cell with an unoccupied (or off-window) 4-neighbour.
  bool is_boundary(int i, int j) const;
  std::vector<Eigen::Vector2i> boundary_cells() const;
  /// Number of cell faces between occupied and unoccupied cells.
  long boundary_faces() const;
  /// Staircase perimeter h * boundary_faces().
  double perimeter() const { return window_.h * static_cast<double>(boundary_faces()); }

  Eigen::Vector2d barycenter() const;
  /// True when no occupied cell lies on the outermost ring of the window.
  bool has_margin() const;

  friend bool operator==(const DomainMask& a, const DomainMask& b);

 private:
  GridWindow window_;
  Cells cells_;
};

/// Re-embed a mask into another window of the same spacing whose origin
/// differs by a whole number of cells. Cells that fall outside are dropped.
DomainMask embed(const DomainMask& m, const GridWindow& target);

/// Smallest window (same lattice) covering both masks' windows.
GridWindow common_window(const GridWindow& a, const GridWindow& b);

/// |A Delta B| computed on the common window.
double symmetric_difference_volume(const DomainMask& a, const DomainMask& b);

/// Translate the occupancy by whole cells inside the same window.
DomainMask shift_cells(const DomainMask& m, int di, int dj);

/// Elementary 4-neighbour morphology.
DomainMask dilate(const DomainMask& m);
DomainMask erode(const DomainMask& m);

/// 4-connected components; labels(i, j) = -1 outside, otherwise 0..k-1.
Eigen::ArrayXXi label_components(const DomainMask& m, int* count = nullptr);

/// Mask from a cellwise predicate on cell centres.
template <typename Pred>
DomainMask mask_from(const GridWindow& w, Pred&& inside) {
  DomainMask m(w);
  for (int j = 0; j < w.ny; ++j)
    for (int i = 0; i < w.nx; ++i) m.set(i, j, inside(w.center(i, j)));
  return m;
}

DomainMask disk_mask(const GridWindow& w, const Eigen::Vector2d& c, double r);
DomainMask box_mask(const GridWindow& w, const Eigen::Vector2d& lo, const Eigen::Vector2d& hi);

/// Mask file: `FKMASK 1 <nx> <ny> <h> <ox> <oy>` then ny rows of nx '0'/'1',
/// first row at the window origin.
void write_mask(std::ostream& os, const DomainMask& m);
DomainMask read_mask(std::istream& is);
void save_mask(const std::string& path, const DomainMask& m);
DomainMask load_mask(const std::string& path);

}  // namespace fkhom
