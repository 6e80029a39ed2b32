#include "fkhom/grid.hpp"

#include "fkhom/errors.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace fkhom {

GridWindow GridWindow::centered(const Eigen::Vector2d& c, double side, double h) {
  const int n = static_cast<int>(std::ceil(side / h));
  GridWindow w;
  w.nx = n;
  w.ny = n;
  w.h = h;
  // Snap the origin to the lattice h*Z^2 so windows built this way stay compatible.
  w.origin = Eigen::Vector2d(std::round((c(0) - 0.5 * n * h) / h) * h, std::round((c(1) - 0.5 * n * h) / h) * h);
  return w;
}

DomainMask::DomainMask(const GridWindow& w) : window_(w), cells_(Cells::Zero(w.nx, w.ny)) {}

long DomainMask::count() const { return static_cast<long>(cells_.cast<long>().sum()); }

bool DomainMask::is_boundary(int i, int j) const {
  if (!(*this)(i, j)) return false;
  return !(*this)(i - 1, j) || !(*this)(i + 1, j) || !(*this)(i, j - 1) || !(*this)(i, j + 1);
}

std::vector<Eigen::Vector2i> DomainMask::boundary_cells() const {
  std::vector<Eigen::Vector2i> out;
  for (int j = 0; j < ny(); ++j)
    for (int i = 0; i < nx(); ++i)
      if (is_boundary(i, j)) out.emplace_back(i, j);
  return out;
}

long DomainMask::boundary_faces() const {
  long faces = 0;
  for (int j = 0; j < ny(); ++j)
    for (int i = 0; i < nx(); ++i) {
      if (!(*this)(i, j)) continue;
      faces += !(*this)(i - 1, j) + !(*this)(i + 1, j) + !(*this)(i, j - 1) + !(*this)(i, j + 1);
    }
  return faces;
}

Eigen::Vector2d DomainMask::barycenter() const {
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  long n = 0;
  for (int j = 0; j < ny(); ++j)
    for (int i = 0; i < nx(); ++i)
      if (cells_(i, j)) {
        s += window_.center(i, j);
        ++n;
      }
  if (n == 0) throw DomainError("barycenter of an empty mask");
  return s / static_cast<double>(n);
}

bool DomainMask::has_margin() const {
  for (int i = 0; i < nx(); ++i)
    if (cells_(i, 0) || cells_(i, ny() - 1)) return false;
  for (int j = 0; j < ny(); ++j)
    if (cells_(0, j) || cells_(nx() - 1, j)) return false;
  return true;
}

bool operator==(const DomainMask& a, const DomainMask& b) {
  const auto& wa = a.window();
  const auto& wb = b.window();
  return wa.nx == wb.nx && wa.ny == wb.ny && wa.h == wb.h && wa.origin == wb.origin && (a.cells_ == b.cells_).all();
}

namespace {

Eigen::Vector2i lattice_offset(const GridWindow& from, const GridWindow& to) {
  if (std::abs(from.h - to.h) > 1e-12 * from.h) throw DomainError("grid windows have different spacing");
  const Eigen::Vector2d d = (from.origin - to.origin) / from.h;
  const Eigen::Vector2d r = d.array().round();
  if ((d - r).cwiseAbs().maxCoeff() > 1e-6) throw DomainError("grid windows are not on a common lattice");
  return r.cast<int>();
}

}  // namespace

DomainMask embed(const DomainMask& m, const GridWindow& target) {
  const Eigen::Vector2i off = lattice_offset(m.window(), target);
  DomainMask out(target);
  for (int j = 0; j < m.ny(); ++j)
    for (int i = 0; i < m.nx(); ++i) {
      if (!m(i, j)) continue;
      const int ti = i + off(0), tj = j + off(1);
      if (target.contains(ti, tj)) out.set(ti, tj, true);
    }
  return out;
}

GridWindow common_window(const GridWindow& a, const GridWindow& b) {
  const Eigen::Vector2i off = lattice_offset(b, a);  // b's cell (0,0) sits at a-index off
  const int i0 = std::min(0, off(0)), j0 = std::min(0, off(1));
  const int i1 = std::max(a.nx, off(0) + b.nx), j1 = std::max(a.ny, off(1) + b.ny);
  GridWindow w;
  w.h = a.h;
  w.nx = i1 - i0;
  w.ny = j1 - j0;
  w.origin = a.origin + a.h * Eigen::Vector2d(i0, j0);
  return w;
}

double symmetric_difference_volume(const DomainMask& a, const DomainMask& b) {
  const GridWindow w = common_window(a.window(), b.window());
  const DomainMask ea = embed(a, w), eb = embed(b, w);
  const long n = (ea.cells() != eb.cells()).count();
  return w.h * w.h * static_cast<double>(n);
}

DomainMask shift_cells(const DomainMask& m, int di, int dj) {
  DomainMask out(m.window());
  for (int j = 0; j < m.ny(); ++j)
    for (int i = 0; i < m.nx(); ++i)
      if (m(i, j) && m.window().contains(i + di, j + dj)) out.set(i + di, j + dj, true);
  return out;
}

DomainMask dilate(const DomainMask& m) {
  DomainMask out(m.window());
  for (int j = 0; j < m.ny(); ++j)
    for (int i = 0; i < m.nx(); ++i)
      out.set(i, j, m(i, j) || m(i - 1, j) || m(i + 1, j) || m(i, j - 1) || m(i, j + 1));
  return out;
}

DomainMask erode(const DomainMask& m) {
  DomainMask out(m.window());
  for (int j = 0; j < m.ny(); ++j)
    for (int i = 0; i < m.nx(); ++i) out.set(i, j, m(i, j) && !m.is_boundary(i, j));
  return out;
}

Eigen::ArrayXXi label_components(const DomainMask& m, int* count) {
  Eigen::ArrayXXi labels = Eigen::ArrayXXi::Constant(m.nx(), m.ny(), -1);
  int next = 0;
  std::vector<Eigen::Vector2i> stack;
  for (int j = 0; j < m.ny(); ++j)
    for (int i = 0; i < m.nx(); ++i) {
      if (!m(i, j) || labels(i, j) >= 0) continue;
      labels(i, j) = next;
      stack.assign(1, Eigen::Vector2i(i, j));
      while (!stack.empty()) {
        const Eigen::Vector2i p = stack.back();
        stack.pop_back();
        const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (const auto& d : nb) {
          const int a = p(0) + d[0], b = p(1) + d[1];
          if (m(a, b) && labels(a, b) < 0) {
            labels(a, b) = next;
            stack.emplace_back(a, b);
          }
        }
      }
      ++next;
    }
  if (count) *count = next;
  return labels;
}

DomainMask disk_mask(const GridWindow& w, const Eigen::Vector2d& c, double r) {
  return mask_from(w, [&](const Eigen::Vector2d& x) { return (x - c).squaredNorm() < r * r; });
}

DomainMask box_mask(const GridWindow& w, const Eigen::Vector2d& lo, const Eigen::Vector2d& hi) {
  return mask_from(w, [&](const Eigen::Vector2d& x) { return (x.array() > lo.array()).all() && (x.array() < hi.array()).all(); });
}

void write_mask(std::ostream& os, const DomainMask& m) {
  const auto& w = m.window();
  os << "FKMASK 1 " << w.nx << ' ' << w.ny << ' ' << std::setprecision(17) << w.h << ' ' << w.origin(0) << ' '
     << w.origin(1) << '\n';
  std::string row(static_cast<std::size_t>(w.nx), '0');
  for (int j = 0; j < w.ny; ++j) {
    for (int i = 0; i < w.nx; ++i) row[static_cast<std::size_t>(i)] = m(i, j) ? '1' : '0';
    os << row << '\n';
  }
}

DomainMask read_mask(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw ConfigError("mask file: missing header");
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  GridWindow w;
  if (!(hs >> magic >> version >> w.nx >> w.ny >> w.h >> w.origin(0) >> w.origin(1)) || magic != "FKMASK" ||
      version != 1)
    throw ConfigError("mask file: malformed header '" + header + "'");
  std::string extra;
  if (hs >> extra) throw ConfigError("mask file: trailing header fields");
  if (w.nx <= 0 || w.ny <= 0 || !(w.h > 0.0)) throw ConfigError("mask file: invalid dimensions");
  DomainMask m(w);
  std::string row;
  for (int j = 0; j < w.ny; ++j) {
    if (!std::getline(is, row)) throw ConfigError("mask file: expected " + std::to_string(w.ny) + " rows");
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (static_cast<int>(row.size()) != w.nx) throw ConfigError("mask file: row " + std::to_string(j) + " has wrong length");
    for (int i = 0; i < w.nx; ++i) {
      const char c = row[static_cast<std::size_t>(i)];
      if (c != '0' && c != '1') throw ConfigError("mask file: invalid character in row " + std::to_string(j));
      m.set(i, j, c == '1');
    }
  }
  return m;
}

void save_mask(const std::string& path, const DomainMask& m) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write mask file " + path);
  write_mask(os, m);
}

DomainMask load_mask(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open mask file " + path);
  return read_mask(is);
}

}  // namespace fkhom
