#include "noisyuat/grid.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "noisyuat/errors.hpp"

namespace noisyuat {

CubeGrid::CubeGrid(int d, int q) : d_(d), q_(q), count_(1) {
  if (d < 1) throw ValidationError("CubeGrid: dimension d must be >= 1, got " + std::to_string(d));
  if (q < 1) throw ValidationError("CubeGrid: scale q must be >= 1, got " + std::to_string(q));
  for (int k = 0; k < d; ++k) {
    if (count_ > std::numeric_limits<std::int64_t>::max() / q)
      throw ValidationError("CubeGrid: q^d overflows a 64-bit cube count");
    count_ *= q;
  }
}

bool is_valid(const CubeIndex& idx, const CubeGrid& grid) {
  if (static_cast<int>(idx.coords.size()) != grid.d()) return false;
  for (int c : idx.coords)
    if (c < 0 || c >= grid.q()) return false;
  return true;
}

CubeIndex cube_index(const Eigen::Ref<const Eigen::VectorXd>& x, const CubeGrid& grid) {
  if (x.size() != grid.d())
    throw ValidationError("cube_index: point has dimension " + std::to_string(x.size()) +
                          ", grid has " + std::to_string(grid.d()));
  CubeIndex idx;
  idx.coords.resize(grid.d());
  for (int k = 0; k < grid.d(); ++k) {
    const double v = x(k);
    if (!(v >= 0.0 && v <= 1.0))
      throw DomainError("cube_index: coordinate " + std::to_string(k) + " = " + std::to_string(v) +
                        " outside [0,1]");
    int i = static_cast<int>(std::floor(v * grid.q()));
    // v*q can round across a face; settle against the exact face i/q
    if (i > 0 && v < static_cast<double>(i) / grid.q()) --i;
    if (i + 1 < grid.q() && v >= static_cast<double>(i + 1) / grid.q()) ++i;
    idx.coords[k] = std::min(i, grid.q() - 1);
  }
  return idx;
}

Point midpoint(const CubeIndex& idx, const CubeGrid& grid) {
  if (!is_valid(idx, grid)) throw ValidationError("midpoint: cube index out of range for grid");
  Point p(grid.d());
  for (int k = 0; k < grid.d(); ++k)
    p(k) = static_cast<double>(2 * idx.coords[k] + 1) / (2.0 * grid.q());
  return p;
}

bool is_good_point(const Eigen::Ref<const Eigen::VectorXd>& x, const CubeGrid& grid, double tol) {
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double j = std::round(x(k) * grid.q());
    for (double face : {j - 1, j, j + 1}) {
      if (face <= 0 || face >= grid.q()) continue;
      if (std::abs(x(k) - face / grid.q()) <= tol) return false;
    }
  }
  return true;
}

std::int64_t linear_index(const CubeIndex& idx, const CubeGrid& grid) {
  if (!is_valid(idx, grid)) throw ValidationError("linear_index: cube index out of range for grid");
  std::int64_t lin = 0;
  for (int c : idx.coords) lin = lin * grid.q() + c;
  return lin;
}

CubeIndex cube_from_linear(std::int64_t linear, const CubeGrid& grid) {
  if (linear < 0 || linear >= grid.cube_count())
    throw ValidationError("cube_from_linear: index " + std::to_string(linear) + " out of range");
  CubeIndex idx;
  idx.coords.resize(grid.d());
  for (int k = grid.d() - 1; k >= 0; --k) {
    idx.coords[k] = static_cast<int>(linear % grid.q());
    linear /= grid.q();
  }
  return idx;
}

}  // namespace noisyuat
