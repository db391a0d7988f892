#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace noisyuat {

using Point = Eigen::VectorXd;

// Partition of [0,1]^d into q^d axis-aligned cubes of side 1/q.
class CubeGrid {
 public:
  CubeGrid(int d, int q);

  int d() const noexcept { return d_; }
  int q() const noexcept { return q_; }
  std::int64_t cube_count() const noexcept { return count_; }

  bool operator==(const CubeGrid&) const = default;

 private:
  int d_;
  int q_;
  std::int64_t count_;
};

struct CubeIndex {
  std::vector<int> coords;

  auto operator<=>(const CubeIndex&) const = default;
};

// Half-open cells [i/q, (i+1)/q), with the last cell closed at 1.
CubeIndex cube_index(const Eigen::Ref<const Eigen::VectorXd>& x, const CubeGrid& grid);

// Cube centre ((2 i_k + 1) / (2q))_k.
Point midpoint(const CubeIndex& idx, const CubeGrid& grid);

// False when some coordinate lies within `tol` of an interior face i/q, 0 < i < q.
bool is_good_point(const Eigen::Ref<const Eigen::VectorXd>& x, const CubeGrid& grid,
                   double tol = 0.0);

// Row-major linearisation; coords[0] is the most significant digit.
std::int64_t linear_index(const CubeIndex& idx, const CubeGrid& grid);
CubeIndex cube_from_linear(std::int64_t linear, const CubeGrid& grid);

bool is_valid(const CubeIndex& idx, const CubeGrid& grid);

}  // namespace noisyuat
