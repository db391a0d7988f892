#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "noisyuat/grid.hpp"
#include "noisyuat/tasks.hpp"

namespace noisyuat {

// Grayscale image on [0,1]^2. Pixel (i, j), row i and column j, covers
// [j/W, (j+1)/W) x [i/H, (i+1)/H); the first coordinate runs along columns.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major, values in [0,1]

  double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  void validate() const;
};

// Largest lattice point k/hbar not above z.
double quantize_down(double z, int hbar);
Eigen::VectorXd quantize_down(const Eigen::Ref<const Eigen::VectorXd>& z, int hbar);

// Exact pixel-area-weighted mean over the cube, then quantize_down.
double average_cube(const GrayImage& img, const CubeIndex& cube, const CubeGrid& grid, int hbar);

// Cube mean of f by tensor Gauss-Legendre quadrature (20 nodes per axis),
// then quantize_down.
Eigen::VectorXd average_cube(const Target& f, const CubeIndex& cube, const CubeGrid& grid, int hbar);

struct CoarseningReport {
  int q = 0;
  int hbar = 0;
  Eigen::MatrixXd superpixels;  // q x q; entry (r, c) is the cube in row band r, column band c
  int distinct = 0;             // kappa
  double ratio = 0.0;           // kappa / q^2
};

CoarseningReport coarsen_image(const GrayImage& img, int q, int hbar);

// CSV with header `q,hbar,kappa,ratio`, one row per report.
std::string coarsening_csv(const std::vector<CoarseningReport>& reports);

enum class HatScale {
  grid,     // (1 - 2q |Qbar - x|_inf)_+ : 1 at its midpoint, 0 at every other
  printed,  // (1 - 2^-hbar |Qbar - x|_inf)_+
};

// f_{q,hbar}(x) = sum over cubes of A_{Q,hbar}(f) phi_Q(x), with the cube
// averages computed once at construction.
class CoarsenedFunction {
 public:
  CoarsenedFunction(const Target& f, const CubeGrid& grid, int hbar, HatScale hat = HatScale::grid);

  Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  const Eigen::VectorXd& cube_average(std::int64_t linear) const { return averages_.at(static_cast<std::size_t>(linear)); }
  const CubeGrid& grid() const noexcept { return grid_; }

 private:
  double hat(const Eigen::Ref<const Eigen::VectorXd>& x, std::int64_t linear) const;

  CubeGrid grid_;
  int hbar_;
  HatScale scale_;
  std::vector<Eigen::VectorXd> averages_;
};

Eigen::VectorXd coarsened_eval(const Target& f, const CubeGrid& grid, int hbar,
                               const Eigen::Ref<const Eigen::VectorXd>& x, HatScale hat = HatScale::grid);

// P2 (ASCII) or P5 (binary, 8 or 16 bit) with maxval <= 65535, scaled to [0,1].
GrayImage parse_pgm(std::string_view bytes);
GrayImage load_pgm(const std::filesystem::path& path);
std::string to_pgm_p2(const GrayImage& img, int maxval = 255);

// Numeric CSV matrix, one image row per line; values are clipped to [0,1]
// with a warning.
GrayImage load_csv_matrix(const std::filesystem::path& path);

}  // namespace noisyuat
