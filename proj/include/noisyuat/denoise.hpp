#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "noisyuat/grid.hpp"
#include "noisyuat/tasks.hpp"

namespace noisyuat {

struct DenoisedEntry {
  CubeIndex cube;
  Point x;            // midpoint of `cube`
  Eigen::VectorXd y;  // mean label of the samples in `cube`
  std::int64_t count = 0;
};

// One entry per occupied cube, in increasing linear cube order.
struct DenoisedDataset {
  CubeGrid grid{1, 1};
  std::vector<DenoisedEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  int D() const noexcept { return entries.empty() ? 0 : static_cast<int>(entries.front().y.size()); }
  std::int64_t total_count() const;

  // Midpoints and mean labels as a plain dataset.
  Dataset to_dataset() const;
};

// Averages labels cube by cube. Each coordinate is summed in sorted order
// with Neumaier compensation, so the result does not depend on sample order.
DenoisedDataset denoise(const Dataset& data, const CubeGrid& grid);

struct SamplingProfile {
  std::int64_t Q_star = 1;  // supported cubes
  double p_star = 1.0;      // smallest supported-cube mass
  double sigma_bar = 1.0;   // max(1, sigma)
  double L = 1.0;           // Lipschitz constant
  double delta = 0.1;       // failure probability

  // Q_star = q^d and p_star = q^-d for the uniform law on [0,1]^d.
  static SamplingProfile uniform(const CubeGrid& grid, double sigma, double L, double delta);
};

enum class SampleBound { lipschitz, modulus };

struct SampleSize {
  std::int64_t n = 0;
  double raw = 0.0;  // value before the ceiling
  SampleBound bound = SampleBound::lipschitz;
};

// Lipschitz form; requires L > 0 and q >= L / eps.
SampleSize min_samples(const SamplingProfile& profile, const CubeGrid& grid, double eps);

// Modulus-of-continuity form: `modulus_inverse` is the inverse of a strictly
// increasing continuous modulus. Requires q >= sqrt(d) / modulus_inverse(sqrt(d) / eps).
SampleSize min_samples(const SamplingProfile& profile, const CubeGrid& grid, double eps,
                       const std::function<double(double)>& modulus_inverse);

// Largest l2 gap between f at a midpoint and the averaged label there.
double recovery_error(const DenoisedDataset& den, const Target& f);

// Header cube_i1..cube_id,x1..xd,y1..yD,count.
std::string denoised_to_csv(const DenoisedDataset& den);
DenoisedDataset denoised_from_csv(std::string_view text, const CubeGrid& grid);
void write_denoised_csv(const std::filesystem::path& path, const DenoisedDataset& den);
DenoisedDataset read_denoised_csv(const std::filesystem::path& path, const CubeGrid& grid);

}  // namespace noisyuat
