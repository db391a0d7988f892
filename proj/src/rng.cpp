#include "noisyuat/rng.hpp"

#include <limits>

#include <boost/random/normal_distribution.hpp>

#include "noisyuat/errors.hpp"

namespace noisyuat {

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 finaliser applied to (master, stream)
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw ValidationError("uniform_index: empty range");
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<std::size_t>(r % range);
}

double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

void fill_standard_normal(Rng& rng, Eigen::MatrixXd& m) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
}

}  // namespace noisyuat
