#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace noisyuat {

// All randomness goes through an explicitly passed engine. The engine and
// the normal sampler are both fully specified, so a seed reproduces the same
// draws on any platform.
using Rng = std::mt19937_64;

inline constexpr std::string_view kRngId = "mt19937_64/boost-ziggurat-normal/u53";

// Substreams derived from one master seed, one per consumer.
enum class Stream : std::uint64_t {
  sampling = 1,
  cluster = 2,
  encoder = 3,
  test_sampling = 4,
  baseline = 5,
  probes = 6,
  task = 7,
};

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);
inline std::uint64_t split_seed(std::uint64_t master, Stream stream) {
  return split_seed(master, static_cast<std::uint64_t>(stream));
}

// Uniform on [0,1) with 53 random bits.
double uniform01(Rng& rng);

// Uniform on {0, ..., n-1}; n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

double standard_normal(Rng& rng);

// Fills `m` with i.i.d. N(0,1) draws in row-major order.
void fill_standard_normal(Rng& rng, Eigen::MatrixXd& m);

}  // namespace noisyuat
