#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "noisyuat/grid.hpp"
#include "noisyuat/rng.hpp"

namespace noisyuat {

// A map [0,1]^d -> R^D.
struct Target {
  int d = 1;
  int D = 1;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return fn(x); }
};

// Surjective assignment of the q^d cubes onto classes 1..kappa.
//
// Grids with at most 2^24 cubes store one class id per cube. Larger grids use
// a hashed rule (splitmix of the linear cube index, mod kappa), which is
// checked for surjectivity once at construction.
class SymmetryMap {
 public:
  static constexpr std::int64_t kDenseLimit = std::int64_t{1} << 24;

  // `classes[linear_index]` in 1..kappa; every class must occur.
  SymmetryMap(CubeGrid grid, std::vector<int> classes);
  // Hashed rule for grids of any size.
  static SymmetryMap hashed(CubeGrid grid, int kappa, std::uint64_t salt = 0);

  const CubeGrid& grid() const noexcept { return grid_; }
  int kappa() const noexcept { return kappa_; }
  bool is_dense() const noexcept { return !classes_.empty(); }

  int class_of(const CubeIndex& idx) const;
  int class_of_linear(std::int64_t linear) const;

 private:
  SymmetryMap(CubeGrid grid, int kappa, std::uint64_t salt);

  CubeGrid grid_;
  int kappa_ = 1;
  std::vector<int> classes_;
  std::uint64_t salt_ = 0;
};

// Random surjective symmetry: kappa distinct cubes seed the classes, the rest
// are assigned uniformly.
SymmetryMap random_symmetry(const CubeGrid& grid, int kappa, Rng& rng);

struct SymmetricSpec {
  SymmetryMap symmetry;
  std::vector<Eigen::VectorXd> betas;  // betas[k-1] is the value of class k
  double separation = 0.0;             // epsilon
  int smoothness = 1;                  // s
};

// Unnormalised profile ReLU^s(2 - ReLU^s(2t + 1/2) - ReLU^s(1/2 - 2t)).
double bump_profile(int s, double t);
// Product of normalised profiles; 1 at the origin, supported in [-1,1]^d.
double bump_psi(int s, const Eigen::Ref<const Eigen::VectorXd>& u);

// True iff every pair of values is at least eps apart in the sup norm.
bool check_separation(const std::vector<Eigen::VectorXd>& values, double eps);

// C^s target with f(midpoint of Q) = beta_{S(Q)}: a bump of radius 3/(8q)
// around every midpoint, weighted by the class value.
Target make_symmetric_function(const SymmetricSpec& spec);

// Piecewise-constant symmetric target: f(x) = beta_{S(Q(x))} on the
// half-open tiling. Cube means equal midpoint values exactly.
Target make_cellwise_function(const SymmetryMap& symmetry, const std::vector<Eigen::VectorXd>& betas);

enum class NoiseKind { none, gaussian, uniform_bounded };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double param = 0.0;  // sigma for gaussian, half-width a for uniform on [-a, a]

  static NoiseSpec none() { return {}; }
  static NoiseSpec gaussian(double sigma);
  static NoiseSpec uniform_bounded(double a);

  // Variance proxy of the (centred, sub-Gaussian) law.
  double sigma() const noexcept;
};

// Uniform law on [0,1]^d, or uniform on a union of cubes of `grid` with equal
// mass per listed cube. Both laws are non-atomic.
struct SamplerSpec {
  std::vector<std::int64_t> support_cubes;  // empty means the whole unit cube
  int q = 1;                                // scale of the support cubes

  static SamplerSpec unit_cube() { return {}; }
  static SamplerSpec cubes(int q, std::vector<std::int64_t> linear_indices);
};

struct TaskSpec {
  Target target;
  SamplerSpec sampler;
  NoiseSpec noise;
};

// Column-per-sample storage: inputs is d x N, labels is D x N.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd labels;

  int d() const noexcept { return static_cast<int>(inputs.rows()); }
  int D() const noexcept { return static_cast<int>(labels.rows()); }
  std::int64_t size() const noexcept { return inputs.cols(); }

  // Throws ValidationError on mismatched shapes, non-finite values or inputs
  // outside [0,1]^d.
  void validate() const;
};

Dataset sample_training_set(const TaskSpec& task, std::int64_t n, Rng& rng);
Dataset sample_training_set(const TaskSpec& task, std::int64_t n, std::uint64_t seed);

// Noiseless samples at every cube midpoint, in linear cube order.
Dataset midpoint_samples(const Target& f, const CubeGrid& grid);

enum class BenchFunction { oscillatory, singular };

BenchFunction parse_bench_function(std::string_view name);
std::string_view bench_function_name(BenchFunction fn);

// oscillatory: sqrt|sin 6x| + min(max(e^x, 1) - 1, 3)
// singular:    1/sqrt|sin 3x| - e^{-x}      (domain error where sin 3x = 0)
double bench_function(BenchFunction fn, double x);
Target bench_target(BenchFunction fn);

// Header x1..xd,y1..yD then one sample per row.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(std::string_view text, int d);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
// `d` < 0 infers the split from the header names.
Dataset read_dataset_csv(const std::filesystem::path& path, int d = -1);

}  // namespace noisyuat
