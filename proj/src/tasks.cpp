#include "noisyuat/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "noisyuat/csv.hpp"
#include "noisyuat/errors.hpp"

namespace noisyuat {
namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double relu_pow(double v, int s) { return v > 0.0 ? std::pow(v, s) : 0.0; }

void check_betas(const SymmetryMap& symmetry, const std::vector<Eigen::VectorXd>& betas) {
  if (static_cast<int>(betas.size()) != symmetry.kappa())
    throw ValidationError("symmetric task: " + std::to_string(betas.size()) + " class values for kappa = " +
                          std::to_string(symmetry.kappa()));
  for (const auto& b : betas) {
    if (b.size() != betas.front().size() || b.size() == 0)
      throw ValidationError("symmetric task: class values must share one positive output dimension");
    if (!b.allFinite()) throw ValidationError("symmetric task: non-finite class value");
  }
}

}  // namespace

// ---------------------------------------------------------------- symmetry

SymmetryMap::SymmetryMap(CubeGrid grid, std::vector<int> classes) : grid_(grid), classes_(std::move(classes)) {
  if (static_cast<std::int64_t>(classes_.size()) != grid_.cube_count())
    throw ValidationError("SymmetryMap: expected " + std::to_string(grid_.cube_count()) + " class ids, got " +
                          std::to_string(classes_.size()));
  if (grid_.cube_count() > kDenseLimit)
    throw ValidationError("SymmetryMap: dense storage is limited to 2^24 cubes; use SymmetryMap::hashed");
  kappa_ = *std::max_element(classes_.begin(), classes_.end());
  if (*std::min_element(classes_.begin(), classes_.end()) < 1)
    throw ValidationError("SymmetryMap: class ids start at 1");
  std::vector<char> seen(static_cast<std::size_t>(kappa_) + 1, 0);
  for (int c : classes_) seen[static_cast<std::size_t>(c)] = 1;
  for (int k = 1; k <= kappa_; ++k)
    if (!seen[static_cast<std::size_t>(k)])
      throw ValidationError("SymmetryMap: class " + std::to_string(k) + " is empty (map must be surjective)");
}

SymmetryMap::SymmetryMap(CubeGrid grid, int kappa, std::uint64_t salt) : grid_(grid), kappa_(kappa), salt_(salt) {}

SymmetryMap SymmetryMap::hashed(CubeGrid grid, int kappa, std::uint64_t salt) {
  if (kappa < 1 || kappa > grid.cube_count())
    throw ValidationError("SymmetryMap: kappa must lie in [1, q^d]");
  SymmetryMap map(grid, kappa, salt);
  std::vector<char> seen(static_cast<std::size_t>(kappa) + 1, 0);
  int missing = kappa;
  for (std::int64_t lin = 0; lin < grid.cube_count() && missing > 0; ++lin) {
    const int c = map.class_of_linear(lin);
    if (!seen[static_cast<std::size_t>(c)]) {
      seen[static_cast<std::size_t>(c)] = 1;
      --missing;
    }
  }
  if (missing > 0) throw ValidationError("SymmetryMap: hashed rule is not surjective for this salt");
  return map;
}

int SymmetryMap::class_of(const CubeIndex& idx) const { return class_of_linear(linear_index(idx, grid_)); }

int SymmetryMap::class_of_linear(std::int64_t linear) const {
  if (!classes_.empty()) return classes_.at(static_cast<std::size_t>(linear));
  return static_cast<int>(mix64(static_cast<std::uint64_t>(linear) ^ salt_) % static_cast<std::uint64_t>(kappa_)) + 1;
}

SymmetryMap random_symmetry(const CubeGrid& grid, int kappa, Rng& rng) {
  if (kappa < 1 || kappa > grid.cube_count()) throw ValidationError("random_symmetry: kappa must lie in [1, q^d]");
  const auto n = static_cast<std::size_t>(grid.cube_count());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // partial Fisher-Yates picks kappa distinct seed cubes
  for (std::size_t i = 0; i < static_cast<std::size_t>(kappa); ++i) {
    const std::size_t j = i + uniform_index(rng, n - i);
    std::swap(order[i], order[j]);
  }
  std::vector<int> classes(n, 0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(kappa); ++i) classes[order[i]] = static_cast<int>(i) + 1;
  for (std::size_t lin = 0; lin < n; ++lin)
    if (classes[lin] == 0) classes[lin] = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(kappa))) + 1;
  return SymmetryMap(grid, std::move(classes));
}

// ---------------------------------------------------------------- targets

double bump_profile(int s, double t) {
  if (s < 1) throw ValidationError("bump_profile: smoothness s must be >= 1");
  return relu_pow(2.0 - relu_pow(2.0 * t + 0.5, s) - relu_pow(0.5 - 2.0 * t, s), s);
}

double bump_psi(int s, const Eigen::Ref<const Eigen::VectorXd>& u) {
  const double norm = bump_profile(s, 0.0);
  double v = 1.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) v *= bump_profile(s, u(i)) / norm;
  return v;
}

bool check_separation(const std::vector<Eigen::VectorXd>& values, double eps) {
  if (!(eps > 0.0)) throw ValidationError("check_separation: eps must be positive");
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j)
      if ((values[i] - values[j]).lpNorm<Eigen::Infinity>() < eps) return false;
  return true;
}

Target make_symmetric_function(const SymmetricSpec& spec) {
  check_betas(spec.symmetry, spec.betas);
  if (spec.smoothness < 1) throw ValidationError("make_symmetric_function: smoothness must be >= 1");
  if (!check_separation(spec.betas, spec.separation))
    throw ValidationError("make_symmetric_function: class values are not eps-separated");
  const CubeGrid grid = spec.symmetry.grid();
  const int s = spec.smoothness;
  // Each bump is supported within 3/(8q) of its midpoint, so only the cube
  // holding x contributes; on a face every bump vanishes.
  return Target{grid.d(), static_cast<int>(spec.betas.front().size()),
                [symmetry = spec.symmetry, betas = spec.betas, grid, s](const Eigen::VectorXd& x) {
                  const CubeIndex idx = cube_index(x, grid);
                  const Eigen::VectorXd u = 2.0 * grid.q() * (x - midpoint(idx, grid));
                  return Eigen::VectorXd(bump_psi(s, u) * betas[static_cast<std::size_t>(symmetry.class_of(idx) - 1)]);
                }};
}

Target make_cellwise_function(const SymmetryMap& symmetry, const std::vector<Eigen::VectorXd>& betas) {
  check_betas(symmetry, betas);
  const CubeGrid grid = symmetry.grid();
  return Target{grid.d(), static_cast<int>(betas.front().size()),
                [symmetry, betas, grid](const Eigen::VectorXd& x) {
                  return betas[static_cast<std::size_t>(symmetry.class_of(cube_index(x, grid)) - 1)];
                }};
}

// ---------------------------------------------------------------- sampling

NoiseSpec NoiseSpec::gaussian(double sigma) {
  if (!(sigma >= 0.0)) throw ValidationError("gaussian noise: sigma must be >= 0");
  return {NoiseKind::gaussian, sigma};
}

NoiseSpec NoiseSpec::uniform_bounded(double a) {
  if (!(a >= 0.0)) throw ValidationError("uniform noise: half-width must be >= 0");
  return {NoiseKind::uniform_bounded, a};
}

double NoiseSpec::sigma() const noexcept { return kind == NoiseKind::none ? 0.0 : param; }

SamplerSpec SamplerSpec::cubes(int q, std::vector<std::int64_t> linear_indices) {
  if (linear_indices.empty()) throw ValidationError("sampler: support cube list is empty");
  SamplerSpec s;
  s.q = q;
  s.support_cubes = std::move(linear_indices);
  return s;
}

void Dataset::validate() const {
  if (inputs.cols() != labels.cols())
    throw ValidationError("dataset: " + std::to_string(inputs.cols()) + " inputs but " +
                          std::to_string(labels.cols()) + " labels");
  if (inputs.rows() < 1 || labels.rows() < 1) throw ValidationError("dataset: dimensions must be positive");
  if (!inputs.allFinite() || !labels.allFinite()) throw ValidationError("dataset: non-finite values");
  if (inputs.size() > 0 && (inputs.minCoeff() < 0.0 || inputs.maxCoeff() > 1.0))
    throw ValidationError("dataset: inputs must lie in [0,1]^d");
}

Dataset sample_training_set(const TaskSpec& task, std::int64_t n, Rng& rng) {
  if (n < 1) throw ValidationError("sample_training_set: N must be >= 1");
  const int d = task.target.d;
  std::optional<CubeGrid> support_grid;
  if (!task.sampler.support_cubes.empty()) support_grid.emplace(d, task.sampler.q);
  Dataset data;
  data.inputs.resize(d, n);
  data.labels.resize(task.target.D, n);
  Eigen::VectorXd x(d);
  for (std::int64_t i = 0; i < n; ++i) {
    if (support_grid) {
      const auto& cubes = task.sampler.support_cubes;
      const CubeIndex idx = cube_from_linear(cubes[uniform_index(rng, cubes.size())], *support_grid);
      for (int k = 0; k < d; ++k) x(k) = (idx.coords[k] + uniform01(rng)) / support_grid->q();
    } else {
      for (int k = 0; k < d; ++k) x(k) = uniform01(rng);
    }
    Eigen::VectorXd y = task.target(x);
    if (y.size() != task.target.D) throw ValidationError("sample_training_set: target output has wrong dimension");
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      switch (task.noise.kind) {
        case NoiseKind::none:
          break;
        case NoiseKind::gaussian:
          y(k) += task.noise.param * standard_normal(rng);
          break;
        case NoiseKind::uniform_bounded:
          y(k) += task.noise.param * (2.0 * uniform01(rng) - 1.0);
          break;
      }
    }
    data.inputs.col(i) = x;
    data.labels.col(i) = y;
  }
  return data;
}

Dataset sample_training_set(const TaskSpec& task, std::int64_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_training_set(task, n, rng);
}

Dataset midpoint_samples(const Target& f, const CubeGrid& grid) {
  if (f.d != grid.d()) throw ValidationError("midpoint_samples: target and grid dimensions differ");
  Dataset data;
  data.inputs.resize(grid.d(), grid.cube_count());
  data.labels.resize(f.D, grid.cube_count());
  for (std::int64_t lin = 0; lin < grid.cube_count(); ++lin) {
    const Point x = midpoint(cube_from_linear(lin, grid), grid);
    data.inputs.col(lin) = x;
    data.labels.col(lin) = f(x);
  }
  return data;
}

// ---------------------------------------------------------------- benchmarks

BenchFunction parse_bench_function(std::string_view name) {
  if (name == "oscillatory") return BenchFunction::oscillatory;
  if (name == "singular") return BenchFunction::singular;
  throw ValidationError("unknown benchmark function '" + std::string(name) + "'");
}

std::string_view bench_function_name(BenchFunction fn) {
  return fn == BenchFunction::oscillatory ? "oscillatory" : "singular";
}

double bench_function(BenchFunction fn, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("bench_function: x outside [0,1]");
  switch (fn) {
    case BenchFunction::oscillatory:
      return std::sqrt(std::abs(std::sin(6.0 * x))) + std::min(std::max(std::exp(x), 1.0) - 1.0, 3.0);
    case BenchFunction::singular: {
      const double s = std::abs(std::sin(3.0 * x));
      if (s == 0.0) throw DomainError("bench_function: singular benchmark is unbounded where sin(3x) = 0");
      return 1.0 / std::sqrt(s) - std::exp(-x);
    }
  }
  throw ValidationError("bench_function: unknown function");
}

Target bench_target(BenchFunction fn) {
  return Target{1, 1, [fn](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, bench_function(fn, x(0))); }};
}

// ---------------------------------------------------------------- CSV

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  for (int k = 0; k < data.d(); ++k) out += (k ? ",x" : "x") + std::to_string(k + 1);
  for (int k = 0; k < data.D(); ++k) out += ",y" + std::to_string(k + 1);
  out += '\n';
  for (std::int64_t i = 0; i < data.size(); ++i) {
    for (int k = 0; k < data.d(); ++k) {
      if (k) out += ',';
      out += format_double(data.inputs(k, i));
    }
    for (int k = 0; k < data.D(); ++k) {
      out += ',';
      out += format_double(data.labels(k, i));
    }
    out += '\n';
  }
  return out;
}

Dataset dataset_from_csv(std::string_view text, int d) {
  const std::size_t header_end = text.find('\n');
  if (header_end == std::string_view::npos) throw ParseError("dataset CSV: missing header row", 0);
  std::string_view header = text.substr(0, header_end);
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  const auto names = split_fields(header);
  if (d < 0) {
    d = 0;
    while (d < static_cast<int>(names.size()) && !names[static_cast<std::size_t>(d)].empty() &&
           names[static_cast<std::size_t>(d)].front() == 'x')
      ++d;
  }
  const int cols = static_cast<int>(names.size());
  if (d < 1 || d >= cols) throw ParseError("dataset CSV: header must name x1..xd then y1..yD", 0);
  Eigen::MatrixXd body;
  try {
    body = parse_matrix_csv(text.substr(header_end + 1));
  } catch (const ParseError& e) {
    throw ParseError("dataset CSV: " + e.message(), header_end + 1 + e.byte_offset());
  }
  if (body.rows() == 0) throw ParseError("dataset CSV: no samples", header_end + 1);
  if (body.cols() != cols) throw ParseError("dataset CSV: row width differs from header", header_end + 1);
  Dataset data;
  data.inputs = body.leftCols(d).transpose();
  data.labels = body.rightCols(cols - d).transpose();
  data.validate();
  return data;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  write_text_file(path, dataset_to_csv(data));
}

Dataset read_dataset_csv(const std::filesystem::path& path, int d) {
  const std::string text = read_text_file(path);
  try {
    return dataset_from_csv(text, d);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.byte_offset());
  }
}

}  // namespace noisyuat
