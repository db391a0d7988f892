#include "noisyuat/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "noisyuat/csv.hpp"
#include "noisyuat/errors.hpp"

namespace noisyuat {
namespace {

// Neumaier-compensated sum of `v` after sorting.
double stable_sum(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  double comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

void check_profile(const SamplingProfile& p, const CubeGrid& grid) {
  if (!(p.delta > 0.0 && p.delta <= 1.0)) throw ValidationError("min_samples: delta must lie in (0, 1]");
  if (p.Q_star < 1 || p.Q_star > grid.cube_count())
    throw ValidationError("min_samples: Q_star must lie in [1, q^d]");
  if (!(p.p_star > 0.0 && p.p_star <= 1.0)) throw ValidationError("min_samples: p_star must lie in (0, 1]");
  if (!(p.sigma_bar >= 1.0) || !std::isfinite(p.sigma_bar))
    throw ValidationError("min_samples: sigma_bar must be a finite value >= 1");
}

// `inv_eps_sq` is the factor multiplying 8 sigma_bar^2 ln(Q*/(2 delta)).
SampleSize evaluate_bound(const SamplingProfile& p, double inv_eps_sq, SampleBound bound) {
  const double a = std::log(static_cast<double>(p.Q_star) / p.delta);
  const double b = std::log(static_cast<double>(p.Q_star) / (2.0 * p.delta));
  const double noise = p.sigma_bar * p.sigma_bar * inv_eps_sq * b;
  const double raw = std::sqrt(a * (64.0 * noise + a)) / (4.0 * p.p_star) + 8.0 * noise + a / (4.0 * p.p_star);
  if (!std::isfinite(raw) || raw >= 9.0e18) throw NumericError("min_samples: sample size overflows");
  SampleSize out;
  out.raw = raw;
  out.n = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(raw)));
  out.bound = bound;
  return out;
}

}  // namespace

std::int64_t DenoisedDataset::total_count() const {
  std::int64_t n = 0;
  for (const auto& e : entries) n += e.count;
  return n;
}

Dataset DenoisedDataset::to_dataset() const {
  Dataset out;
  out.inputs.resize(grid.d(), static_cast<Eigen::Index>(entries.size()));
  out.labels.resize(D(), static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out.inputs.col(static_cast<Eigen::Index>(i)) = entries[i].x;
    out.labels.col(static_cast<Eigen::Index>(i)) = entries[i].y;
  }
  return out;
}

DenoisedDataset denoise(const Dataset& data, const CubeGrid& grid) {
  if (data.size() == 0) throw ValidationError("denoise: dataset is empty");
  if (data.d() != grid.d())
    throw ValidationError("denoise: dataset has d = " + std::to_string(data.d()) + " but grid has d = " +
                          std::to_string(grid.d()));
  data.validate();

  std::vector<std::pair<std::int64_t, std::int64_t>> keyed(static_cast<std::size_t>(data.size()));
  for (std::int64_t i = 0; i < data.size(); ++i)
    keyed[static_cast<std::size_t>(i)] = {linear_index(cube_index(data.inputs.col(i), grid), grid), i};
  std::sort(keyed.begin(), keyed.end());

  DenoisedDataset out;
  out.grid = grid;
  std::vector<double> buf;
  for (std::size_t lo = 0; lo < keyed.size();) {
    std::size_t hi = lo;
    while (hi < keyed.size() && keyed[hi].first == keyed[lo].first) ++hi;
    DenoisedEntry e;
    e.cube = cube_from_linear(keyed[lo].first, grid);
    e.x = midpoint(e.cube, grid);
    e.count = static_cast<std::int64_t>(hi - lo);
    e.y.resize(data.D());
    for (int k = 0; k < data.D(); ++k) {
      buf.clear();
      for (std::size_t j = lo; j < hi; ++j) buf.push_back(data.labels(k, keyed[j].second));
      e.y(k) = stable_sum(buf) / static_cast<double>(e.count);
    }
    out.entries.push_back(std::move(e));
    lo = hi;
  }
  return out;
}

SamplingProfile SamplingProfile::uniform(const CubeGrid& grid, double sigma, double L, double delta) {
  SamplingProfile p;
  p.Q_star = grid.cube_count();
  p.p_star = 1.0 / static_cast<double>(grid.cube_count());
  p.sigma_bar = std::max(1.0, sigma);
  p.L = L;
  p.delta = delta;
  return p;
}

SampleSize min_samples(const SamplingProfile& profile, const CubeGrid& grid, double eps) {
  check_profile(profile, grid);
  if (!(eps > 0.0)) throw ValidationError("min_samples: eps must be positive");
  if (!(profile.L > 0.0) || !std::isfinite(profile.L))
    throw ValidationError("min_samples: the Lipschitz bound needs a finite L > 0");
  // Relative slack absorbs rounding in L / eps when q = L / eps exactly.
  if (static_cast<double>(grid.q()) < (profile.L / eps) * (1.0 - 1e-12))
    throw ValidationError("min_samples: scale q = " + std::to_string(grid.q()) + " is below L / eps = " +
                          format_double(profile.L / eps));
  const double q = grid.q();
  const double inv = q * q / (profile.L * profile.L * grid.d());
  return evaluate_bound(profile, inv, SampleBound::lipschitz);
}

SampleSize min_samples(const SamplingProfile& profile, const CubeGrid& grid, double eps,
                       const std::function<double(double)>& modulus_inverse) {
  check_profile(profile, grid);
  if (!(eps > 0.0)) throw ValidationError("min_samples: eps must be positive");
  if (!modulus_inverse) throw ValidationError("min_samples: modulus inverse is empty");
  const double root_d = std::sqrt(static_cast<double>(grid.d()));
  const double w = modulus_inverse(root_d / eps);
  if (!(w > 0.0)) throw ValidationError("min_samples: modulus inverse must be positive at sqrt(d)/eps");
  if (static_cast<double>(grid.q()) < (root_d / w) * (1.0 - 1e-12))
    throw ValidationError("min_samples: scale q = " + std::to_string(grid.q()) + " is below sqrt(d)/w^-1(sqrt(d)/eps) = " +
                          format_double(root_d / w));
  return evaluate_bound(profile, 1.0 / (eps * eps), SampleBound::modulus);
}

double recovery_error(const DenoisedDataset& den, const Target& f) {
  double worst = 0.0;
  for (const auto& e : den.entries) worst = std::max(worst, (f(e.x) - e.y).norm());
  return worst;
}

std::string denoised_to_csv(const DenoisedDataset& den) {
  const int d = den.grid.d();
  const int D = den.D();
  std::string out;
  for (int k = 0; k < d; ++k) out += (k ? ",cube_i" : "cube_i") + std::to_string(k + 1);
  for (int k = 0; k < d; ++k) out += ",x" + std::to_string(k + 1);
  for (int k = 0; k < D; ++k) out += ",y" + std::to_string(k + 1);
  out += ",count\n";
  for (const auto& e : den.entries) {
    for (int k = 0; k < d; ++k) {
      if (k) out += ',';
      out += std::to_string(e.cube.coords[static_cast<std::size_t>(k)]);
    }
    for (int k = 0; k < d; ++k) out += ',' + format_double(e.x(k));
    for (int k = 0; k < D; ++k) out += ',' + format_double(e.y(k));
    out += ',' + std::to_string(e.count) + '\n';
  }
  return out;
}

DenoisedDataset denoised_from_csv(std::string_view text, const CubeGrid& grid) {
  const std::size_t header_end = text.find('\n');
  if (header_end == std::string_view::npos) throw ParseError("denoised CSV: missing header row", 0);
  std::string_view header = text.substr(0, header_end);
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  const int cols = static_cast<int>(split_fields(header).size());
  const int d = grid.d();
  const int D = cols - 2 * d - 1;
  if (D < 1) throw ParseError("denoised CSV: header is too short for d = " + std::to_string(d), 0);
  Eigen::MatrixXd body;
  try {
    body = parse_matrix_csv(text.substr(header_end + 1));
  } catch (const ParseError& e) {
    throw ParseError("denoised CSV: " + e.message(), header_end + 1 + e.byte_offset());
  }
  if (body.rows() > 0 && body.cols() != cols) throw ParseError("denoised CSV: row width differs from header", header_end + 1);
  DenoisedDataset den;
  den.grid = grid;
  std::int64_t prev = -1;
  for (Eigen::Index r = 0; r < body.rows(); ++r) {
    DenoisedEntry e;
    e.cube.coords.resize(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      const double c = body(r, k);
      if (c != std::floor(c) || c < 0 || c >= grid.q()) throw ValidationError("denoised CSV: invalid cube index");
      e.cube.coords[static_cast<std::size_t>(k)] = static_cast<int>(c);
    }
    e.x = body.row(r).segment(d, d).transpose();
    e.y = body.row(r).segment(2 * d, D).transpose();
    const double count = body(r, cols - 1);
    if (count != std::floor(count) || count < 1) throw ValidationError("denoised CSV: count must be a positive integer");
    e.count = static_cast<std::int64_t>(count);
    if ((e.x - midpoint(e.cube, grid)).lpNorm<Eigen::Infinity>() > 1e-12)
      throw ValidationError("denoised CSV: x is not the midpoint of its cube");
    const std::int64_t lin = linear_index(e.cube, grid);
    if (lin <= prev) throw ValidationError("denoised CSV: cubes must be unique and in increasing order");
    prev = lin;
    den.entries.push_back(std::move(e));
  }
  return den;
}

void write_denoised_csv(const std::filesystem::path& path, const DenoisedDataset& den) {
  write_text_file(path, denoised_to_csv(den));
}

DenoisedDataset read_denoised_csv(const std::filesystem::path& path, const CubeGrid& grid) {
  return denoised_from_csv(read_text_file(path), grid);
}

}  // namespace noisyuat
