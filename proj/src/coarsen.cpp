#include "noisyuat/coarsen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "noisyuat/csv.hpp"
#include "noisyuat/errors.hpp"
#include "noisyuat/log.hpp"

namespace noisyuat {
namespace {

constexpr int kGaussNodes = 20;

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // summing to 1
};

const Rule& gauss_rule() {
  static const Rule rule = [] {
    using G = boost::math::quadrature::gauss<double, kGaussNodes>;
    Rule r;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
      r.nodes.push_back(-a[i]);
      r.weights.push_back(w[i] / 2.0);
      r.nodes.push_back(a[i]);
      r.weights.push_back(w[i] / 2.0);
    }
    return r;
  }();
  return rule;
}

void check_hbar(int hbar) {
  if (hbar < 1) throw ValidationError("hbar must be >= 1");
}

// Integer overlap of [a0, a1) and [b0, b1).
long long overlap(long long a0, long long a1, long long b0, long long b1) {
  return std::max(0LL, std::min(a1, b1) - std::max(a0, b0));
}

class PgmReader {
 public:
  PgmReader(std::string_view bytes, std::size_t start) : s_(bytes), pos_(start) {}

  std::size_t pos() const noexcept { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long long integer(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long long v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = v * 10 + (s_[pos_] - '0');
      if (v > (1LL << 40)) throw ParseError(std::string("PGM: ") + what + " is too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("PGM: expected ") + what, start);
    return v;
  }

  unsigned byte() {
    if (pos_ >= s_.size()) throw ParseError("PGM: truncated pixel data", pos_);
    return static_cast<unsigned char>(s_[pos_++]);
  }

  void advance() { ++pos_; }
  bool at_end() const noexcept { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

void GrayImage::validate() const {
  if (width < 1 || height < 1) throw ValidationError("image: dimensions must be positive");
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw ValidationError("image: pixel count does not match width x height");
  for (double p : pixels)
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("image: pixel value outside [0,1]");
}

double quantize_down(double z, int hbar) {
  check_hbar(hbar);
  if (!std::isfinite(z)) throw ValidationError("quantize_down: non-finite value");
  double k = std::floor(hbar * z);
  while ((k + 1.0) / hbar <= z) k += 1.0;
  while (k / hbar > z) k -= 1.0;
  return k / hbar;
}

Eigen::VectorXd quantize_down(const Eigen::Ref<const Eigen::VectorXd>& z, int hbar) {
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out(i) = quantize_down(z(i), hbar);
  return out;
}

double average_cube(const GrayImage& img, const CubeIndex& cube, const CubeGrid& grid, int hbar) {
  if (grid.d() != 2) throw ValidationError("average_cube: images need a 2-dimensional grid");
  if (!is_valid(cube, grid)) throw ValidationError("average_cube: cube index outside the grid");
  const long long q = grid.q();
  const long long w = img.width;
  const long long h = img.height;
  // Work in units of 1/(q W) horizontally and 1/(q H) vertically.
  const long long c = cube.coords[0];
  const long long r = cube.coords[1];
  double sum = 0.0;
  long long area = 0;
  for (long long i = 0; i < h; ++i) {
    const long long wy = overlap(i * q, (i + 1) * q, r * h, (r + 1) * h);
    if (wy == 0) continue;
    for (long long j = 0; j < w; ++j) {
      const long long wx = overlap(j * q, (j + 1) * q, c * w, (c + 1) * w);
      if (wx == 0) continue;
      sum += static_cast<double>(wx * wy) * img.at(static_cast<int>(i), static_cast<int>(j));
      area += wx * wy;
    }
  }
  return quantize_down(sum / static_cast<double>(area), hbar);
}

Eigen::VectorXd average_cube(const Target& f, const CubeIndex& cube, const CubeGrid& grid, int hbar) {
  if (f.d != grid.d()) throw ValidationError("average_cube: target and grid dimensions differ");
  if (!is_valid(cube, grid)) throw ValidationError("average_cube: cube index outside the grid");
  const Rule& rule = gauss_rule();
  const int d = grid.d();
  const double half = 0.5 / grid.q();
  const Point mid = midpoint(cube, grid);
  const std::size_t n = rule.nodes.size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd x(d);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(f.D);
  for (;;) {
    double weight = 1.0;
    for (int k = 0; k < d; ++k) {
      x(k) = mid(k) + half * rule.nodes[idx[static_cast<std::size_t>(k)]];
      weight *= rule.weights[idx[static_cast<std::size_t>(k)]];
    }
    mean += weight * f(x);
    int k = d - 1;
    while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == n) idx[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
  return quantize_down(mean, hbar);
}

CoarseningReport coarsen_image(const GrayImage& img, int q, int hbar) {
  img.validate();
  check_hbar(hbar);
  if (q < 1 || q > std::min(img.width, img.height))
    throw ValidationError("coarsen_image: q = " + std::to_string(q) + " must lie in [1, min(width, height)]");
  const CubeGrid grid(2, q);
  CoarseningReport rep;
  rep.q = q;
  rep.hbar = hbar;
  rep.superpixels.resize(q, q);
  std::set<double> seen;
  for (int r = 0; r < q; ++r)
    for (int c = 0; c < q; ++c) {
      const double v = average_cube(img, CubeIndex{{c, r}}, grid, hbar);
      rep.superpixels(r, c) = v;
      seen.insert(v);
    }
  rep.distinct = static_cast<int>(seen.size());
  rep.ratio = static_cast<double>(rep.distinct) / (static_cast<double>(q) * q);
  return rep;
}

std::string coarsening_csv(const std::vector<CoarseningReport>& reports) {
  std::string out = "q,hbar,kappa,ratio\n";
  for (const auto& r : reports)
    out += std::to_string(r.q) + ',' + std::to_string(r.hbar) + ',' + std::to_string(r.distinct) + ',' +
           format_double(r.ratio) + '\n';
  return out;
}

CoarsenedFunction::CoarsenedFunction(const Target& f, const CubeGrid& grid, int hbar, HatScale hat)
    : grid_(grid), hbar_(hbar), scale_(hat) {
  check_hbar(hbar);
  averages_.reserve(static_cast<std::size_t>(grid.cube_count()));
  for (std::int64_t lin = 0; lin < grid.cube_count(); ++lin)
    averages_.push_back(average_cube(f, cube_from_linear(lin, grid), grid, hbar));
}

double CoarsenedFunction::hat(const Eigen::Ref<const Eigen::VectorXd>& x, std::int64_t linear) const {
  const double dist = (midpoint(cube_from_linear(linear, grid_), grid_) - x).lpNorm<Eigen::Infinity>();
  const double slope = scale_ == HatScale::grid ? 2.0 * grid_.q() : std::ldexp(1.0, -hbar_);
  return std::max(0.0, 1.0 - slope * dist);
}

Eigen::VectorXd CoarsenedFunction::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != grid_.d()) throw ValidationError("coarsened_eval: point has the wrong dimension");
  if (!(x.array() >= 0.0).all() || !(x.array() <= 1.0).all()) throw DomainError("coarsened_eval: point outside [0,1]^d");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(averages_.front().size());
  if (scale_ == HatScale::printed) {
    for (std::int64_t lin = 0; lin < grid_.cube_count(); ++lin) out += hat(x, lin) * averages_[static_cast<std::size_t>(lin)];
    return out;
  }
  // Grid-scale hats reach at most half a cell, so only x's cube and its
  // face neighbours can be non-zero.
  const CubeIndex home = cube_index(x, grid_);
  const int d = grid_.d();
  std::vector<int> offset(static_cast<std::size_t>(d), -1);
  for (;;) {
    CubeIndex nb = home;
    for (int k = 0; k < d; ++k) nb.coords[static_cast<std::size_t>(k)] += offset[static_cast<std::size_t>(k)];
    if (is_valid(nb, grid_)) {
      const std::int64_t lin = linear_index(nb, grid_);
      const double w = hat(x, lin);
      if (w > 0.0) out += w * averages_[static_cast<std::size_t>(lin)];
    }
    int k = d - 1;
    while (k >= 0 && ++offset[static_cast<std::size_t>(k)] == 2) offset[static_cast<std::size_t>(k--)] = -1;
    if (k < 0) break;
  }
  return out;
}

Eigen::VectorXd coarsened_eval(const Target& f, const CubeGrid& grid, int hbar,
                               const Eigen::Ref<const Eigen::VectorXd>& x, HatScale hat) {
  return CoarsenedFunction(f, grid, hbar, hat)(x);
}

GrayImage parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw ParseError("PGM: expected magic number P2 or P5", 0);
  const bool binary = bytes[1] == '5';
  PgmReader rd(bytes, 2);
  const auto offset = [&] { return rd.pos(); };
  GrayImage img;
  const long long w = rd.integer("width");
  const long long h = rd.integer("height");
  const long long maxval = rd.integer("maxval");
  if (w < 1 || h < 1 || w * h > (1LL << 30)) throw ParseError("PGM: unsupported dimensions", offset());
  if (maxval < 1 || maxval > 65535) throw ParseError("PGM: maxval must lie in [1, 65535]", offset());
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.pixels.reserve(static_cast<std::size_t>(w * h));
  if (binary) {
    if (rd.at_end() || !std::isspace(static_cast<unsigned char>(rd.peek())))
      throw ParseError("PGM: expected whitespace before pixel data", offset());
    rd.advance();
  }
  for (long long i = 0; i < w * h; ++i) {
    long long v;
    if (binary) {
      v = rd.byte();
      if (maxval > 255) v = (v << 8) | rd.byte();
    } else {
      rd.skip_space_and_comments();
      if (rd.at_end()) throw ParseError("PGM: truncated pixel data", offset());
      v = rd.integer("pixel value");
    }
    if (v > maxval) throw ParseError("PGM: pixel value exceeds maxval", offset());
    img.pixels.push_back(static_cast<double>(v) / static_cast<double>(maxval));
  }
  return img;
}

GrayImage load_pgm(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  try {
    return parse_pgm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.byte_offset());
  }
}

std::string to_pgm_p2(const GrayImage& img, int maxval) {
  img.validate();
  std::string out = "P2\n" + std::to_string(img.width) + ' ' + std::to_string(img.height) + '\n' +
                    std::to_string(maxval) + '\n';
  for (int i = 0; i < img.height; ++i) {
    for (int j = 0; j < img.width; ++j) {
      if (j) out += ' ';
      out += std::to_string(static_cast<long>(std::lround(img.at(i, j) * maxval)));
    }
    out += '\n';
  }
  return out;
}

GrayImage load_csv_matrix(const std::filesystem::path& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.size() == 0) throw ParseError(path.string() + ": empty matrix", 0);
  if (!m.allFinite()) throw ParseError(path.string() + ": non-finite pixel value", 0);
  GrayImage img;
  img.width = static_cast<int>(m.cols());
  img.height = static_cast<int>(m.rows());
  bool clipped = false;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = std::clamp(m(i, j), 0.0, 1.0);
      clipped = clipped || v != m(i, j);
      img.pixels.push_back(v);
    }
  if (clipped) warn(path.string() + ": pixel values clipped to [0,1]");
  return img;
}

}  // namespace noisyuat
