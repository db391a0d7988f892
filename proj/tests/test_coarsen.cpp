#include <cmath>
#include <set>
#include <unordered_set>

#include "doctest.h"
#include "noisyuat/coarsen.hpp"
#include "noisyuat/csv.hpp"
#include "noisyuat/errors.hpp"
#include "support.hpp"

using namespace noisyuat;
using testing::vec;

namespace {

GrayImage image(int w, int h, std::vector<double> px) { return {w, h, std::move(px)}; }

GrayImage constant_image(int w, int h, double c) {
  return image(w, h, std::vector<double>(static_cast<std::size_t>(w * h), c));
}

GrayImage smooth_image(int w, int h) {
  GrayImage img{w, h, {}};
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      img.pixels.push_back(0.5 + 0.25 * std::sin(6.0 * j / w) * std::cos(4.0 * i / h) + 0.2 * double(j) / w);
  return img;
}

}  // namespace

TEST_CASE("quantize_down") {
  CHECK(quantize_down(0.37, 10) == 0.3);
  CHECK(quantize_down(1.0, 10) == 1.0);
  CHECK(quantize_down(0.3, 10) == 0.3);
  CHECK(quantize_down(0.7, 10) == 0.7);
  CHECK(quantize_down(0.5, 3) == 1.0 / 3.0);
  Eigen::VectorXd both = quantize_down(vec({0.37, 0.99}), 10);
  CHECK(both == vec({0.3, 0.9}));
  CHECK_THROWS_AS(quantize_down(0.5, 0), ValidationError);
}

TEST_CASE("property: quantize_down is idempotent and monotone") {
  Rng rng(4);
  for (int hbar : {1, 3, 7, 10, 255}) {
    double previous_z = -1.0;
    double previous_q = -INFINITY;
    std::vector<double> zs;
    for (int t = 0; t < 300; ++t) zs.push_back(uniform01(rng));
    for (int k = 0; k <= hbar; ++k) zs.push_back(double(k) / hbar);
    std::sort(zs.begin(), zs.end());
    for (double z : zs) {
      double qz = quantize_down(z, hbar);
      CHECK(quantize_down(qz, hbar) == qz);
      CHECK(qz <= z);
      CHECK(z - qz < 1.0 / hbar);
      if (z >= previous_z) CHECK(qz >= previous_q);
      previous_z = z;
      previous_q = qz;
    }
  }
}

TEST_CASE("average_cube over images") {
  CubeGrid one(2, 1);
  CHECK(average_cube(constant_image(4, 4, 0.46), {{0, 0}}, one, 10) == 0.4);
  GrayImage checker = image(2, 2, {0, 1, 1, 0});
  CHECK(average_cube(checker, {{0, 0}}, one, 10) == 0.5);
  CHECK(average_cube(checker, {{0, 0}}, one, 3) == 1.0 / 3.0);

  GrayImage ramp = image(3, 1, {0.0, 0.25, 0.5});
  CHECK(average_cube(ramp, {{0, 0}}, one, 1000) == 0.25);
  // 3x3 image on a 2x2 grid: pixel-area weights.
  GrayImage cols = image(3, 3, {0, 0, 1, 0, 0, 1, 0, 0, 1});
  CubeGrid g(2, 2);
  CHECK(average_cube(cols, {{0, 0}}, g, 1000) == 0.0);
  CHECK(average_cube(cols, {{1, 0}}, g, 3) == 2.0 / 3.0);
}

TEST_CASE("average_cube over functions") {
  CubeGrid g(1, 2);
  Target line{1, 1, [](const Eigen::VectorXd& x) { return x; }};
  CHECK(average_cube(line, {{0}}, g, 1000)(0) == doctest::Approx(0.25));
  Target square{1, 1, [](const Eigen::VectorXd& x) { return (x.array() * x.array()).matrix().eval(); }};
  CHECK(average_cube(square, {{1}}, g, 1 << 20)(0) == doctest::Approx(7.0 / 12.0).epsilon(1e-5));
}

TEST_CASE("coarsen_image") {
  for (int q : {1, 2, 4}) {
    CoarseningReport r = coarsen_image(constant_image(8, 8, 0.3), q, 10);
    CHECK(r.distinct == 1);
    CHECK(r.ratio == 1.0 / (q * q));
  }
  GrayImage four = image(2, 2, {0.05, 0.25, 0.55, 0.95});
  CoarseningReport all = coarsen_image(four, 2, 10);
  CHECK(all.distinct == 4);
  CHECK(all.ratio == 1.0);
  CHECK(all.superpixels(0, 1) == 0.2);
  CHECK(all.superpixels(1, 0) == 0.5);
  CHECK_THROWS_AS(coarsen_image(four, 3, 10), ValidationError);

  std::string csv = coarsening_csv({all});
  CHECK(csv == "q,hbar,kappa,ratio\n2,10,4,1\n");
}

TEST_CASE("property: distinct count matches a hash-set oracle and the pigeonhole ceiling") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    int w = 8 + trial;
    int h = 10 + 2 * trial;
    GrayImage img{w, h, {}};
    for (int i = 0; i < w * h; ++i) img.pixels.push_back(uniform01(rng));
    for (int q : {2, 4, 8}) {
      for (int hbar : {2, 5, 10}) {
        CoarseningReport r = coarsen_image(img, q, hbar);
        std::unordered_set<long long> cells;
        for (int a = 0; a < q; ++a)
          for (int b = 0; b < q; ++b) cells.insert(std::llround(r.superpixels(a, b) * hbar));
        CHECK(r.distinct == static_cast<int>(cells.size()));
        CHECK(r.ratio == doctest::Approx(double(cells.size()) / (q * q)));
        CHECK(r.distinct <= hbar + 1);
        CHECK(r.ratio > 0.0);
        CHECK(r.ratio <= 1.0);
        if (q * q > hbar + 1) CHECK(r.distinct < q * q);
      }
    }
  }
}

TEST_CASE("coarsened_eval midpoint identity") {
  CubeGrid g(1, 2);
  Target f{1, 1, [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, std::exp(x(0)) / 3.0).eval(); }};
  CoarsenedFunction coarse(f, g, 10);
  for (int i = 0; i < 2; ++i) {
    Point m = midpoint({{i}}, g);
    Eigen::VectorXd direct = average_cube(f, {{i}}, g, 10);
    CHECK(coarse(m) == direct);
    CHECK(coarsened_eval(f, g, 10, m) == direct);
  }
  Target constant{2, 1, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, 0.46).eval(); }};
  CubeGrid g2(2, 3);
  for (std::int64_t l = 0; l < g2.cube_count(); ++l)
    CHECK(coarsened_eval(constant, g2, 10, midpoint(cube_from_linear(l, g2), g2))(0) == 0.4);

  CoarsenedFunction printed(f, g, 10, HatScale::printed);
  CHECK(printed(midpoint({{0}}, g)) != coarse(midpoint({{0}}, g)));
}

TEST_CASE("property: coarsened midpoint error within modulus plus lattice step") {
  Target f{2, 1, [](const Eigen::VectorXd& x) {
             return Eigen::VectorXd::Constant(1, 0.5 + 0.3 * std::sin(3 * x(0)) * std::cos(2 * x(1))).eval();
           }};
  const double lipschitz = 0.3 * std::sqrt(9.0 + 4.0);
  for (int q : {2, 4, 8}) {
    for (int hbar : {5, 10, 50}) {
      CubeGrid g(2, q);
      CoarsenedFunction coarse(f, g, hbar);
      for (std::int64_t l = 0; l < g.cube_count(); ++l) {
        Point m = midpoint(cube_from_linear(l, g), g);
        CHECK(std::abs(coarse(m)(0) - f(m)(0)) <= lipschitz * std::sqrt(2.0) / q + 1.0 / hbar);
      }
    }
  }
}

TEST_CASE("PGM parsing") {
  GrayImage ascii = parse_pgm("P2\n# comment\n2 2\n255\n0 255\n255 0\n");
  CHECK(ascii.width == 2);
  CHECK(ascii.pixels == std::vector<double>{0, 1, 1, 0});

  std::string binary = "P5\n2 2\n255\n";
  binary += std::string{'\0', '\xff', '\xff', '\0'};
  CHECK(parse_pgm(binary).pixels == ascii.pixels);

  std::string wide = "P5 1 1 65535\n";
  wide += std::string{'\x80', '\x00'};
  CHECK(parse_pgm(wide).pixels[0] == doctest::Approx(32768.0 / 65535.0));

  CHECK_THROWS_AS(parse_pgm("P5\n2 2\n255\n\x01\x02"), ParseError);
  CHECK_THROWS_AS(parse_pgm("P2\n2 2\n255\n0 255 255\n"), ParseError);
  CHECK_THROWS_AS(parse_pgm("P3\n1 1\n255\n0\n"), ParseError);
  CHECK_THROWS_AS(parse_pgm("P2\n1 1\n255\n300\n"), ParseError);
  try {
    parse_pgm("P2\n2 2\n255\n0 x 0 0\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() == 13);
  }

  CHECK(parse_pgm(to_pgm_p2(ascii)).pixels == ascii.pixels);
}

TEST_CASE("image files") {
  testing::TempDir dir("coarsen");
  write_text_file(dir / "img.pgm", to_pgm_p2(constant_image(4, 3, 1.0)));
  GrayImage loaded = load_pgm(dir / "img.pgm");
  CHECK(loaded.width == 4);
  CHECK(loaded.height == 3);
  CHECK_THROWS_AS(load_pgm(dir / "missing.pgm"), IoError);

  write_text_file(dir / "m.csv", "0.5,1.5\n-0.2,0.25\n");
  testing::WarningCapture warnings;
  GrayImage m = load_csv_matrix(dir / "m.csv");
  CHECK(m.pixels == std::vector<double>{0.5, 1.0, 0.0, 0.25});
  CHECK(warnings.contains("clipped"));
}

TEST_CASE("coarsening ratio falls with scale on smooth images") {
  GrayImage img = smooth_image(128, 128);
  double previous = 2.0;
  for (int q : {2, 4, 16, 64}) {
    CoarseningReport r = coarsen_image(img, q, 10);
    CHECK(r.ratio <= previous);
    previous = r.ratio;
  }
}
