#include <cmath>
#include <set>

#include "doctest.h"
#include "noisyuat/errors.hpp"
#include "noisyuat/tasks.hpp"
#include "support.hpp"

using namespace noisyuat;
using testing::vec;

namespace {

SymmetricSpec two_class_spec(int smoothness = 1) {
  CubeGrid g(1, 2);
  return {SymmetryMap(g, {1, 2}), {vec({0.0}), vec({1.0})}, 0.5, smoothness};
}

double scalar(const Target& f, double x) { return f(vec({x}))(0); }

}  // namespace

TEST_CASE("bump profile values") {
  CHECK(bump_psi(1, vec({0.0})) == 1.0);
  CHECK(bump_psi(1, vec({1.0})) == 0.0);
  CHECK(bump_psi(1, vec({-1.0})) == 0.0);
  CHECK(bump_profile(2, 0.0) == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(bump_profile(1, 0.0) == 1.0);
  CHECK(bump_psi(3, vec({0.0, 0.0, 0.0})) == 1.0);
  CHECK_THROWS_AS(bump_profile(0, 0.0), ValidationError);
}

TEST_CASE("bump support lies inside [-1,1]^d") {
  for (int s = 1; s <= 3; ++s) {
    for (double t = -3.0; t <= 3.0; t += 0.01) {
      double v = bump_psi(s, vec({t}));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-15);
      if (std::abs(t) >= 1.0) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("symmetric function prescribed values") {
  Target f = make_symmetric_function(two_class_spec());
  CHECK(scalar(f, 0.25) == 0.0);
  CHECK(scalar(f, 0.75) == 1.0);
  CHECK(scalar(f, 0.5) == 0.0);
  CHECK(scalar(f, 1.0) == 0.0);
}

TEST_CASE("single class gives its value at every midpoint") {
  CubeGrid g(2, 3);
  SymmetricSpec spec{SymmetryMap(g, std::vector<int>(9, 1)), {vec({0.7})}, 1.0, 1};
  Target f = make_symmetric_function(spec);
  for (std::int64_t l = 0; l < g.cube_count(); ++l) CHECK(f(midpoint(cube_from_linear(l, g), g))(0) == 0.7);
}

TEST_CASE("separation violation is rejected") {
  CubeGrid g(1, 2);
  SymmetricSpec spec{SymmetryMap(g, {1, 2}), {vec({0.0}), vec({0.1})}, 0.5, 1};
  CHECK_THROWS_AS(make_symmetric_function(spec), ValidationError);
}

TEST_CASE("check_separation") {
  CHECK(check_separation({vec({0.0}), vec({1.0})}, 0.5));
  CHECK_FALSE(check_separation({vec({0.0}), vec({0.1})}, 0.5));
  CHECK(check_separation({vec({3.0})}, 100.0));
  CHECK(check_separation({vec({0.0, 0.0}), vec({0.0, 0.5})}, 0.5));
  CHECK_THROWS_AS(check_separation({vec({0.0})}, 0.0), ValidationError);
}

TEST_CASE("symmetry maps must be surjective") {
  CubeGrid g(1, 3);
  CHECK_THROWS_AS(SymmetryMap(g, {1, 1, 3}), ValidationError);
  CHECK_THROWS_AS(SymmetryMap(g, {0, 1, 2}), ValidationError);
  CHECK_THROWS_AS(SymmetryMap(g, {1, 2}), ValidationError);
  SymmetryMap h = SymmetryMap::hashed(CubeGrid(2, 16), 5, 3);
  CHECK_FALSE(h.is_dense());
  std::set<int> seen;
  for (std::int64_t l = 0; l < 256; ++l) seen.insert(h.class_of_linear(l));
  CHECK(seen.size() == 5);
  CHECK_THROWS_AS(SymmetryMap::hashed(CubeGrid(1, 2), 3), ValidationError);
}

TEST_CASE("property: random symmetric functions take exactly kappa midpoint values") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    int d = 1 + trial % 2;
    int q = 3 + trial % 3;
    CubeGrid g(d, q);
    int kappa = 1 + trial % static_cast<int>(std::min<std::int64_t>(g.cube_count(), 6));
    SymmetryMap sym = random_symmetry(g, kappa, rng);
    std::vector<Eigen::VectorXd> betas;
    for (int k = 0; k < kappa; ++k) betas.push_back(vec({k * 0.25, -k * 0.5}));
    Target f = make_symmetric_function({sym, betas, 0.25, 1 + trial % 3});
    std::set<std::pair<double, double>> values;
    for (std::int64_t l = 0; l < g.cube_count(); ++l) {
      Eigen::VectorXd y = f(midpoint(cube_from_linear(l, g), g));
      CHECK(y.isApprox(betas[static_cast<std::size_t>(sym.class_of_linear(l) - 1)]));
      values.insert({y(0), y(1)});
    }
    CHECK(static_cast<int>(values.size()) == kappa);
  }
}

TEST_CASE("property: smoothness order of the bump construction") {
  const double h = 1e-5;
  auto derivative = [](const Target& f, double x, double step) {
    return (scalar(f, x + step) - scalar(f, x - step)) / (2.0 * step);
  };
  Target f1 = make_symmetric_function(two_class_spec(1));
  Target f2 = make_symmetric_function(two_class_spec(2));

  Rng rng(3);
  for (int i = 0; i < 5; ++i) {
    double x = 0.55 + 0.4 * uniform01(rng);
    double d1 = derivative(f1, x, h);
    double d1_fine = derivative(f1, x, h / 10);
    CHECK(std::abs(d1 - d1_fine) <= 1e-4 * (1.0 + std::abs(d1)));
    double d2 = derivative(f2, x, h);
    double d2_fine = derivative(f2, x, h / 10);
    CHECK(std::abs(d2 - d2_fine) <= 1e-3 * (1.0 + std::abs(d2)));
  }

  // Inner kink at u = 1/4, i.e. x = 0.75 + 1/16 for q = 2.
  const double kink = 0.75 + 1.0 / 16.0;
  auto left = [&](const Target& f) { return (scalar(f, kink) - scalar(f, kink - h)) / h; };
  auto right = [&](const Target& f) { return (scalar(f, kink + h) - scalar(f, kink)) / h; };
  CHECK(std::abs(left(f1) - right(f1)) > 1.0);
  CHECK(std::abs(left(f2) - right(f2)) < 1e-2);
}

TEST_CASE("cellwise function is constant on cells") {
  CubeGrid g(1, 4);
  Target f = make_cellwise_function(SymmetryMap(g, {1, 2, 2, 1}), {vec({0.0}), vec({1.0})});
  CHECK(scalar(f, 0.0) == 0.0);
  CHECK(scalar(f, 0.2) == 0.0);
  CHECK(scalar(f, 0.25) == 1.0);
  CHECK(scalar(f, 0.74) == 1.0);
  CHECK(scalar(f, 1.0) == 0.0);
}

TEST_CASE("noiseless sampling and determinism") {
  TaskSpec task{make_symmetric_function(two_class_spec()), SamplerSpec::unit_cube(), NoiseSpec::none()};
  Dataset a = sample_training_set(task, 200, 5);
  Dataset b = sample_training_set(task, 200, 5);
  Dataset c = sample_training_set(task, 200, 6);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);
  CHECK(a.inputs != c.inputs);
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a.labels(0, i) == scalar(task.target, a.inputs(0, i)));
  a.validate();
  CHECK_THROWS_AS(sample_training_set(task, 0, 1), ValidationError);
}

TEST_CASE("gaussian noise is centred") {
  Target zero{2, 2, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(2).eval(); }};
  const std::int64_t n = 100000;
  Dataset data = sample_training_set({zero, SamplerSpec::unit_cube(), NoiseSpec::gaussian(1.0)}, n, 42);
  for (int k = 0; k < 2; ++k) CHECK(std::abs(data.labels.row(k).mean()) <= 3.0 / std::sqrt(double(n)));
}

TEST_CASE("bounded uniform noise stays in range") {
  Target zero{1, 1, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1).eval(); }};
  Dataset data = sample_training_set({zero, SamplerSpec::unit_cube(), NoiseSpec::uniform_bounded(0.3)}, 5000, 1);
  CHECK(data.labels.cwiseAbs().maxCoeff() <= 0.3);
  CHECK(data.labels.cwiseAbs().maxCoeff() > 0.29);
}

TEST_CASE("sub-support sampler only hits the listed cubes") {
  CubeGrid g(2, 4);
  Target zero{2, 1, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1).eval(); }};
  Dataset data = sample_training_set({zero, SamplerSpec::cubes(4, {3, 9}), NoiseSpec::none()}, 1000, 2);
  std::set<std::int64_t> hit;
  for (Eigen::Index i = 0; i < data.size(); ++i) hit.insert(linear_index(cube_index(data.inputs.col(i), g), g));
  CHECK(hit == std::set<std::int64_t>{3, 9});
}

TEST_CASE("midpoint samples in linear order") {
  CubeGrid g(2, 2);
  Target sum{2, 1, [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, x.sum()).eval(); }};
  Dataset data = midpoint_samples(sum, g);
  REQUIRE(data.size() == 4);
  CHECK(data.inputs.col(1) == vec({0.25, 0.75}));
  CHECK(data.labels(0, 3) == 1.5);
}

TEST_CASE("benchmark functions") {
  CHECK(bench_function(BenchFunction::oscillatory, 0.0) == 0.0);
  CHECK_THROWS_AS(bench_function(BenchFunction::singular, 0.0), DomainError);
  CHECK(bench_function(BenchFunction::oscillatory, 0.5) == doctest::Approx(1.024380701647718256862).epsilon(1e-14));
  CHECK(bench_function(BenchFunction::singular, 0.5) == doctest::Approx(0.394724205067920294308).epsilon(1e-14));
  CHECK(bench_function(BenchFunction::oscillatory, 1.0) ==
        doctest::Approx(std::sqrt(std::abs(std::sin(6.0))) + std::exp(1.0) - 1.0));
  CHECK_THROWS_AS(bench_function(BenchFunction::oscillatory, 1.5), DomainError);
  CHECK(parse_bench_function("singular") == BenchFunction::singular);
  CHECK_THROWS_AS(parse_bench_function("nope"), ValidationError);
}

TEST_CASE("dataset CSV round trip") {
  Dataset data;
  data.inputs = Eigen::MatrixXd::Random(2, 5).cwiseAbs();
  data.labels = Eigen::MatrixXd::Random(3, 5);
  data.labels(1, 2) = 1.0 / 3.0;
  std::string text = dataset_to_csv(data);
  CHECK(text.rfind("x1,x2,y1,y2,y3\n", 0) == 0);
  Dataset back = dataset_from_csv(text, 2);
  CHECK(back.inputs == data.inputs);
  CHECK(back.labels == data.labels);

  testing::TempDir dir("tasks");
  write_dataset_csv(dir / "d.csv", data);
  Dataset inferred = read_dataset_csv(dir / "d.csv");
  CHECK(inferred.d() == 2);
  CHECK(inferred.labels == data.labels);
  CHECK_THROWS_AS(dataset_from_csv("x1,y1\n0.1,abc\n", 1), ParseError);
  CHECK_THROWS_AS(read_dataset_csv(dir / "missing.csv"), IoError);
}
