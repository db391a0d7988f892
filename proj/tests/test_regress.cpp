#include <cmath>

#include "doctest.h"
#include "noisyuat/errors.hpp"
#include "noisyuat/regress.hpp"
#include "support.hpp"

using namespace noisyuat;
using testing::vec;

namespace {

Target abs_centre() {
  return {1, 1, [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, std::abs(x(0) - 0.5)).eval(); }};
}

// Cellwise task on a 1-D grid whose classes are the distinct midpoint values of |x - 1/2|.
Target mirrored_cellwise(int q, double scale) {
  return {1, 1, [q, scale](const Eigen::VectorXd& x) {
            CubeGrid g(1, q);
            double m = midpoint(cube_index(x, g), g)(0);
            return Eigen::VectorXd::Constant(1, scale * std::abs(m - 0.5)).eval();
          }};
}

}  // namespace

TEST_CASE("ols_fit") {
  Eigen::MatrixXd y(2, 3);
  y << 1, 2, 3, 4, 5, 6;
  CHECK(ols_fit(Eigen::MatrixXd::Identity(3, 3), y) == y);

  Eigen::Matrix3d x;
  x << 2, 1, 0, -1, 3, 1, 0.5, 0, 4;
  Eigen::MatrixXd beta = ols_fit(x, y);
  Eigen::MatrixXd direct = x.transpose().partialPivLu().solve(y.transpose()).transpose();
  CHECK((beta * x - y).cwiseAbs().maxCoeff() <= 1e-8 * y.norm());
  CHECK((beta - direct).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK(ols_fit(Eigen::MatrixXd::Zero(3, 3), y) == Eigen::MatrixXd::Zero(2, 3));
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
  bad(1, 1) = INFINITY;
  CHECK_THROWS_AS(ols_fit(bad, y), ValidationError);
  CHECK_THROWS_AS(ols_fit(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(2, 2)), ValidationError);

  OlsSolution sol = ols_solve(x, y);
  CHECK(sol.singular_values.size() == 3);
  CHECK(sol.singular_values(0) >= sol.singular_values(2));
}

TEST_CASE("noiseless symmetric task interpolates at every midpoint") {
  testing::WarningCapture warnings;
  CubeGrid g(2, 4);
  Rng sym_rng(2);
  SymmetryMap sym = random_symmetry(g, 3, sym_rng);
  std::vector<Eigen::VectorXd> betas{vec({0.0, 1.0}), vec({0.5, -1.0}), vec({1.0, 0.0})};
  Target f = make_symmetric_function({sym, betas, 0.5, 1});
  PipelineConfig cfg{.q = 4, .eps = 0.5, .F = 4096, .encoder = {}, .seed = 17};
  auto [model, report] = train_pipeline(midpoint_samples(f, g), cfg);
  CHECK(report.kappa == 3);
  CHECK(report.interpolates);
  CHECK(std::isfinite(report.beta_op_norm));
  for (std::int64_t l = 0; l < g.cube_count(); ++l) {
    Point m = midpoint(cube_from_linear(l, g), g);
    CHECK((predict(model, m) - f(m)).norm() <= 1e-8);
  }

  auto [again, report_again] = train_pipeline(midpoint_samples(f, g), cfg);
  CHECK(report_again == report);
  CHECK(again.beta == model.beta);
  CHECK(again.train_digest == model.train_digest);
}

TEST_CASE("cellwise task: representatives, regions and exact uniform error") {
  testing::WarningCapture warnings;
  CubeGrid g(1, 8);
  Target f = mirrored_cellwise(8, 1.0);
  Dataset data = sample_training_set({f, SamplerSpec::unit_cube(), NoiseSpec::none()}, 400, 3);
  PipelineConfig cfg{.q = 8, .eps = 0.5, .F = 2048, .encoder = {}, .seed = 1};
  auto [model, report] = train_pipeline(data, cfg);
  CHECK(report.kappa == 4);
  for (int c = 0; c < model.kappa(); ++c) {
    Eigen::VectorXd rep = model.clusters.keys.col(model.clusters.representatives[static_cast<std::size_t>(c)]);
    CHECK((predict(model, rep) - model.clusters.labels[static_cast<std::size_t>(c)]).norm() <= 1e-8);
  }
  CHECK(predict(model, vec({0.3})) == predict(model, vec({0.33})));
  CHECK(uniform_error(model, f, {1000, 0.0}) <= 1e-8);

  Target shifted{1, 1, [f](const Eigen::VectorXd& x) { return (f(x).array() + 0.25).matrix().eval(); }};
  CHECK(uniform_error(model, shifted, {1000, 0.0}) == doctest::Approx(0.25).epsilon(1e-8));

  Eigen::VectorXd boundary = predict(model, vec({0.25}));
  CHECK(boundary.allFinite());
  CHECK_THROWS_AS(predict(model, vec({1.5})), DomainError);
}

TEST_CASE("constant target uses the constant readout") {
  Target constant{2, 1, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, 0.7).eval(); }};
  Dataset data = sample_training_set({constant, SamplerSpec::unit_cube(), NoiseSpec::none()}, 200, 4);
  auto [model, report] = train_pipeline(data, {.q = 3, .eps = 0.1, .F = 64, .encoder = {}, .seed = 0});
  CHECK(report.constant_readout);
  CHECK(model.constant_readout());
  CHECK(report.kappa == 1);
  Eigen::MatrixXd pts = eval_points(CubeGrid(2, 3), {20, 0.0});
  for (Eigen::Index i = 0; i < pts.cols(); ++i) CHECK(predict(model, pts.col(i))(0) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("empirical risk") {
  Target zero{1, 1, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1).eval(); }};
  Dataset train = sample_training_set({zero, SamplerSpec::unit_cube(), NoiseSpec::none()}, 50, 1);
  auto [model, report] = train_pipeline(train, {.q = 2, .eps = 0.1, .F = 64, .encoder = {}, .seed = 0});
  CHECK(empirical_risk(model, train) == 0.0);

  Dataset balanced = train;
  for (Eigen::Index i = 0; i < balanced.size(); ++i) balanced.labels(0, i) = (i % 2 == 0) ? 1.0 : -1.0;
  CHECK(empirical_risk(model, balanced) == 1.0);

  testing::WarningCapture warnings;
  Target f = mirrored_cellwise(8, 1.0);
  Dataset data = sample_training_set({f, SamplerSpec::unit_cube(), NoiseSpec::gaussian(0.2)}, 300, 5);
  auto [noisy, noisy_report] = train_pipeline(data, {.q = 8, .eps = 0.5, .F = 1024, .encoder = {}, .seed = 2});
  double naive = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) naive += (predict(noisy, data.inputs.col(i)) - data.labels.col(i)).norm();
  naive /= static_cast<double>(data.size());
  CHECK(std::abs(empirical_risk(noisy, data) - naive) <= 1e-12);
}

TEST_CASE("oracle midpoint samples of a Lipschitz target") {
  testing::WarningCapture warnings;
  const int q = 8;
  CubeGrid g(1, q);
  Target f{1, 1, [](const Eigen::VectorXd& x) { return x; }};
  auto [model, report] = train_pipeline(midpoint_samples(f, g), {.q = q, .eps = 0.5, .F = 4096, .encoder = {}, .seed = 3});
  CHECK(report.kappa == q);
  CHECK(report.interpolates);
  CHECK(uniform_error(model, f, {10000, 0.0}) <= 1.0 / q + 1e-8);
}

TEST_CASE("fine-tuning keeps the encoder and attention frozen") {
  testing::WarningCapture warnings;
  const int q = 16;
  CubeGrid g(1, q);
  Target pre = mirrored_cellwise(q, 2.0);
  Dataset pre_data = sample_training_set({pre, SamplerSpec::unit_cube(), NoiseSpec::none()}, 2000, 6);
  PipelineConfig cfg{.q = q, .eps = 0.5, .F = 4096, .encoder = {}, .seed = 4};
  auto [model, report] = train_pipeline(pre_data, cfg);
  REQUIRE(report.kappa == 8);

  auto [tuned, tuned_report] = fine_tune(model, midpoint_samples(abs_centre(), g));
  CHECK(tuned.beta.size() == tuned.D() * tuned.kappa());
  CHECK(tuned.encoder->B1 == model.encoder->B1);
  CHECK(tuned.encoder->B2 == model.encoder->B2);
  CHECK(tuned.encoder->P == model.encoder->P);
  CHECK(tuned.X == model.X);
  CHECK(tuned.clusters.keys == model.clusters.keys);
  CHECK(tuned.clusters.values == model.clusters.values);
  CHECK(tuned.finetune_digests.size() == 1);
  CHECK(tuned_report.interpolates);
  CHECK(uniform_error(tuned, abs_centre(), {10000, 0.0}) <= 1.0 / q + 1.0 / q + 1e-6);

  auto [same, same_report] = fine_tune(model, pre_data);
  CHECK((same.beta - model.beta).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fine-tuning rejects dissimilar tasks") {
  testing::WarningCapture warnings;
  CubeGrid g(1, 8);
  Target pre = mirrored_cellwise(8, 1.0);
  auto [model, report] = train_pipeline(midpoint_samples(pre, g), {.q = 8, .eps = 0.5, .F = 1024, .encoder = {}, .seed = 0});

  Target linear{1, 1, [](const Eigen::VectorXd& x) { return x; }};
  CHECK_THROWS_AS(fine_tune(model, midpoint_samples(linear, g)), SimilarityError);

  Dataset partial = midpoint_samples(pre, g);
  partial.inputs.conservativeResize(1, 1);
  partial.labels.conservativeResize(1, 1);
  CHECK_THROWS_AS(fine_tune(model, partial), SimilarityError);

  Dataset sparse_data;
  sparse_data.inputs = Eigen::MatrixXd::Constant(1, 1, 0.05);
  sparse_data.labels = Eigen::MatrixXd::Constant(1, 1, 0.0);
  auto [sparse, sparse_report] =
      train_pipeline(sparse_data, {.q = 8, .eps = 0.5, .F = 64, .encoder = {}, .seed = 0});
  CHECK_THROWS_AS(fine_tune(sparse, midpoint_samples(pre, g)), SimilarityError);
}

TEST_CASE("evaluation points avoid every face") {
  CubeGrid g(2, 4);
  Eigen::MatrixXd pts = eval_points(g, {8, 0.0});
  CHECK(pts.cols() == 64);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) CHECK(is_good_point(pts.col(i), g, 0.0));
  Eigen::MatrixXd clipped = eval_points(CubeGrid(1, 4), {10, 0.3});
  CHECK(clipped.minCoeff() >= 0.3);
}

TEST_CASE("property: interpolation whenever the feature matrix is well posed") {
  testing::WarningCapture warnings;
  Rng rng(13);
  for (int trial = 0; trial < 8; ++trial) {
    CubeGrid g(1 + trial % 2, 4);
    int kappa = 2 + trial % 4;
    SymmetryMap sym = random_symmetry(g, kappa, rng);
    std::vector<Eigen::VectorXd> betas;
    for (int k = 0; k < kappa; ++k) betas.push_back(vec({double(k), std::sin(double(k))}));
    Target f = make_cellwise_function(sym, betas);
    auto [model, report] = train_pipeline(midpoint_samples(f, g),
                                          {.q = 4, .eps = 0.4, .F = 1024, .encoder = {}, .seed = std::uint64_t(trial)});
    CHECK(report.kappa == kappa);
    if (report.s_min > 1e-10) CHECK(report.interpolates);
    CHECK(std::isfinite(report.beta_op_norm));
  }
}
