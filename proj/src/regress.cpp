#include "noisyuat/regress.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "noisyuat/csv.hpp"
#include "noisyuat/errors.hpp"
#include "noisyuat/log.hpp"
#include "noisyuat/rng.hpp"

namespace noisyuat {
namespace {

void check_config(const PipelineConfig& c) {
  if (c.q < 1) throw ValidationError("pipeline: q must be >= 1");
  if (!(c.eps > 0.0) || !std::isfinite(c.eps)) throw ValidationError("pipeline: eps must be positive");
  if (c.F < 2) throw ValidationError("pipeline: F must be >= 2");
  if (c.encoder.projection_rows != 0) throw ValidationError("pipeline: the projection always has kappa - 1 rows");
}

Eigen::MatrixXd cluster_labels(const ClusterModel& clusters) {
  Eigen::MatrixXd y(clusters.labels.front().size(), clusters.kappa());
  for (int c = 0; c < clusters.kappa(); ++c) y.col(c) = clusters.labels[static_cast<std::size_t>(c)];
  return y;
}

}  // namespace

OlsSolution ols_solve(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y) {
  if (x.cols() != y.cols())
    throw ValidationError("ols_fit: X has " + std::to_string(x.cols()) + " columns but Y has " +
                          std::to_string(y.cols()));
  if (!x.allFinite() || !y.allFinite()) throw ValidationError("ols_fit: non-finite input");
  OlsSolution out;
  if (x.size() == 0) {
    out.beta = Eigen::MatrixXd::Zero(y.rows(), x.rows());
    return out;
  }
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.singular_values = svd.singularValues();
  const Eigen::VectorXd& s = out.singular_values;
  const double cutoff = 1e-12 * s(0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  // X = U S V^T, so Y X^+ = ((Y V) S^+) U^T.
  out.beta = ((y * svd.matrixV()) * inv.asDiagonal()) * svd.matrixU().transpose();
  return out;
}

Eigen::MatrixXd ols_fit(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y) {
  return ols_solve(x, y).beta;
}

FitReport make_fit_report(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& beta,
                          bool constant_readout) {
  FitReport r;
  r.kappa = static_cast<int>(x.cols());
  r.constant_readout = constant_readout;
  const Eigen::MatrixXd residual = beta * x - y;
  for (Eigen::Index c = 0; c < residual.cols(); ++c) r.residual_max = std::max(r.residual_max, residual.col(c).norm());
  const Conditioning cond = conditioning(x);
  r.s_min = cond.s_min;
  r.s_max = cond.s_max;
  r.cond = cond.cond;
  r.beta_op_norm = beta.size() ? Eigen::JacobiSVD<Eigen::MatrixXd>(beta).singularValues()(0) : 0.0;
  double y_max = 0.0;
  for (Eigen::Index c = 0; c < y.cols(); ++c) y_max = std::max(y_max, y.col(c).norm());
  r.interpolates = !(r.s_min > 1e-10) || r.residual_max <= 1e-8 * y_max;
  if (!r.interpolates)
    warn("readout residual " + format_double(r.residual_max) + " exceeds 1e-8 max|Y| on a well-posed system");
  return r;
}

std::pair<PipelineModel, FitReport> fit_readout(const PipelineConfig& config, ClusterModel clusters) {
  check_config(config);
  clusters.validate();
  PipelineModel model;
  model.config = config;
  model.clusters = std::move(clusters);
  const ClusterModel& cm = model.clusters;
  const int kappa = cm.kappa();
  const Eigen::MatrixXd y = cluster_labels(cm);

  if (kappa == 1) {
    model.X = Eigen::MatrixXd::Ones(1, 1);
  } else {
    const double growth = (1.0 + config.encoder.consts.alpha) * config.q * std::log(static_cast<double>(kappa));
    if (growth > std::log(static_cast<double>(config.F)))
      warn("encoder width F = " + std::to_string(config.F) +
           " is below the task-complexity floor kappa^(q(1+alpha)); relying on empirical conditioning");
    model.encoder = init_encoder(cm.d(), config.F, kappa, config.encoder, split_seed(config.seed, Stream::encoder));
    Eigen::MatrixXd contexts(cm.d(), kappa);
    for (int c = 0; c < kappa; ++c)
      contexts.col(c) = attend(cm.keys.col(cm.representatives[static_cast<std::size_t>(c)]), cm);
    model.X = deep_feature_matrix(*model.encoder, contexts);
  }
  model.beta = ols_fit(model.X, y);
  model.fitted = model.beta * model.X;
  FitReport report = make_fit_report(model.X, y, model.beta, kappa == 1);
  return {std::move(model), report};
}

std::pair<PipelineModel, FitReport> train_pipeline(const Dataset& data, const PipelineConfig& config) {
  check_config(config);
  const CubeGrid grid(data.d(), config.q);
  const DenoisedDataset den = denoise(data, grid);
  Rng rng(split_seed(config.seed, Stream::cluster));
  auto result = fit_readout(config, cluster(den, config.eps, rng));
  result.first.train_digest = fnv1a_hex(dataset_to_csv(data));
  return result;
}

Eigen::VectorXd predict(const PipelineModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.grid().d()) throw ValidationError("predict: query has the wrong dimension");
  if (!(x.array() >= 0.0).all() || !(x.array() <= 1.0).all()) throw DomainError("predict: query outside [0,1]^d");
  const ClusterModel& cm = model.clusters;
  if (model.constant_readout()) return model.fitted.col(0);
  const auto winners = nearest_keys(x, cm);
  const int first = cm.cluster_of_key[static_cast<std::size_t>(winners.front())];
  const bool single = std::all_of(winners.begin(), winners.end(), [&](Eigen::Index i) {
    return cm.cluster_of_key[static_cast<std::size_t>(i)] == first;
  });
  if (single) return model.fitted.col(first);
  Eigen::VectorXd features(model.kappa());
  features(0) = 1.0;
  features.tail(model.kappa() - 1) = encode(*model.encoder, attend(x, cm));
  return model.beta * features;
}

std::pair<PipelineModel, FitReport> fine_tune(const PipelineModel& model, const Dataset& new_data) {
  const ClusterModel& cm = model.clusters;
  const DenoisedDataset den = denoise(new_data, cm.grid);

  std::map<std::int64_t, Eigen::Index> key_of_cube;
  for (Eigen::Index i = 0; i < cm.key_count(); ++i) key_of_cube.emplace(cm.key_cubes[static_cast<std::size_t>(i)], i);

  const int kappa = cm.kappa();
  std::vector<const DenoisedEntry*> chosen(static_cast<std::size_t>(kappa), nullptr);
  std::vector<int> entry_cluster(den.entries.size());
  for (std::size_t j = 0; j < den.entries.size(); ++j) {
    const std::int64_t lin = linear_index(den.entries[j].cube, cm.grid);
    const auto it = key_of_cube.find(lin);
    if (it == key_of_cube.end())
      throw SimilarityError("fine_tune: new data occupies cube " + std::to_string(lin) +
                            ", which holds no key of the trained model");
    const int c = cm.cluster_of_key[static_cast<std::size_t>(it->second)];
    entry_cluster[j] = c;
    if (cm.representatives[static_cast<std::size_t>(c)] == it->second || !chosen[static_cast<std::size_t>(c)])
      chosen[static_cast<std::size_t>(c)] = &den.entries[j];
  }
  for (int c = 0; c < kappa; ++c)
    if (!chosen[static_cast<std::size_t>(c)])
      throw SimilarityError("fine_tune: cluster " + std::to_string(c) + " receives no new data");

  const double threshold = model.config.eps / 8.0;
  for (std::size_t j = 0; j < den.entries.size(); ++j) {
    const auto& label = chosen[static_cast<std::size_t>(entry_cluster[j])]->y;
    const double gap = (den.entries[j].y - label).norm();
    if (!(gap < threshold))
      throw SimilarityError("fine_tune: cube " + std::to_string(linear_index(den.entries[j].cube, cm.grid)) +
                            " disagrees with its cluster's new label by " + format_double(gap) + " >= eps/8");
  }

  Eigen::MatrixXd y(den.D(), kappa);
  for (int c = 0; c < kappa; ++c) y.col(c) = chosen[static_cast<std::size_t>(c)]->y;

  PipelineModel tuned = model;
  tuned.beta = ols_fit(tuned.X, y);
  tuned.fitted = tuned.beta * tuned.X;
  tuned.clusters.labels.assign(static_cast<std::size_t>(kappa), Eigen::VectorXd());
  for (int c = 0; c < kappa; ++c) tuned.clusters.labels[static_cast<std::size_t>(c)] = y.col(c);
  tuned.finetune_digests.push_back(fnv1a_hex(dataset_to_csv(new_data)));
  FitReport report = make_fit_report(tuned.X, y, tuned.beta, model.constant_readout());
  return {std::move(tuned), report};
}

Eigen::MatrixXd eval_points(const CubeGrid& grid, const EvalGrid& eval) {
  if (eval.resolution < 2) throw ValidationError("uniform_error: resolution must be >= 2");
  const int d = grid.d();
  std::vector<int> j(static_cast<std::size_t>(d), 0);
  std::vector<double> coords;
  Eigen::VectorXd x(d);
  for (;;) {
    bool keep = true;
    for (int k = 0; k < d; ++k) {
      x(k) = (j[static_cast<std::size_t>(k)] + 0.5) / eval.resolution;
      if (x(k) < eval.lower) keep = false;
    }
    if (keep && is_good_point(x, grid)) coords.insert(coords.end(), x.data(), x.data() + d);
    int k = d - 1;
    while (k >= 0 && ++j[static_cast<std::size_t>(k)] == eval.resolution) j[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
  return Eigen::Map<const Eigen::MatrixXd>(coords.data(), d, static_cast<Eigen::Index>(coords.size()) / d);
}

double uniform_error(const PipelineModel& model, const Target& f, const EvalGrid& eval) {
  const Eigen::MatrixXd pts = eval_points(model.grid(), eval);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < pts.cols(); ++i) worst = std::max(worst, (f(pts.col(i)) - predict(model, pts.col(i))).norm());
  return worst;
}

double empirical_risk(const PipelineModel& model, const Dataset& data) {
  if (data.size() == 0) throw ValidationError("empirical_risk: dataset is empty");
  if (data.D() != model.D()) throw ValidationError("empirical_risk: label dimension differs from the model");
  double sum = 0.0;
  double comp = 0.0;
  for (std::int64_t i = 0; i < data.size(); ++i) {
    const double r = (predict(model, data.inputs.col(i)) - data.labels.col(i)).norm();
    const double t = sum + r;
    comp += std::abs(sum) >= r ? (sum - t) + r : (r - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(data.size());
}

}  // namespace noisyuat
