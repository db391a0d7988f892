#include "noisyuat/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "noisyuat/errors.hpp"

namespace noisyuat {

Eigen::VectorXd ClusterModel::scaled_representative(int c) const {
  return keys.col(representatives.at(static_cast<std::size_t>(c))) * (1.0 / std::sqrt(static_cast<double>(grid.d())));
}

void ClusterModel::validate() const {
  const Eigen::Index m = keys.cols();
  if (keys.rows() != grid.d() || values.rows() != grid.d() || values.cols() != m)
    throw ValidationError("cluster model: keys and values must both be d x M");
  if (static_cast<Eigen::Index>(cluster_of_key.size()) != m || static_cast<Eigen::Index>(key_cubes.size()) != m)
    throw ValidationError("cluster model: per-key tables have the wrong length");
  if (labels.size() != representatives.size() || representatives.empty())
    throw ValidationError("cluster model: need one label per cluster and at least one cluster");
  for (std::size_t c = 0; c < representatives.size(); ++c) {
    const int r = representatives[c];
    if (r < 0 || r >= m || cluster_of_key[static_cast<std::size_t>(r)] != static_cast<int>(c))
      throw ValidationError("cluster model: representative outside its cluster");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const int c = cluster_of_key[static_cast<std::size_t>(i)];
    if (c < 0 || c >= kappa()) throw ValidationError("cluster model: key assigned to unknown cluster");
    if (values.col(i) != values.col(representatives[static_cast<std::size_t>(c)]))
      throw ValidationError("cluster model: value columns differ within a cluster");
    if (values.col(i).norm() > 2.0) throw ValidationError("cluster model: value column norm exceeds 2");
  }
}

ClusterModel cluster(const DenoisedDataset& den, double eps, Rng& rng) {
  if (!(eps > 0.0)) throw ValidationError("cluster: eps must be positive");
  if (den.entries.empty()) throw ValidationError("cluster: denoised dataset is empty");
  const std::size_t m = den.entries.size();
  const int d = den.grid.d();
  const double threshold = eps / 8.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  ClusterModel model;
  model.grid = den.grid;
  model.keys.resize(d, static_cast<Eigen::Index>(m));
  model.values.resize(d, static_cast<Eigen::Index>(m));
  model.key_cubes.resize(m);
  model.cluster_of_key.assign(m, -1);
  for (std::size_t i = 0; i < m; ++i) {
    model.keys.col(static_cast<Eigen::Index>(i)) = den.entries[i].x;
    model.key_cubes[i] = linear_index(den.entries[i].cube, den.grid);
  }

  std::vector<std::size_t> open(m);
  std::iota(open.begin(), open.end(), std::size_t{0});
  while (!open.empty()) {
    const std::size_t ref = open[uniform_index(rng, open.size())];
    const int c = model.kappa();
    model.representatives.push_back(static_cast<int>(ref));
    model.labels.push_back(den.entries[ref].y);
    std::vector<std::size_t> rest;
    rest.reserve(open.size());
    for (std::size_t i : open) {
      if ((den.entries[i].y - den.entries[ref].y).norm() < threshold)
        model.cluster_of_key[i] = c;
      else
        rest.push_back(i);
    }
    open.swap(rest);
  }
  for (std::size_t i = 0; i < m; ++i) {
    const int rep = model.representatives[static_cast<std::size_t>(model.cluster_of_key[i])];
    model.values.col(static_cast<Eigen::Index>(i)) = den.entries[static_cast<std::size_t>(rep)].x * scale;
  }
  return model;
}

Eigen::VectorXd softmax_inf(const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (z.size() < 1) throw ValidationError("softmax_inf: empty input");
  if (!z.allFinite()) throw ValidationError("softmax_inf: non-finite score");
  const double top = z.maxCoeff();
  Eigen::VectorXd out = (z.array() == top).cast<double>().matrix();
  return out / out.sum();
}

std::vector<Eigen::Index> nearest_keys(const Eigen::Ref<const Eigen::VectorXd>& x, const ClusterModel& model) {
  if (x.size() != model.d()) throw ValidationError("attend: query has the wrong dimension");
  std::vector<Eigen::Index> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < model.keys.cols(); ++i) {
    const double dist = (model.keys.col(i) - x).lpNorm<Eigen::Infinity>();
    if (dist < best_dist) {
      best_dist = dist;
      best.assign(1, i);
    } else if (dist == best_dist) {
      best.push_back(i);
    }
  }
  return best;
}

Eigen::VectorXd attend(const Eigen::Ref<const Eigen::VectorXd>& x, const ClusterModel& model) {
  const auto winners = nearest_keys(x, model);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(model.d());
  for (Eigen::Index i : winners) out += model.values.col(i);
  return out / static_cast<double>(winners.size());
}

IdentifiabilityReport identifiability_report(const ClusterModel& model, const Target& f, std::int64_t probes,
                                             Rng& rng) {
  if (probes < 1) throw ValidationError("identifiability_report: probes must be positive");
  const CubeGrid& grid = model.grid;
  const int d = grid.d();
  std::vector<Eigen::VectorXd> key_values(static_cast<std::size_t>(model.key_count()));
  for (Eigen::Index i = 0; i < model.key_count(); ++i) key_values[static_cast<std::size_t>(i)] = f(model.keys.col(i));

  IdentifiabilityReport rep;
  rep.probes = probes;
  Eigen::VectorXd x(d);
  for (std::int64_t p = 0; p < probes; ++p) {
    do {
      for (int k = 0; k < d; ++k) x(k) = uniform01(rng);
    } while (!is_good_point(x, grid, 1e-12));
    const Eigen::VectorXd target = f(midpoint(cube_index(x, grid), grid));
    int match = -1;
    bool unique = true;
    for (std::size_t i = 0; i < key_values.size(); ++i) {
      if ((key_values[i] - target).lpNorm<Eigen::Infinity>() != 0.0) continue;
      const int c = model.cluster_of_key[i];
      if (match >= 0 && match != c) unique = false;
      match = c;
    }
    if (match >= 0 && unique && attend(x, model) == model.scaled_representative(match)) ++rep.hits;
  }
  rep.fraction = static_cast<double>(rep.hits) / static_cast<double>(probes);

  rep.separation = std::numeric_limits<double>::infinity();
  for (int a = 0; a < model.kappa(); ++a)
    for (int b = a + 1; b < model.kappa(); ++b)
      rep.separation =
          std::min(rep.separation, (model.scaled_representative(a) - model.scaled_representative(b)).norm());
  return rep;
}

}  // namespace noisyuat
