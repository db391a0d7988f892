#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "noisyuat/denoise.hpp"
#include "noisyuat/grid.hpp"
#include "noisyuat/rng.hpp"
#include "noisyuat/tasks.hpp"

namespace noisyuat {

// Keys, values and the label-space partition produced by greedy clustering.
struct ClusterModel {
  CubeGrid grid{1, 1};
  Eigen::MatrixXd keys;    // d x M, occupied-cube midpoints
  Eigen::MatrixXd values;  // d x M, representative midpoint / sqrt(d), constant per cluster
  std::vector<std::int64_t> key_cubes;       // linear cube index of each key
  std::vector<int> cluster_of_key;           // 0-based cluster id of each key
  std::vector<int> representatives;          // key index of each cluster's representative
  std::vector<Eigen::VectorXd> labels;       // label of each cluster (its representative's)

  int kappa() const noexcept { return static_cast<int>(representatives.size()); }
  Eigen::Index key_count() const noexcept { return keys.cols(); }
  int d() const noexcept { return grid.d(); }

  // Representative midpoint scaled by 1/sqrt(d).
  Eigen::VectorXd scaled_representative(int cluster) const;

  // Throws ValidationError when the invariants above do not hold.
  void validate() const;
};

// Repeatedly draws an unclustered entry uniformly and absorbs every
// unclustered entry whose label lies strictly within eps/8 (l2).
ClusterModel cluster(const DenoisedDataset& den, double eps, Rng& rng);

// Infinite-temperature softmax: 1/#argmax on every maximiser.
Eigen::VectorXd softmax_inf(const Eigen::Ref<const Eigen::VectorXd>& z);

// Indices of the keys at minimal sup-norm distance from x.
std::vector<Eigen::Index> nearest_keys(const Eigen::Ref<const Eigen::VectorXd>& x, const ClusterModel& model);

// V softmax_inf(-(||x - K_i||_inf)_i).
Eigen::VectorXd attend(const Eigen::Ref<const Eigen::VectorXd>& x, const ClusterModel& model);

struct IdentifiabilityReport {
  std::int64_t probes = 0;
  std::int64_t hits = 0;
  double fraction = 0.0;
  // Smallest l2 distance between two scaled representatives (inf when kappa = 1).
  double separation = 0.0;
};

// Draws good-set probes uniformly and checks that attention returns the
// representative of the cluster whose cubes share f's midpoint value.
IdentifiabilityReport identifiability_report(const ClusterModel& model, const Target& f, std::int64_t probes,
                                             Rng& rng);

}  // namespace noisyuat
