#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "noisyuat/attention.hpp"
#include "noisyuat/denoise.hpp"
#include "noisyuat/encoder.hpp"
#include "noisyuat/grid.hpp"
#include "noisyuat/tasks.hpp"

namespace noisyuat {

// beta = Y X^+ through a thin SVD; singular values below 1e-12 s_max count
// as zero. X is m x n, Y is D x n, beta is D x m.
Eigen::MatrixXd ols_fit(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y);

struct OlsSolution {
  Eigen::MatrixXd beta;
  Eigen::VectorXd singular_values;  // of X, descending
};

// ols_fit that also returns the spectrum of X.
OlsSolution ols_solve(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y);

struct PipelineConfig {
  int q = 4;
  double eps = 0.1;  // separation level; clustering threshold is eps/8
  int F = 1024;
  EncoderOptions encoder;
  std::uint64_t seed = 0;  // master seed, split into cluster and encoder streams
};

struct FitReport {
  int kappa = 0;
  double residual_max = 0.0;  // max over clusters of |beta X - Y|_2
  double s_min = 0.0;
  double s_max = 0.0;
  double cond = 0.0;
  double beta_op_norm = 0.0;
  bool constant_readout = false;  // kappa = 1: beta is the single label
  bool interpolates = true;       // residual_max <= 1e-8 max|Y| whenever s_min > 1e-10

  bool operator==(const FitReport&) const = default;
};

struct PipelineModel {
  PipelineConfig config;
  ClusterModel clusters;
  std::optional<EncoderParams> encoder;  // absent for the constant readout
  Eigen::MatrixXd X;                     // kappa x kappa deep feature matrix
  Eigen::MatrixXd beta;                  // D x kappa
  Eigen::MatrixXd fitted;                // beta X, one column per cluster
  std::string train_digest;              // FNV-1a of the training CSV
  std::vector<std::string> finetune_digests;

  const CubeGrid& grid() const noexcept { return clusters.grid; }
  int kappa() const noexcept { return clusters.kappa(); }
  int D() const noexcept { return static_cast<int>(beta.rows()); }
  bool constant_readout() const noexcept { return !encoder.has_value(); }
};

// Encodes the cluster representatives and solves beta X = cluster labels.
std::pair<PipelineModel, FitReport> fit_readout(const PipelineConfig& config, ClusterModel clusters);

// denoise -> cluster -> init_encoder -> deep feature matrix -> OLS.
std::pair<PipelineModel, FitReport> train_pipeline(const Dataset& data, const PipelineConfig& config);

// beta (1, encode(attend(x))). Queries routed to a single cluster reuse the
// fitted column for that cluster.
Eigen::VectorXd predict(const PipelineModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// Refits beta on new data against the frozen deep feature matrix. Each new
// denoised entry is matched to the cluster owning its cube; a cluster takes
// its representative cube's new label, or its first occupied cube's.
// Throws SimilarityError for unknown cubes, clusters without data, or member
// labels at least eps/8 away from their cluster's new label.
std::pair<PipelineModel, FitReport> fine_tune(const PipelineModel& model, const Dataset& new_data);

struct EvalGrid {
  int resolution = 100;  // points per axis, at (j + 1/2) / resolution
  double lower = 0.0;    // points with a coordinate below this are skipped
};

// Evaluation grid points that avoid every face of `grid`, one per column.
Eigen::MatrixXd eval_points(const CubeGrid& grid, const EvalGrid& eval);

// Max of |f(x) - predict(x)|_2 over eval_points.
double uniform_error(const PipelineModel& model, const Target& f, const EvalGrid& eval = {});

// Mean l2 residual over the samples.
double empirical_risk(const PipelineModel& model, const Dataset& data);

FitReport make_fit_report(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& beta,
                          bool constant_readout);

}  // namespace noisyuat
