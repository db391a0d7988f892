#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "noisyuat/encoder.hpp"
#include "noisyuat/regress.hpp"
#include "noisyuat/tasks.hpp"

namespace noisyuat {

// Random-feature comparator: the same two-layer encoder applied to raw
// inputs, with min(N, F) projection rows, then an OLS readout.
struct RfmConfig {
  int F = 1024;
  int kappa = 2;  // enters the first-layer moment target only
  EncoderOptions encoder;
  std::uint64_t seed = 0;
};

struct RfmModel {
  EncoderParams encoder;
  Eigen::MatrixXd beta;  // D x (features + 1)
};

struct RfmMetrics {
  double train_risk = 0.0;
  double s_min = 0.0;
  double s_max = 0.0;
  double cond = 0.0;
};

std::pair<RfmModel, RfmMetrics> rfm_baseline(const Dataset& data, const RfmConfig& config);
// One prediction column per input column.
Eigen::MatrixXd rfm_predict(const RfmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x);

enum class TaskKind { oscillatory, singular, symmetric, cellwise };

TaskKind parse_task_kind(std::string_view name);
std::string_view task_kind_name(TaskKind kind);

struct ExperimentConfig {
  TaskKind task = TaskKind::oscillatory;
  int d = 1;               // symmetric and cellwise tasks only
  int kappa = 4;           // classes of the synthetic symmetry
  int smoothness = 1;
  NoiseSpec noise = NoiseSpec::gaussian(0.1);
  std::int64_t n_train = 2000;
  std::int64_t n_test = 2000;
  PipelineConfig pipeline{.q = 64, .eps = 0.008, .F = 1024, .encoder = {}, .seed = 0};  // seed replaced per run
  std::vector<std::uint64_t> seeds{0};
  int resolution = 10000;  // eval points per axis
  double eval_lower = -1.0;  // < 0: 1/q for the singular task, 0 otherwise
  bool baseline = true;
  std::filesystem::path out_dir;  // empty: no files written
  int threads = 0;                // 0: NOISYUAT_THREADS or the hardware count

  void validate() const;
};

// Flat `key = value` text; '#' starts a comment. Keys mirror the fields above
// (task, d, kappa, smoothness, noise, sigma, n_train, n_test, q, eps, F, c,
// alpha, input_map, seeds, resolution, eval_lower, baseline, out_dir, threads).
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Applies one `key=value` assignment.
void set_experiment_option(ExperimentConfig& cfg, std::string_view key, std::string_view value);

struct ResultRow {
  std::uint64_t seed = 0;
  std::string model;  // "transformer" or "rfm"
  int kappa = 0;
  double uniform_error = 0.0;
  double empirical_risk_train = 0.0;
  double empirical_risk_test = 0.0;
  double gen_gap_estimate = 0.0;
  double cond = 0.0;
  double runtime_ms = 0.0;
  std::string status = "ok";  // otherwise an error class, e.g. "numeric_error"

  bool operator==(const ResultRow&) const = default;
};

std::string results_to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> results_from_csv(std::string_view text);

// Target of the experiment for one seed.
Target experiment_target(const ExperimentConfig& cfg, std::uint64_t seed);

// Trains and evaluates every seed (in parallel across seeds); rows are ordered
// by seed, transformer before baseline. With an output directory, writes
// results.csv and, for 1-D tasks, plot_<task>.svg.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

// Threads to use: explicit request, else NOISYUAT_THREADS, else the hardware
// count, capped by `jobs`.
int worker_count(int requested, std::size_t jobs);

}  // namespace noisyuat
