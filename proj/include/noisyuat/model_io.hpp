#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "noisyuat/regress.hpp"

namespace noisyuat {

inline constexpr int kModelFormatVersion = 1;

// Writes manifest.json plus keys, values, clusters, labels, B1, B2, P,
// biases and beta as dense CSV. The directory is created if needed.
void save_model(const std::filesystem::path& dir, const PipelineModel& model);

// Reads a model directory; the deep feature matrix is rebuilt from the
// stored encoder and representatives.
PipelineModel load_model(const std::filesystem::path& dir);

struct ModelCheck {
  bool encoder_reproduced = false;  // stored matrices equal a fresh draw from the manifest seed
  FitReport fit;
  std::vector<std::string> problems;

  bool ok() const noexcept { return problems.empty(); }
};

// Loads a model, regenerates its encoder from the recorded seed and checks
// the interpolation residual.
ModelCheck check_model(const std::filesystem::path& dir);

}  // namespace noisyuat
