#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace noisyuat {

// Width rule constants: p1 = c kappa^(2(1+alpha)) log^2(2 kappa F) / F.
struct EncoderConsts {
  double c = 1.0;
  double alpha = 0.25;
};

// How a context vector z enters the first layer.
//   identity:    z as is.
//   sphere_lift: (z, sqrt(1 - |z|^2)) for |z| <= 1, else (z/|z|, 0). Every
//                lifted input has unit norm, so no input sits below the
//                first-layer threshold.
enum class InputMap { identity, sphere_lift };

InputMap parse_input_map(std::string_view name);
std::string_view input_map_name(InputMap map);

struct EncoderOptions {
  EncoderConsts consts;
  InputMap input_map = InputMap::sphere_lift;
  int projection_rows = 0;  // 0 means kappa - 1
};

struct EncoderParams {
  int d = 1;
  int F = 2;
  int kappa = 2;
  EncoderConsts consts;
  InputMap input_map = InputMap::sphere_lift;
  std::uint64_t seed = 0;

  Eigen::MatrixXd B1;  // F x input_dim()
  Eigen::MatrixXd B2;  // F x F
  Eigen::MatrixXd P;   // projection_rows x F, entries N(0, 1/projection_rows)
  double b1 = 0.0;
  double b2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  int input_dim() const noexcept { return input_map == InputMap::sphere_lift ? d + 1 : d; }
  int output_dim() const noexcept { return static_cast<int>(P.rows()); }
};

// Second moment of ReLU(g - b) for g ~ N(0,1): (1 + b^2) Phi(-b) - b phi(b).
double relu_second_moment(double b);

// The unique b with relu_second_moment(b) = p, to 1e-12.
double solve_bias(double p);

// Moment targets before clamping.
double first_layer_target(int F, int kappa, const EncoderConsts& consts);

// Draws B1, B2 and P (each row-major, in that order) from a generator seeded
// with `seed`. Warns when F < kappa^(5(1+alpha)) or when p1 must be clamped.
EncoderParams init_encoder(int d, int F, int kappa, const EncoderOptions& options, std::uint64_t seed);

Eigen::VectorXd lift_input(const Eigen::Ref<const Eigen::VectorXd>& z, InputMap map);

// Second-layer activations scaled by 1/sqrt(F p2), before the projection.
Eigen::VectorXd hidden_features(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& z);
Eigen::MatrixXd hidden_features_batch(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& z);

Eigen::VectorXd encode(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& z);
// One column per input column.
Eigen::MatrixXd encode_batch(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& z);

// Column c is (1, encode(reps.col(c))). Expects one column per cluster.
Eigen::MatrixXd deep_feature_matrix(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& reps);

struct Conditioning {
  double s_min = 0.0;
  double s_max = 0.0;
  double cond = 0.0;  // inf when s_min = 0
};

Conditioning conditioning(const Eigen::Ref<const Eigen::MatrixXd>& x);

}  // namespace noisyuat
