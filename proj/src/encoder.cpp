#include "noisyuat/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "noisyuat/csv.hpp"
#include "noisyuat/errors.hpp"
#include "noisyuat/log.hpp"
#include "noisyuat/rng.hpp"

namespace noisyuat {
namespace {

constexpr double kMaxFirstLayerTarget = 0.49;

Eigen::MatrixXd relu(const Eigen::MatrixXd& m) { return m.cwiseMax(0.0); }

}  // namespace

InputMap parse_input_map(std::string_view name) {
  if (name == "identity") return InputMap::identity;
  if (name == "sphere_lift") return InputMap::sphere_lift;
  throw ValidationError("unknown input map '" + std::string(name) + "'");
}

std::string_view input_map_name(InputMap map) { return map == InputMap::identity ? "identity" : "sphere_lift"; }

double relu_second_moment(double b) {
  const double tail = 0.5 * std::erfc(b / std::sqrt(2.0));
  const double density = std::exp(-0.5 * b * b) / std::sqrt(2.0 * M_PI);
  return (1.0 + b * b) * tail - b * density;
}

double solve_bias(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("solve_bias: p must be positive and finite");
  double lo = -1.0;
  double hi = 1.0;
  while (relu_second_moment(lo) < p) lo *= 2.0;
  while (relu_second_moment(hi) > p) {
    hi *= 2.0;
    if (hi > 64.0) throw NumericError("solve_bias: p is below the representable moment range");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (relu_second_moment(mid) > p)
      lo = mid;
    else
      hi = mid;
  }
  const double b = std::abs(relu_second_moment(lo) - p) <= std::abs(relu_second_moment(hi) - p) ? lo : hi;
  if (std::abs(relu_second_moment(b) - p) > 1e-12)
    throw NumericError("solve_bias: residual " + format_double(relu_second_moment(b) - p) + " exceeds 1e-12");
  return b;
}

double first_layer_target(int F, int kappa, const EncoderConsts& consts) {
  const double lg = std::log(2.0 * kappa * static_cast<double>(F));
  return consts.c * std::pow(static_cast<double>(kappa), 2.0 * (1.0 + consts.alpha)) * lg * lg / F;
}

EncoderParams init_encoder(int d, int F, int kappa, const EncoderOptions& options, std::uint64_t seed) {
  if (d < 1) throw ValidationError("init_encoder: d must be >= 1");
  if (F < 2) throw ValidationError("init_encoder: width F must be >= 2");
  if (kappa < 2)
    throw ValidationError("init_encoder: kappa must be >= 2 (a single cluster uses the constant readout)");
  if (!(options.consts.c > 0.0) || !(options.consts.alpha > 0.0))
    throw ValidationError("init_encoder: constants c and alpha must be positive");
  if (options.projection_rows < 0) throw ValidationError("init_encoder: projection_rows must be >= 0");

  const double width_floor = std::pow(static_cast<double>(kappa), 5.0 * (1.0 + options.consts.alpha));
  if (static_cast<double>(F) < width_floor)
    warn("encoder width F = " + std::to_string(F) + " is below kappa^(5(1+alpha)) = " + format_double(width_floor));

  EncoderParams p;
  p.d = d;
  p.F = F;
  p.kappa = kappa;
  p.consts = options.consts;
  p.input_map = options.input_map;
  p.seed = seed;
  p.p1 = first_layer_target(F, kappa, options.consts);
  if (p.p1 > kMaxFirstLayerTarget) {
    warn("first-layer moment target " + format_double(p.p1) + " clamped to 0.49");
    p.p1 = kMaxFirstLayerTarget;
  }
  p.p2 = 1.0 / std::sqrt(static_cast<double>(F));
  p.b1 = solve_bias(p.p1);
  p.b2 = solve_bias(p.p2);

  const int rows = options.projection_rows > 0 ? options.projection_rows : kappa - 1;
  Rng rng(seed);
  p.B1.resize(F, p.input_dim());
  fill_standard_normal(rng, p.B1);
  p.B2.resize(F, F);
  fill_standard_normal(rng, p.B2);
  p.P.resize(rows, F);
  fill_standard_normal(rng, p.P);
  p.P /= std::sqrt(static_cast<double>(rows));
  return p;
}

Eigen::VectorXd lift_input(const Eigen::Ref<const Eigen::VectorXd>& z, InputMap map) {
  if (map == InputMap::identity) return z;
  Eigen::VectorXd out(z.size() + 1);
  const double n2 = z.squaredNorm();
  if (n2 <= 1.0) {
    out.head(z.size()) = z;
    out(z.size()) = std::sqrt(1.0 - n2);
  } else {
    out.head(z.size()) = z / std::sqrt(n2);
    out(z.size()) = 0.0;
  }
  return out;
}

Eigen::MatrixXd hidden_features_batch(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& z) {
  if (z.rows() != params.d)
    throw ValidationError("encode: input has dimension " + std::to_string(z.rows()) + ", encoder expects " +
                          std::to_string(params.d));
  Eigen::MatrixXd lifted(params.input_dim(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) lifted.col(j) = lift_input(z.col(j), params.input_map);
  const double s1 = 1.0 / std::sqrt(params.F * params.p1);
  const double s2 = 1.0 / std::sqrt(params.F * params.p2);
  const Eigen::MatrixXd h1 = relu((params.B1 * lifted).array() - params.b1) * s1;
  return relu((params.B2 * h1).array() - params.b2) * s2;
}

Eigen::VectorXd hidden_features(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& z) {
  return hidden_features_batch(params, z);
}

Eigen::MatrixXd encode_batch(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& z) {
  return params.P * hidden_features_batch(params, z);
}

Eigen::VectorXd encode(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& z) {
  return encode_batch(params, z);
}

Eigen::MatrixXd deep_feature_matrix(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& reps) {
  if (reps.cols() != params.output_dim() + 1)
    throw ValidationError("deep_feature_matrix: expected " + std::to_string(params.output_dim() + 1) +
                          " representatives, got " + std::to_string(reps.cols()));
  for (Eigen::Index a = 0; a < reps.cols(); ++a)
    for (Eigen::Index b = a + 1; b < reps.cols(); ++b)
      if (reps.col(a) == reps.col(b)) {
        warn("deep_feature_matrix: duplicate representatives " + std::to_string(a) + " and " + std::to_string(b));
      }
  Eigen::MatrixXd x(reps.cols(), reps.cols());
  x.row(0).setOnes();
  x.bottomRows(reps.cols() - 1) = encode_batch(params, reps);
  return x;
}

Conditioning conditioning(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (!x.allFinite()) throw ValidationError("conditioning: matrix has non-finite entries");
  Conditioning c;
  if (x.size() == 0) return c;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
  const auto& s = svd.singularValues();
  c.s_max = s.maxCoeff();
  c.s_min = s.minCoeff();
  c.cond = c.s_min > 0.0 ? c.s_max / c.s_min : std::numeric_limits<double>::infinity();
  return c;
}

}  // namespace noisyuat
