#include "noisyuat/model_io.hpp"

#include <cmath>
#include <system_error>

#include "json.hpp"
#include "noisyuat/csv.hpp"
#include "noisyuat/errors.hpp"
#include "noisyuat/log.hpp"
#include "noisyuat/rng.hpp"

namespace noisyuat {
namespace {

using nlohmann::json;

Eigen::MatrixXd read_shaped(const std::filesystem::path& path, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.rows() != rows || m.cols() != cols)
    throw IoError(path.string() + ": expected a " + std::to_string(rows) + " x " + std::to_string(cols) +
                  " matrix, found " + std::to_string(m.rows()) + " x " + std::to_string(m.cols()));
  return m;
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw IoError(std::string("manifest.json: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest.json: field '") + key + "': " + e.what());
  }
}

}  // namespace

void save_model(const std::filesystem::path& dir, const PipelineModel& model) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create model directory " + dir.string() + ": " + ec.message());
  const ClusterModel& cm = model.clusters;
  const PipelineConfig& cfg = model.config;

  json manifest;
  manifest["version"] = kModelFormatVersion;
  manifest["d"] = cm.d();
  manifest["D"] = model.D();
  manifest["q"] = cfg.q;
  manifest["eps"] = cfg.eps;
  manifest["F"] = cfg.F;
  manifest["kappa"] = model.kappa();
  manifest["keys"] = cm.key_count();
  manifest["consts"] = {{"c", cfg.encoder.consts.c}, {"alpha", cfg.encoder.consts.alpha}};
  manifest["input_map"] = std::string(input_map_name(cfg.encoder.input_map));
  manifest["projection_rows"] = cfg.encoder.projection_rows;
  manifest["seeds"] = {{"master", cfg.seed},
                       {"cluster", split_seed(cfg.seed, Stream::cluster)},
                       {"encoder", split_seed(cfg.seed, Stream::encoder)}};
  manifest["rng"] = std::string(kRngId);
  manifest["constant_readout"] = model.constant_readout();
  manifest["representatives"] = cm.representatives;
  manifest["digests"] = {{"train", model.train_digest}, {"finetune", model.finetune_digests}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

  write_matrix_csv(dir / "keys.csv", cm.keys);
  write_matrix_csv(dir / "values.csv", cm.values);
  Eigen::MatrixXd assign(cm.key_count(), 2);
  for (Eigen::Index i = 0; i < cm.key_count(); ++i) {
    assign(i, 0) = static_cast<double>(cm.key_cubes[static_cast<std::size_t>(i)]);
    assign(i, 1) = cm.cluster_of_key[static_cast<std::size_t>(i)];
  }
  write_matrix_csv(dir / "clusters.csv", assign);
  Eigen::MatrixXd labels(model.D(), model.kappa());
  for (int c = 0; c < model.kappa(); ++c) labels.col(c) = cm.labels[static_cast<std::size_t>(c)];
  write_matrix_csv(dir / "labels.csv", labels);
  write_matrix_csv(dir / "beta.csv", model.beta);
  if (model.encoder) {
    const EncoderParams& e = *model.encoder;
    write_matrix_csv(dir / "B1.csv", e.B1);
    write_matrix_csv(dir / "B2.csv", e.B2);
    write_matrix_csv(dir / "P.csv", e.P);
    Eigen::MatrixXd biases(1, 4);
    biases << e.b1, e.b2, e.p1, e.p2;
    write_matrix_csv(dir / "biases.csv", biases);
  }
}

PipelineModel load_model(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::parse_error& e) {
    throw ParseError((dir / "manifest.json").string() + ": " + e.what(), e.byte);
  }
  if (field<int>(manifest, "version") != kModelFormatVersion)
    throw IoError("manifest.json: unsupported format version");
  if (field<std::string>(manifest, "rng") != kRngId)
    throw IoError("manifest.json: model was drawn with generator '" + field<std::string>(manifest, "rng") +
                  "', this build uses '" + std::string(kRngId) + "'");

  PipelineModel model;
  PipelineConfig& cfg = model.config;
  const int d = field<int>(manifest, "d");
  const int D = field<int>(manifest, "D");
  const int kappa = field<int>(manifest, "kappa");
  const Eigen::Index m = field<Eigen::Index>(manifest, "keys");
  cfg.q = field<int>(manifest, "q");
  cfg.eps = field<double>(manifest, "eps");
  cfg.F = field<int>(manifest, "F");
  const json consts = field<json>(manifest, "consts");
  cfg.encoder.consts.c = field<double>(consts, "c");
  cfg.encoder.consts.alpha = field<double>(consts, "alpha");
  cfg.encoder.input_map = parse_input_map(field<std::string>(manifest, "input_map"));
  cfg.encoder.projection_rows = field<int>(manifest, "projection_rows");
  cfg.seed = field<std::uint64_t>(field<json>(manifest, "seeds"), "master");
  const json digests = field<json>(manifest, "digests");
  model.train_digest = field<std::string>(digests, "train");
  model.finetune_digests = field<std::vector<std::string>>(digests, "finetune");
  if (d < 1 || D < 1 || kappa < 1 || m < kappa) throw IoError("manifest.json: inconsistent dimensions");

  ClusterModel& cm = model.clusters;
  cm.grid = CubeGrid(d, cfg.q);
  cm.keys = read_shaped(dir / "keys.csv", d, m);
  cm.values = read_shaped(dir / "values.csv", d, m);
  const Eigen::MatrixXd assign = read_shaped(dir / "clusters.csv", m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    cm.key_cubes.push_back(static_cast<std::int64_t>(assign(i, 0)));
    cm.cluster_of_key.push_back(static_cast<int>(assign(i, 1)));
  }
  cm.representatives = field<std::vector<int>>(manifest, "representatives");
  const Eigen::MatrixXd labels = read_shaped(dir / "labels.csv", D, kappa);
  for (int c = 0; c < kappa; ++c) cm.labels.push_back(labels.col(c));
  try {
    cm.validate();
  } catch (const ValidationError& e) {
    throw IoError(dir.string() + ": " + e.what());
  }
  model.beta = read_shaped(dir / "beta.csv", D, kappa);

  if (field<bool>(manifest, "constant_readout")) {
    if (kappa != 1) throw IoError("manifest.json: constant readout requires kappa = 1");
    model.X = Eigen::MatrixXd::Ones(1, 1);
  } else {
    EncoderParams e;
    e.d = d;
    e.F = cfg.F;
    e.kappa = kappa;
    e.consts = cfg.encoder.consts;
    e.input_map = cfg.encoder.input_map;
    e.seed = field<std::uint64_t>(field<json>(manifest, "seeds"), "encoder");
    e.B1 = read_shaped(dir / "B1.csv", cfg.F, e.input_dim());
    e.B2 = read_shaped(dir / "B2.csv", cfg.F, cfg.F);
    e.P = read_shaped(dir / "P.csv", kappa - 1, cfg.F);
    const Eigen::MatrixXd biases = read_shaped(dir / "biases.csv", 1, 4);
    e.b1 = biases(0, 0);
    e.b2 = biases(0, 1);
    e.p1 = biases(0, 2);
    e.p2 = biases(0, 3);
    model.encoder = std::move(e);
    Eigen::MatrixXd contexts(d, kappa);
    for (int c = 0; c < kappa; ++c) contexts.col(c) = attend(cm.keys.col(cm.representatives[static_cast<std::size_t>(c)]), cm);
    model.X = deep_feature_matrix(*model.encoder, contexts);
  }
  model.fitted = model.beta * model.X;
  return model;
}

ModelCheck check_model(const std::filesystem::path& dir) {
  ModelCheck check;
  const PipelineModel model = load_model(dir);
  Eigen::MatrixXd labels(model.D(), model.kappa());
  for (int c = 0; c < model.kappa(); ++c) labels.col(c) = model.clusters.labels[static_cast<std::size_t>(c)];
  check.fit = make_fit_report(model.X, labels, model.beta, model.constant_readout());
  if (model.encoder) {
    const EncoderParams& stored = *model.encoder;
    const EncoderParams fresh = init_encoder(stored.d, stored.F, stored.kappa, model.config.encoder,
                                             split_seed(model.config.seed, Stream::encoder));
    check.encoder_reproduced = fresh.B1 == stored.B1 && fresh.B2 == stored.B2 && fresh.P == stored.P &&
                               fresh.b1 == stored.b1 && fresh.b2 == stored.b2;
    if (!check.encoder_reproduced) check.problems.push_back("stored encoder differs from a fresh draw of its seed");
  } else {
    check.encoder_reproduced = true;
  }
  if (!check.fit.interpolates)
    check.problems.push_back("interpolation residual " + format_double(check.fit.residual_max) +
                             " exceeds 1e-8 max|Y|");
  if (!std::isfinite(check.fit.beta_op_norm)) check.problems.push_back("readout has non-finite entries");
  return check;
}

}  // namespace noisyuat
