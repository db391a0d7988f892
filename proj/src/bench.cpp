#include "noisyuat/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "noisyuat/csv.hpp"
#include "noisyuat/errors.hpp"
#include "noisyuat/rng.hpp"

namespace noisyuat {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <class Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out{};
  v = trim(v);
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ValidationError("option '" + std::string(key) + "': '" + std::string(v) + "' is not an integer");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  try {
    return parse_double(trim(v));
  } catch (const ParseError&) {
    throw ValidationError("option '" + std::string(key) + "': '" + std::string(v) + "' is not a number");
  }
}

bool parse_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("option '" + std::string(key) + "': expected true or false");
}

struct SeedOutcome {
  std::vector<ResultRow> rows;
  Eigen::VectorXd transformer_curve;
  Eigen::VectorXd rfm_curve;
};

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

ResultRow failed_row(std::uint64_t seed, const std::string& model, const std::exception& e) {
  ResultRow row;
  row.seed = seed;
  row.model = model;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  row.uniform_error = row.empirical_risk_train = row.empirical_risk_test = row.gen_gap_estimate = row.cond = nan;
  if (dynamic_cast<const NumericError*>(&e))
    row.status = "numeric_error";
  else if (dynamic_cast<const SimilarityError*>(&e))
    row.status = "similarity_error";
  else if (dynamic_cast<const ValidationError*>(&e))
    row.status = "validation_error";
  else if (dynamic_cast<const IoError*>(&e))
    row.status = "io_error";
  else
    row.status = "error";
  return row;
}

double mean_risk(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& labels) {
  return (pred - labels).colwise().norm().mean();
}

Eigen::MatrixXd pipeline_predict(const PipelineModel& model, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(model.D(), x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) out.col(i) = predict(model, x.col(i));
  return out;
}

Eigen::MatrixXd target_values(const Target& f, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(f.D, x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) out.col(i) = f(x.col(i));
  return out;
}

double sup_error(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  return pred.cols() ? (pred - truth).colwise().norm().maxCoeff() : 0.0;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const Eigen::MatrixXd& pts, bool keep_curves) {
  SeedOutcome out;
  const Target f = experiment_target(cfg, seed);
  TaskSpec task{f, SamplerSpec::unit_cube(), cfg.noise};
  const Dataset train = sample_training_set(task, cfg.n_train, split_seed(seed, Stream::sampling));
  const Dataset test = sample_training_set(task, cfg.n_test, split_seed(seed, Stream::test_sampling));
  const Eigen::MatrixXd truth = target_values(f, pts);

  int kappa = 2;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    PipelineConfig pc = cfg.pipeline;
    pc.seed = seed;
    const auto [model, report] = train_pipeline(train, pc);
    kappa = model.kappa();
    ResultRow row;
    row.seed = seed;
    row.model = "transformer";
    row.kappa = model.kappa();
    const Eigen::MatrixXd pred = pipeline_predict(model, pts);
    row.uniform_error = sup_error(pred, truth);
    row.empirical_risk_train = mean_risk(pipeline_predict(model, train.inputs), train.labels);
    row.empirical_risk_test = mean_risk(pipeline_predict(model, test.inputs), test.labels);
    row.gen_gap_estimate = std::abs(row.empirical_risk_test - row.empirical_risk_train);
    row.cond = report.cond;
    row.runtime_ms = elapsed_ms(t0);
    if (keep_curves) out.transformer_curve = pred.row(0).transpose();
    out.rows.push_back(row);
  } catch (const std::exception& e) {
    out.rows.push_back(failed_row(seed, "transformer", e));
  }

  if (!cfg.baseline) return out;
  const auto t1 = std::chrono::steady_clock::now();
  try {
    RfmConfig rc;
    rc.F = cfg.pipeline.F;
    rc.kappa = std::max(kappa, 2);
    rc.encoder = cfg.pipeline.encoder;
    rc.seed = split_seed(seed, Stream::baseline);
    const auto [model, metrics] = rfm_baseline(train, rc);
    ResultRow row;
    row.seed = seed;
    row.model = "rfm";
    row.kappa = kappa;
    const Eigen::MatrixXd pred = rfm_predict(model, pts);
    row.uniform_error = sup_error(pred, truth);
    row.empirical_risk_train = metrics.train_risk;
    row.empirical_risk_test = mean_risk(rfm_predict(model, test.inputs), test.labels);
    row.gen_gap_estimate = std::abs(row.empirical_risk_test - row.empirical_risk_train);
    row.cond = metrics.cond;
    row.runtime_ms = elapsed_ms(t1);
    if (keep_curves) out.rfm_curve = pred.row(0).transpose();
    out.rows.push_back(row);
  } catch (const std::exception& e) {
    out.rows.push_back(failed_row(seed, "rfm", e));
  }
  return out;
}

std::string svg_polyline(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, double lo, double hi,
                         const char* color) {
  std::ostringstream s;
  s << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  const Eigen::Index step = std::max<Eigen::Index>(1, xs.size() / 800);
  for (Eigen::Index i = 0; i < xs.size(); i += step) {
    const double y = std::clamp(ys(i), lo, hi);
    s << (60.0 + 720.0 * xs(i)) << ',' << (460.0 - 420.0 * (y - lo) / (hi - lo)) << ' ';
  }
  s << "\"/>\n";
  return s.str();
}

std::string plot_svg(const ExperimentConfig& cfg, const Eigen::VectorXd& xs, const Eigen::VectorXd& target,
                     const Eigen::VectorXd& transformer, const Eigen::VectorXd& rfm) {
  double lo = target.minCoeff();
  double hi = target.maxCoeff();
  const double pad = 0.25 * std::max(hi - lo, 1e-9);
  lo -= pad;
  hi += pad;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" height=\"500\">\n"
    << "  <rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n"
    << "  <rect x=\"60\" y=\"40\" width=\"720\" height=\"420\" fill=\"none\" stroke=\"#888\"/>\n"
    << "  <text x=\"60\" y=\"25\" font-family=\"sans-serif\" font-size=\"14\">" << task_kind_name(cfg.task)
    << ": target (black), transformer (blue), rfm (red)</text>\n";
  s << svg_polyline(xs, target, lo, hi, "black");
  if (transformer.size() == xs.size()) s << svg_polyline(xs, transformer, lo, hi, "#1f5fbf");
  if (rfm.size() == xs.size()) s << svg_polyline(xs, rfm, lo, hi, "#c0392b");
  s << "</svg>\n";
  return s.str();
}

}  // namespace

std::pair<RfmModel, RfmMetrics> rfm_baseline(const Dataset& data, const RfmConfig& config) {
  data.validate();
  if (data.size() < 1) throw ValidationError("rfm_baseline: dataset is empty");
  EncoderOptions opts = config.encoder;
  opts.projection_rows = static_cast<int>(std::min<std::int64_t>(data.size(), config.F));
  RfmModel model{init_encoder(data.d(), config.F, std::max(config.kappa, 2), opts, config.seed), {}};
  Eigen::MatrixXd x(opts.projection_rows + 1, data.size());
  x.row(0).setOnes();
  x.bottomRows(opts.projection_rows) = encode_batch(model.encoder, data.inputs);
  OlsSolution sol = ols_solve(x, data.labels);
  model.beta = std::move(sol.beta);
  RfmMetrics m;
  m.train_risk = mean_risk(model.beta * x, data.labels);
  m.s_max = sol.singular_values(0);
  m.s_min = sol.singular_values.minCoeff();
  m.cond = m.s_min > 0.0 ? m.s_max / m.s_min : std::numeric_limits<double>::infinity();
  return {std::move(model), m};
}

Eigen::MatrixXd rfm_predict(const RfmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  Eigen::MatrixXd out(model.beta.rows(), x.cols());
  const Eigen::Index chunk = 1024;
  for (Eigen::Index start = 0; start < x.cols(); start += chunk) {
    const Eigen::Index n = std::min(chunk, x.cols() - start);
    const Eigen::MatrixXd features = encode_batch(model.encoder, x.middleCols(start, n));
    out.middleCols(start, n) =
        (model.beta.rightCols(features.rows()) * features).colwise() + model.beta.col(0);
  }
  return out;
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "oscillatory") return TaskKind::oscillatory;
  if (name == "singular") return TaskKind::singular;
  if (name == "symmetric") return TaskKind::symmetric;
  if (name == "cellwise") return TaskKind::cellwise;
  throw ValidationError("unknown task '" + std::string(name) + "' (oscillatory, singular, symmetric, cellwise)");
}

std::string_view task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::oscillatory:
      return "oscillatory";
    case TaskKind::singular:
      return "singular";
    case TaskKind::symmetric:
      return "symmetric";
    case TaskKind::cellwise:
      return "cellwise";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ValidationError("experiment: at least one seed is required");
  if (n_train < 1 || n_test < 1) throw ValidationError("experiment: n_train and n_test must be positive");
  if (resolution < 2) throw ValidationError("experiment: resolution must be >= 2");
  if (d < 1) throw ValidationError("experiment: d must be >= 1");
  if ((task == TaskKind::oscillatory || task == TaskKind::singular) && d != 1)
    throw ValidationError("experiment: benchmark tasks are one-dimensional");
  if ((task == TaskKind::symmetric || task == TaskKind::cellwise) && kappa < 1)
    throw ValidationError("experiment: kappa must be >= 1");
  if (threads < 0) throw ValidationError("experiment: threads must be >= 0");
}

void set_experiment_option(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  if (key == "task") {
    cfg.task = parse_task_kind(v);
  } else if (key == "d") {
    cfg.d = parse_int<int>(key, v);
  } else if (key == "kappa") {
    cfg.kappa = parse_int<int>(key, v);
  } else if (key == "smoothness") {
    cfg.smoothness = parse_int<int>(key, v);
  } else if (key == "noise") {
    const double p = cfg.noise.param;
    if (v == "none")
      cfg.noise = NoiseSpec::none();
    else if (v == "gaussian")
      cfg.noise = NoiseSpec::gaussian(p);
    else if (v == "uniform")
      cfg.noise = NoiseSpec::uniform_bounded(p);
    else
      throw ValidationError("option 'noise': expected none, gaussian or uniform");
  } else if (key == "sigma") {
    const double s = parse_real(key, v);
    if (!(s >= 0.0)) throw ValidationError("option 'sigma': must be >= 0");
    cfg.noise.param = s;
  } else if (key == "n_train") {
    cfg.n_train = parse_int<std::int64_t>(key, v);
  } else if (key == "n_test") {
    cfg.n_test = parse_int<std::int64_t>(key, v);
  } else if (key == "q") {
    cfg.pipeline.q = parse_int<int>(key, v);
  } else if (key == "eps") {
    cfg.pipeline.eps = parse_real(key, v);
  } else if (key == "F") {
    cfg.pipeline.F = parse_int<int>(key, v);
  } else if (key == "c") {
    cfg.pipeline.encoder.consts.c = parse_real(key, v);
  } else if (key == "alpha") {
    cfg.pipeline.encoder.consts.alpha = parse_real(key, v);
  } else if (key == "input_map") {
    cfg.pipeline.encoder.input_map = parse_input_map(v);
  } else if (key == "seeds") {
    cfg.seeds.clear();
    for (auto field : split_fields(v)) cfg.seeds.push_back(parse_int<std::uint64_t>(key, field));
  } else if (key == "seed_count") {
    const int n = parse_int<int>(key, v);
    if (n < 1) throw ValidationError("option 'seed_count': must be >= 1");
    cfg.seeds.clear();
    for (int i = 0; i < n; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(i));
  } else if (key == "resolution") {
    cfg.resolution = parse_int<int>(key, v);
  } else if (key == "eval_lower") {
    cfg.eval_lower = parse_real(key, v);
  } else if (key == "baseline") {
    cfg.baseline = parse_bool(key, v);
  } else if (key == "out_dir") {
    cfg.out_dir = std::string(v);
  } else if (key == "threads") {
    cfg.threads = parse_int<int>(key, v);
  } else {
    throw ValidationError("unknown experiment option '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError("experiment config line " + std::to_string(line_no) + ": expected key = value");
    set_experiment_option(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  try {
    return parse_experiment_config(read_text_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string results_to_csv(const std::vector<ResultRow>& rows) {
  std::string out =
      "seed,model,kappa,uniform_error,empirical_risk_train,empirical_risk_test,gen_gap_estimate,cond,runtime_ms,"
      "status\n";
  for (const auto& r : rows) {
    out += std::to_string(r.seed) + ',' + r.model + ',' + std::to_string(r.kappa) + ',' +
           format_double(r.uniform_error) + ',' + format_double(r.empirical_risk_train) + ',' +
           format_double(r.empirical_risk_test) + ',' + format_double(r.gen_gap_estimate) + ',' +
           format_double(r.cond) + ',' + format_double(r.runtime_ms) + ',' + r.status + '\n';
  }
  return out;
}

std::vector<ResultRow> results_from_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::size_t offset = 0;
  bool header = true;
  while (offset < text.size()) {
    std::size_t nl = text.find('\n', offset);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(offset, nl - offset);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t line_start = offset;
    offset = nl + 1;
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 10) throw ParseError("results CSV: expected 10 fields", line_start);
    ResultRow r;
    try {
      r.seed = parse_int<std::uint64_t>("seed", f[0]);
      r.kappa = parse_int<int>("kappa", f[2]);
    } catch (const ValidationError& e) {
      throw ParseError(std::string("results CSV: ") + e.what(), line_start);
    }
    r.model = std::string(f[1]);
    r.uniform_error = parse_double(f[3], line_start);
    r.empirical_risk_train = parse_double(f[4], line_start);
    r.empirical_risk_test = parse_double(f[5], line_start);
    r.gen_gap_estimate = parse_double(f[6], line_start);
    r.cond = parse_double(f[7], line_start);
    r.runtime_ms = parse_double(f[8], line_start);
    r.status = std::string(f[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

Target experiment_target(const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (cfg.task) {
    case TaskKind::oscillatory:
      return bench_target(BenchFunction::oscillatory);
    case TaskKind::singular:
      return bench_target(BenchFunction::singular);
    case TaskKind::symmetric:
    case TaskKind::cellwise: {
      const CubeGrid grid(cfg.d, cfg.pipeline.q);
      Rng rng(split_seed(seed, Stream::task));
      SymmetryMap symmetry = random_symmetry(grid, cfg.kappa, rng);
      std::vector<Eigen::VectorXd> betas;
      for (int k = 1; k <= cfg.kappa; ++k) betas.push_back(Eigen::VectorXd::Constant(1, static_cast<double>(k) / cfg.kappa));
      if (cfg.task == TaskKind::cellwise) return make_cellwise_function(symmetry, betas);
      return make_symmetric_function(SymmetricSpec{std::move(symmetry), std::move(betas), 0.5 / cfg.kappa, cfg.smoothness});
    }
  }
  throw ValidationError("experiment: unknown task");
}

int worker_count(int requested, std::size_t jobs) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("NOISYUAT_THREADS")) {
      const std::string_view v(env);
      int parsed = 0;
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
      if (ec == std::errc() && ptr == v.data() + v.size() && parsed > 0) n = parsed;
    }
  }
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(n), jobs)));
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  EvalGrid eval;
  eval.resolution = cfg.resolution;
  eval.lower = cfg.eval_lower >= 0.0 ? cfg.eval_lower : (cfg.task == TaskKind::singular ? 1.0 / cfg.pipeline.q : 0.0);
  const Eigen::MatrixXd pts = eval_points(CubeGrid(cfg.d, cfg.pipeline.q), eval);
  const bool plot = !cfg.out_dir.empty() && cfg.d == 1;

  std::vector<SeedOutcome> outcomes(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) outcomes[i] = run_seed(cfg, cfg.seeds[i], pts, plot && i == 0);
  };
  const int workers = worker_count(cfg.threads, cfg.seeds.size());
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<ResultRow> rows;
  for (auto& o : outcomes) rows.insert(rows.end(), o.rows.begin(), o.rows.end());

  if (!cfg.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out_dir.string() + ": " + ec.message());
    write_text_file(cfg.out_dir / "results.csv", results_to_csv(rows));
    if (plot) {
      const Target f = experiment_target(cfg, cfg.seeds.front());
      const Eigen::VectorXd xs = pts.row(0).transpose();
      const Eigen::VectorXd truth = target_values(f, pts).row(0).transpose();
      write_text_file(cfg.out_dir / ("plot_" + std::string(task_kind_name(cfg.task)) + ".svg"),
                      plot_svg(cfg, xs, truth, outcomes.front().transformer_curve, outcomes.front().rfm_curve));
    }
  }
  return rows;
}

}  // namespace noisyuat
