#include "noisyuat/cli.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "noisyuat/bench.hpp"
#include "noisyuat/coarsen.hpp"
#include "noisyuat/csv.hpp"
#include "noisyuat/denoise.hpp"
#include "noisyuat/errors.hpp"
#include "noisyuat/log.hpp"
#include "noisyuat/model_io.hpp"
#include "noisyuat/regress.hpp"

namespace noisyuat {
namespace {

void print_report(std::ostream& out, const PipelineModel& model, const FitReport& r) {
  out << "kappa=" << r.kappa << " keys=" << model.clusters.key_count() << " residual_max=" << format_double(r.residual_max)
      << " s_min=" << format_double(r.s_min) << " cond=" << format_double(r.cond)
      << " beta_op_norm=" << format_double(r.beta_op_norm) << (r.constant_readout ? " constant_readout" : "") << '\n';
}

void require_well_posed(const FitReport& r) {
  if (!r.constant_readout && !(r.s_min > 1e-12 * r.s_max))
    throw NumericError("deep feature matrix is singular (s_min = " + format_double(r.s_min) + ")");
}

Eigen::VectorXd parse_point(const std::string& text) {
  const auto fields = split_fields(text);
  Eigen::VectorXd x(static_cast<Eigen::Index>(fields.size()));
  for (std::size_t i = 0; i < fields.size(); ++i) {
    try {
      x(static_cast<Eigen::Index>(i)) = parse_double(fields[i]);
    } catch (const ParseError&) {
      throw ValidationError("--x: '" + text + "' is not a comma-separated list of numbers");
    }
  }
  return x;
}

bool has_suffix(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && std::equal(suffix.rbegin(), suffix.rend(), s.rbegin());
}

struct TrainArgs {
  std::string data;
  std::string out;
  int q = 4;
  double eps = 0.1;
  int F = 1024;
  double alpha = 0.25;
  double c = 1.0;
  std::string input_map = "sphere_lift";
  std::uint64_t seed = 0;
};

struct FinetuneArgs {
  std::string model;
  std::string data;
  std::string out;
};

struct PredictArgs {
  std::string model;
  std::vector<std::string> points;
};

struct MinSamplesArgs {
  double delta = 0.1;
  std::optional<std::int64_t> qstar;
  std::optional<double> pstar;
  double sigma = 0.0;
  double L = 1.0;
  int d = 1;
  int q = 1;
  double eps = 0.1;
};

struct ScanArgs {
  std::string image;
  std::vector<int> qs;
  int hbar = 10;
  std::string csv;
  std::string superpixels;
};

struct BenchArgs {
  std::string task = "oscillatory";
  int seeds = 10;
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  int threads = 0;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const Dataset data = read_dataset_csv(a.data);
  PipelineConfig cfg;
  cfg.q = a.q;
  cfg.eps = a.eps;
  cfg.F = a.F;
  cfg.encoder.consts = {a.c, a.alpha};
  cfg.encoder.input_map = parse_input_map(a.input_map);
  cfg.seed = a.seed;
  const auto [model, report] = train_pipeline(data, cfg);
  require_well_posed(report);
  save_model(a.out, model);
  print_report(out, model, report);
  return kExitOk;
}

int cmd_finetune(const FinetuneArgs& a, std::ostream& out) {
  const PipelineModel model = load_model(a.model);
  const Dataset data = read_dataset_csv(a.data, model.grid().d());
  const auto [tuned, report] = fine_tune(model, data);
  require_well_posed(report);
  save_model(a.out, tuned);
  print_report(out, tuned, report);
  out << "retrained_parameters=" << tuned.beta.size() << '\n';
  return kExitOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const PipelineModel model = load_model(a.model);
  for (const auto& text : a.points) {
    const Eigen::VectorXd y = predict(model, parse_point(text));
    for (Eigen::Index k = 0; k < y.size(); ++k) out << (k ? "," : "") << format_double(y(k));
    out << '\n';
  }
  return kExitOk;
}

int cmd_min_samples(const MinSamplesArgs& a, std::ostream& out) {
  const CubeGrid grid(a.d, a.q);
  SamplingProfile p = SamplingProfile::uniform(grid, a.sigma, a.L, a.delta);
  if (a.qstar) p.Q_star = *a.qstar;
  if (a.pstar) p.p_star = *a.pstar;
  out << min_samples(p, grid, a.eps).n << '\n';
  return kExitOk;
}

int cmd_scan(const ScanArgs& a, std::ostream& out) {
  const GrayImage img = has_suffix(a.image, ".csv") ? load_csv_matrix(a.image) : load_pgm(a.image);
  std::vector<CoarseningReport> reports;
  for (int q : a.qs) {
    reports.push_back(coarsen_image(img, q, a.hbar));
    const auto& r = reports.back();
    out << "q=" << r.q << " hbar=" << r.hbar << " kappa=" << r.distinct << " ratio=" << format_double(r.ratio) << '\n';
    if (!a.superpixels.empty()) {
      std::filesystem::create_directories(a.superpixels);
      write_matrix_csv(std::filesystem::path(a.superpixels) / ("superpixels_q" + std::to_string(q) + ".csv"),
                       r.superpixels);
    }
  }
  if (!a.csv.empty()) write_text_file(a.csv, coarsening_csv(reports));
  return kExitOk;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  ExperimentConfig cfg = a.config.empty() ? ExperimentConfig{} : load_experiment_config(a.config);
  if (a.config.empty()) set_experiment_option(cfg, "task", a.task);
  set_experiment_option(cfg, "seed_count", std::to_string(a.seeds));
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError("--set: expected key=value, got '" + s + "'");
    set_experiment_option(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.threads > 0) cfg.threads = a.threads;
  cfg.validate();
  const auto rows = run_experiment(cfg);

  std::map<std::uint64_t, std::map<std::string, double>> by_seed;
  std::map<std::string, std::pair<double, int>> totals;
  for (const auto& r : rows) {
    out << "seed=" << r.seed << " model=" << r.model << " kappa=" << r.kappa
        << " uniform_error=" << format_double(r.uniform_error) << " status=" << r.status << '\n';
    if (r.status != "ok") continue;
    by_seed[r.seed][r.model] = r.uniform_error;
    totals[r.model].first += r.uniform_error;
    totals[r.model].second += 1;
  }
  for (const auto& [model, t] : totals)
    out << "model=" << model << " mean_uniform_error=" << format_double(t.first / t.second) << " runs=" << t.second
        << '\n';
  if (cfg.baseline) {
    int wins = 0;
    for (const auto& [seed, m] : by_seed)
      if (m.count("transformer") && m.count("rfm") && m.at("transformer") < m.at("rfm")) ++wins;
    out << "transformer_wins=" << wins << '/' << cfg.seeds.size() << '\n';
  }
  return kExitOk;
}

int cmd_validate(const std::string& dir, std::ostream& out) {
  const ModelCheck check = check_model(dir);
  out << "encoder_reproduced=" << (check.encoder_reproduced ? "true" : "false")
      << " residual_max=" << format_double(check.fit.residual_max) << " s_min=" << format_double(check.fit.s_min)
      << " cond=" << format_double(check.fit.cond) << '\n';
  for (const auto& p : check.problems) out << "problem: " << p << '\n';
  if (!check.ok()) throw NumericError("model " + dir + " failed validation");
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Denoise, route and read out: noisy-data universal approximation toolkit", "noisyuat"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Fit a model on a dataset CSV (x1..xd,y1..yD)");
  c_train->add_option("--data", train.data, "Training CSV")->required();
  c_train->add_option("--out", train.out, "Output model directory")->required();
  c_train->add_option("--q", train.q, "Cubes per axis")->check(CLI::PositiveNumber);
  c_train->add_option("--eps", train.eps, "Separation level; clusters merge below eps/8")->check(CLI::PositiveNumber);
  c_train->add_option("--F", train.F, "Hidden width")->check(CLI::Range(2, 1 << 20));
  c_train->add_option("--alpha", train.alpha, "Width-rule exponent")->check(CLI::PositiveNumber);
  c_train->add_option("--c", train.c, "Width-rule constant")->check(CLI::PositiveNumber);
  c_train->add_option("--input-map", train.input_map, "identity or sphere_lift");
  c_train->add_option("--seed", train.seed, "Master seed");

  FinetuneArgs ft;
  auto* c_ft = app.add_subcommand("finetune", "Refit the readout of a model on data from a similar task");
  c_ft->add_option("--model", ft.model, "Trained model directory")->required();
  c_ft->add_option("--data", ft.data, "New task CSV")->required();
  c_ft->add_option("--out", ft.out, "Output model directory")->required();

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "Evaluate a model at points");
  c_pr->add_option("--model", pr.model, "Model directory")->required();
  c_pr->add_option("--x", pr.points, "Point as comma-separated coordinates (repeatable)")->required();

  MinSamplesArgs ms;
  auto* c_ms = app.add_subcommand("min-samples", "Sufficient sample size for denoising to accuracy eps");
  c_ms->add_option("--delta", ms.delta, "Failure probability in (0,1]")->required();
  c_ms->add_option("--qstar", ms.qstar, "Supported cubes (default q^d)");
  c_ms->add_option("--pstar", ms.pstar, "Smallest supported-cube mass (default q^-d)");
  c_ms->add_option("--sigma", ms.sigma, "Noise scale; sigma_bar = max(1, sigma)");
  c_ms->add_option("--L", ms.L, "Lipschitz constant");
  c_ms->add_option("--d", ms.d, "Input dimension");
  c_ms->add_option("--q", ms.q, "Cubes per axis")->required();
  c_ms->add_option("--eps", ms.eps, "Target accuracy")->required();

  ScanArgs sc;
  auto* c_sc = app.add_subcommand("scan", "Count distinct coarsened superpixel values of an image");
  c_sc->add_option("--image", sc.image, "PGM (P2/P5) or CSV matrix")->required();
  c_sc->add_option("--q", sc.qs, "Superpixels per axis (comma-separated list)")->required()->delimiter(',');
  c_sc->add_option("--hbar", sc.hbar, "Quantisation lattice 1/hbar")->check(CLI::PositiveNumber);
  c_sc->add_option("--csv", sc.csv, "Write q,hbar,kappa,ratio rows here");
  c_sc->add_option("--superpixels", sc.superpixels, "Directory for per-q superpixel matrices");

  BenchArgs be;
  auto* c_be = app.add_subcommand("bench", "Multi-seed benchmark against the random-feature baseline");
  c_be->add_option("--task", be.task, "oscillatory, singular, symmetric or cellwise");
  c_be->add_option("--seeds", be.seeds, "Number of seeds (0..n-1)")->check(CLI::PositiveNumber);
  c_be->add_option("--config", be.config, "key = value experiment file");
  c_be->add_option("--set", be.sets, "Override one experiment option, key=value (repeatable)");
  c_be->add_option("--out", be.out, "Directory for results.csv and plots");
  c_be->add_option("--threads", be.threads, "Worker threads (default NOISYUAT_THREADS or all cores)");

  std::string validate_dir;
  auto* c_va = app.add_subcommand("validate", "Re-derive the encoder from the manifest seed and check the fit");
  c_va->add_option("--model", validate_dir, "Model directory")->required();

  set_warning_sink([&err](const std::string& m) { err << "warning: " << m << '\n'; });
  struct RestoreSink {
    ~RestoreSink() { set_warning_sink(nullptr); }
  } restore;

  try {
    app.parse(argc, argv);
    if (c_train->parsed()) return cmd_train(train, out);
    if (c_ft->parsed()) return cmd_finetune(ft, out);
    if (c_pr->parsed()) return cmd_predict(pr, out);
    if (c_ms->parsed()) return cmd_min_samples(ms, out);
    if (c_sc->parsed()) return cmd_scan(sc, out);
    if (c_be->parsed()) return cmd_bench(be, out);
    if (c_va->parsed()) return cmd_validate(validate_dir, out);
    return kExitValidation;
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUnexpected;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("noisyuat");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run_cli(static_cast<int>(storage.size()), argv.data(), out, err);
}

}  // namespace noisyuat
