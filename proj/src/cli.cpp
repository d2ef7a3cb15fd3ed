#include "gradalign/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "gradalign/alignment.hpp"
#include "gradalign/attacks.hpp"
#include "gradalign/config.hpp"
#include "gradalign/data.hpp"
#include "gradalign/gan.hpp"
#include "gradalign/report.hpp"
#include "gradalign/serialize.hpp"
#include "gradalign/theory.hpp"
#include "gradalign/training.hpp"

namespace fs = std::filesystem;

namespace gradalign {

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out = ".";
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "key = value config file");
  if (config_required) opt->required();
  cmd->add_option("--seed", args.seed, "run seed");
  cmd->add_option("--out", args.out, "output directory");
}

Config load_config(const CommonArgs& args) {
  if (args.config_path.empty()) return Config::parse("");
  return Config::load(args.config_path);
}

fs::path ensure_out(const CommonArgs& args) {
  fs::path dir(args.out);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::size_t> size_list(const Config& cfg, const std::string& key,
                                   std::vector<std::size_t> fallback) {
  if (!cfg.has(key)) return fallback;
  std::vector<std::size_t> out;
  for (double v : cfg.get_double_list(key)) {
    if (v < 1 || v != std::floor(v))
      throw ConfigError("key '" + key + "': expected positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::optional<std::pair<double, double>> clamp_of(const Config& cfg) {
  if (!cfg.has("clamp_lo") && !cfg.has("clamp_hi")) return std::nullopt;
  if (!cfg.has("clamp_lo") || !cfg.has("clamp_hi"))
    throw ConfigError("clamp_lo and clamp_hi must be set together");
  double lo = cfg.get_double("clamp_lo"), hi = cfg.get_double("clamp_hi");
  if (lo >= hi) throw ConfigError("clamp_lo must be below clamp_hi");
  return std::make_pair(lo, hi);
}

std::string stem_of(const std::string& path) {
  std::string stem = fs::path(path).stem().string();
  return stem.empty() ? path : stem;
}

// Decorrelated sub-streams of one user seed for independent purposes.
std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t purpose) {
  return mix64(seed + 0x9E3779B97F4A7C15ull * (purpose + 1));
}

int run_gen_data(const CommonArgs& args) {
  Config cfg = load_config(args);
  cfg.require_known({"dataset", "count", "dim", "images", "labels"});
  std::string dataset = cfg.get_string("dataset");
  fs::path out = ensure_out(args);
  Dataset ds;
  if (dataset == "spheres") {
    ds = sample_spheres(static_cast<std::size_t>(cfg.get_int("count")),
                        static_cast<std::size_t>(cfg.get_int("dim", 500)),
                        args.seed);
  } else if (dataset == "squares32") {
    ds = gen_squares(static_cast<std::size_t>(cfg.get_int("count")),
                     SquaresConfig{}, args.seed);
  } else if (dataset == "mnist35") {
    ds = load_mnist_idx(cfg.get_string("images"), cfg.get_string("labels"));
    ds = filter_classes(ds, {3, 5});
    ds.name = "mnist35";
  } else {
    throw ConfigError("dataset must be spheres, squares32 or mnist35");
  }
  std::string path = (out / (ds.name + ".gda")).string();
  save_dataset(ds, path);
  std::printf("wrote %s (%zu samples, n=%zu, deltas=%s)\n", path.c_str(),
              ds.count(), ds.n, ds.has_delta() ? "yes" : "no");
  return 0;
}

int run_train(const CommonArgs& args) {
  Config cfg = load_config(args);
  cfg.require_known({"dataset",   "method",        "epochs",     "batch_size",
                     "lr",        "lambda_alpha",  "eps_train",  "eta",
                     "iterations","attack_norm",   "clamp_lo",   "clamp_hi",
                     "hidden",    "per_epoch",     "dim",        "train_data",
                     "val_data",  "val_count",     "select_by",  "eps_ref",
                     "val_attack_count"});

  TrainConfig tc;
  std::string method = cfg.get_string("method", "baseline");
  if (method == "baseline")
    tc.method = Method::baseline;
  else if (method == "pgd")
    tc.method = Method::pgd;
  else if (method == "align")
    tc.method = Method::align_penalty;
  else
    throw ConfigError("method must be baseline, pgd or align");

  tc.epochs = static_cast<int>(cfg.get_int("epochs", 10));
  tc.lr = cfg.get_double("lr", 1e-4);
  tc.lambda_alpha = cfg.get_double("lambda_alpha", 0.1);
  tc.pgd.epsilon = cfg.get_double("eps_train", 0.0);
  tc.pgd.eta = cfg.get_double("eta", 0.0);
  tc.pgd.iterations = static_cast<int>(cfg.get_int("iterations", 40));
  tc.pgd.random_start = true;
  std::string norm = cfg.get_string("attack_norm", "linf");
  if (norm == "linf")
    tc.pgd.norm = Norm::inf;
  else if (norm == "l2")
    tc.pgd.norm = Norm::two;
  else
    throw ConfigError("attack_norm must be linf or l2");
  tc.pgd.clamp_range = clamp_of(cfg);
  tc.pgd.seed = derived_seed(args.seed, 1);
  tc.seed = derived_seed(args.seed, 2);
  std::string select = cfg.get_string("select_by", "eps50");
  if (select == "accuracy")
    tc.select_by = ValMetric::accuracy;
  else if (select == "eps50")
    tc.select_by = ValMetric::eps50;
  else
    throw ConfigError("select_by must be accuracy or eps50");
  tc.val_attack_count = static_cast<std::size_t>(cfg.get_int("val_attack_count", 200));

  std::size_t batch = static_cast<std::size_t>(cfg.get_int("batch_size", 50));
  std::unique_ptr<DataSource> source;
  Dataset val;
  std::string dataset_name;
  if (cfg.has("train_data")) {
    Dataset train = load_dataset(cfg.get_string("train_data"));
    dataset_name = stem_of(cfg.get_string("train_data"));
    val = load_dataset(cfg.get_string("val_data"));
    source = std::make_unique<FixedDatasetSource>(std::move(train), batch,
                                                  derived_seed(args.seed, 3));
  } else {
    std::string dataset = cfg.get_string("dataset", "spheres");
    if (dataset != "spheres")
      throw ConfigError("only the spheres dataset streams online; use train_data");
    dataset_name = "spheres";
    std::size_t dim = static_cast<std::size_t>(cfg.get_int("dim", 500));
    std::size_t per_epoch = static_cast<std::size_t>(cfg.get_int("per_epoch", 10000));
    source = std::make_unique<OnlineSpheresSource>(dim, per_epoch, batch, args.seed);
    val = sample_spheres(static_cast<std::size_t>(cfg.get_int("val_count", 200)),
                         dim, derived_seed(args.seed, 4));
  }

  double default_ref = tc.pgd.epsilon > 0.0 ? tc.pgd.epsilon : 0.005;
  tc.eps_ref = cfg.get_double("eps_ref", default_ref);

  Rng init_rng = Rng::child(derived_seed(args.seed, 5), 0);
  MlpModel init = MlpModel::make(source->dim(), size_list(cfg, "hidden", {1000, 1000}),
                                 source->class_count(), init_rng);

  TrainResult result = train_mlp(init, *source, val, tc);

  fs::path out = ensure_out(args);
  save_model(result.model, (out / "model.gam").string());
  write_history_csv(result.history, (out / "history.csv").string());

  ResultsRow row;
  row.dataset = dataset_name;
  row.method = method;
  row.seed = args.seed;
  row.eps_train = tc.method == Method::pgd ? tc.pgd.epsilon : 0.0;
  if (result.best_epoch > 0) {
    const EpochStats& best = result.history[result.best_epoch - 1];
    row.clean_accuracy = best.val_accuracy;
    row.eps50 = best.val_eps50;
    row.alpha_dx = best.val_alpha_dx;
  }
  write_results_csv({row}, (out / "results.csv").string());
  std::printf("trained %s/%s: best epoch %d, val accuracy %.9g, val eps50 %.9g\n",
              dataset_name.c_str(), method.c_str(), result.best_epoch,
              row.clean_accuracy, row.eps50);
  return 0;
}

int run_attack(const CommonArgs& args) {
  Config cfg = load_config(args);
  cfg.require_known({"model", "data", "attack", "eps_grid", "eps_ref",
                     "grid_points", "eta", "iterations", "random_start",
                     "clamp_lo", "clamp_hi", "queries", "p_init", "img_h",
                     "img_w", "sample_count"});
  MlpModel model = load_model(cfg.get_string("model"));
  Dataset ds = load_dataset(cfg.get_string("data"));
  std::size_t count = static_cast<std::size_t>(
      cfg.get_int("sample_count", static_cast<std::int64_t>(ds.count())));
  ds = ds.slice(0, std::min(count, ds.count()));

  std::string attack = cfg.get_string("attack");
  AttackKind kind;
  if (attack == "pgd-linf")
    kind = AttackKind::pgd_inf;
  else if (attack == "pgd-l2")
    kind = AttackKind::pgd_l2;
  else if (attack == "square")
    kind = AttackKind::square;
  else
    throw ConfigError("attack must be pgd-linf, pgd-l2 or square");

  std::vector<double> grid;
  if (cfg.has("eps_grid")) {
    grid = cfg.get_double_list("eps_grid");
    if (grid.empty() || grid.front() != 0.0)
      throw ConfigError("eps_grid must start at 0");
  } else {
    double ref = cfg.get_double("eps_ref");
    grid = log_grid_with_zero(
        ref / 10.0, 10.0 * ref,
        static_cast<std::size_t>(cfg.get_int("grid_points", 20)));
  }

  CurveConfig cc;
  cc.eta = cfg.get_double("eta", 0.0);
  cc.iterations = static_cast<int>(cfg.get_int("iterations", 40));
  cc.random_start = cfg.get_bool("random_start", true);
  cc.clamp_range = clamp_of(cfg);
  cc.seed = args.seed;
  cc.square_queries = static_cast<int>(cfg.get_int("queries", 5000));
  cc.p_init = cfg.get_double("p_init", 0.8);
  cc.img_h = static_cast<std::size_t>(cfg.get_int("img_h", 0));
  cc.img_w = static_cast<std::size_t>(cfg.get_int("img_w", 0));

  RobustnessCurve curve = robustness_curve(model, ds, kind, grid, cc);
  fs::path out = ensure_out(args);
  write_curve_csv(curve, (out / "curve.csv").string());

  ResultsRow row;
  row.dataset = stem_of(cfg.get_string("data"));
  row.method = attack_kind_name(kind);
  row.seed = args.seed;
  row.clean_accuracy = curve.points.front().second;
  try {
    row.eps50 = epsilon_50(curve);
  } catch (const NoCrossingError&) {
    // robust across the whole grid; eps50 stays NaN
  }
  write_results_csv({row}, (out / "results.csv").string());
  std::printf("attacked %s with %s: clean accuracy %.9g, eps50 %.9g\n",
              row.dataset.c_str(), row.method.c_str(), row.clean_accuracy,
              row.eps50);
  return 0;
}

int run_align(const CommonArgs& args) {
  Config cfg = load_config(args);
  cfg.require_known({"model", "data", "sample_count", "generator", "clamp_lo",
                     "clamp_hi"});
  MlpModel model = load_model(cfg.get_string("model"));
  Dataset ds = load_dataset(cfg.get_string("data"));
  std::size_t count = static_cast<std::size_t>(
      cfg.get_int("sample_count", static_cast<std::int64_t>(ds.count())));
  ds = ds.slice(0, std::min(count, ds.count()));

  std::string delta_source = "dataset";
  if (cfg.has("generator")) {
    MlpModel generator = load_model(cfg.get_string("generator"));
    DenseArray deltas = generate_delta(generator, ds.batch_x(0, ds.count()),
                                       ds.labels, clamp_of(cfg));
    ds.deltas.assign(deltas.data(), deltas.data() + deltas.size());
    delta_source = "generator";
  }
  if (!ds.has_delta())
    throw ConfigError("dataset carries no Δx; supply generator=path");

  AlignmentReport report = evaluate_alignment(model, ds);
  fs::path out = ensure_out(args);
  write_alignment_csv(report, (out / "alignment.csv").string());

  ResultsRow row;
  row.dataset = stem_of(cfg.get_string("data"));
  row.method = "alignment-" + delta_source;
  row.seed = args.seed;
  row.alpha_dx = report.alpha_dx_mean;
  row.alpha_x = report.alpha_x_mean;
  write_results_csv({row}, (out / "results.csv").string());
  std::printf("alignment on %s (%s deltas): alpha_dx %.9g ± %.9g, alpha_x %.9g\n",
              row.dataset.c_str(), delta_source.c_str(), report.alpha_dx_mean,
              report.alpha_dx_std, report.alpha_x_mean);
  return 0;
}

int run_gan(const CommonArgs& args) {
  Config cfg = load_config(args);
  cfg.require_known({"train_data", "dim", "per_epoch", "val_data", "val_count",
                     "batch_size", "epochs", "lr", "lambda_g", "lambda_reg",
                     "lambda_d_real", "lambda_d_adv", "hidden_g", "hidden_d",
                     "clamp_lo", "clamp_hi"});
  GanConfig gc;
  gc.epochs = static_cast<int>(cfg.get_int("epochs", 20));
  gc.lr = cfg.get_double("lr", 1e-4);
  gc.lambda_g = cfg.get_double("lambda_g", 0.3);
  gc.lambda_reg = cfg.get_double("lambda_reg", 0.5);
  gc.lambda_d_real = cfg.get_double("lambda_d_real", 1.0);
  gc.lambda_d_adv = cfg.get_double("lambda_d_adv", 0.01);
  gc.hidden_g = size_list(cfg, "hidden_g", {512, 512});
  gc.hidden_d = size_list(cfg, "hidden_d", {512, 512});
  gc.clamp_range = clamp_of(cfg);
  gc.seed = derived_seed(args.seed, 6);

  std::size_t batch = static_cast<std::size_t>(cfg.get_int("batch_size", 50));
  std::unique_ptr<DataSource> source;
  Dataset val;
  if (cfg.has("train_data")) {
    Dataset train = load_dataset(cfg.get_string("train_data"));
    val = load_dataset(cfg.get_string("val_data"));
    source = std::make_unique<FixedDatasetSource>(std::move(train), batch,
                                                  derived_seed(args.seed, 3));
  } else {
    std::size_t dim = static_cast<std::size_t>(cfg.get_int("dim", 500));
    std::size_t per_epoch = static_cast<std::size_t>(cfg.get_int("per_epoch", 10000));
    source = std::make_unique<OnlineSpheresSource>(dim, per_epoch, batch, args.seed);
    val = sample_spheres(static_cast<std::size_t>(cfg.get_int("val_count", 200)),
                         dim, derived_seed(args.seed, 4));
  }

  GanResult result = train_gan(*source, val, gc);
  fs::path out = ensure_out(args);
  save_model(result.generator, (out / "generator.gam").string());
  save_model(result.discriminator, (out / "discriminator.gam").string());
  write_gan_history_csv(result.history, (out / "gan_history.csv").string());
  const GanEpochStats& best = result.history[result.best_epoch - 1];
  std::printf("gan best epoch %d: val cos %.9g, residual norm %.9g, "
              "D clean accuracy %.9g\n",
              result.best_epoch, best.val_cos_mean, best.val_residual_mean,
              best.d_clean_accuracy);
  return 0;
}

int run_verify_theory(const CommonArgs& args, std::size_t trials) {
  Config cfg = load_config(args);
  cfg.require_known({"dim", "classes"});
  std::size_t n = static_cast<std::size_t>(cfg.get_int("dim", 10));
  std::size_t C = static_cast<std::size_t>(cfg.get_int("classes", 4));
  Theorem1Sweep sweep = theorem1_sweep(trials, n, C, args.seed);
  fs::path out = ensure_out(args);
  {
    std::string path = (out / "sweep.csv").string();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", sweep.trials,
                  sweep.max_residual, sweep.mean_residual);
    f << "trials,max_residual,mean_residual\n" << buf;
    if (!f) throw std::runtime_error("write failed for " + path);
  }
  std::printf("theorem-1 sweep: %zu in-scope pairs (%zu filtered), "
              "max relative residual %.3g\n",
              sweep.trials, sweep.filtered, sweep.max_residual);
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"gradient-alignment laboratory"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, attack_args, align_args, gan_args,
      theory_args, report_args;
  std::size_t trials = 1000;
  std::vector<std::string> run_dirs;

  add_common(app.add_subcommand("gen-data", "sample or ingest a dataset"), gen_args);
  add_common(app.add_subcommand("train", "train a classifier"), train_args);
  add_common(app.add_subcommand("attack", "robustness curve for a model"),
             attack_args);
  add_common(app.add_subcommand("align", "gradient-alignment metrics"), align_args);
  add_common(app.add_subcommand("gan", "train the residual estimator"), gan_args);
  auto* vt = app.add_subcommand("verify-theory", "randomized identity sweep");
  add_common(vt, theory_args, /*config_required=*/false);
  vt->add_option("--trials", trials, "number of in-scope pairs to measure");
  auto* rep = app.add_subcommand("report", "aggregate finished run directories");
  add_common(rep, report_args, /*config_required=*/false);
  rep->add_option("dirs", run_dirs, "run directories")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand("gen-data")) return run_gen_data(gen_args);
    if (app.got_subcommand("train")) return run_train(train_args);
    if (app.got_subcommand("attack")) return run_attack(attack_args);
    if (app.got_subcommand("align")) return run_align(align_args);
    if (app.got_subcommand("gan")) return run_gan(gan_args);
    if (app.got_subcommand("verify-theory"))
      return run_verify_theory(theory_args, trials);
    if (app.got_subcommand("report")) {
      report_runs(run_dirs, report_args.out);
      std::printf("report written to %s\n", report_args.out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}

}  // namespace gradalign
