#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gradalign/attacks.hpp"
#include "gradalign/cli.hpp"
#include "gradalign/config.hpp"
#include "gradalign/data.hpp"
#include "gradalign/model.hpp"
#include "gradalign/report.hpp"
#include "gradalign/rng.hpp"
#include "gradalign/serialize.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace gradalign;

namespace {

std::string write_text(const fs::path& dir, const std::string& name,
                       const std::string& text) {
  fs::path p = dir / name;
  std::ofstream f(p, std::ios::trunc);
  f << text;
  f.close();
  return p.string();
}

}  // namespace

TEST_SUITE("cli-report") {

TEST_CASE("config files parse keys, comments and typed values") {
  Config cfg = Config::parse(
      "# leading comment\n"
      "  lr = 0.01   # inline comment\n"
      "epochs=20\n"
      "\n"
      "method = align\n"
      "random_start = true\n"
      "grid = 0.1, 0.2,0.4\n");
  CHECK(cfg.has("lr"));
  CHECK_FALSE(cfg.has("missing"));
  CHECK(cfg.get_double("lr") == 0.01);
  CHECK(cfg.get_int("epochs") == 20);
  CHECK(cfg.get_string("method") == "align");
  CHECK(cfg.get_bool("random_start"));
  CHECK(cfg.get_double_list("grid") == std::vector<double>{0.1, 0.2, 0.4});

  // fallbacks apply only when the key is absent
  CHECK(cfg.get_double("lr", 99.0) == 0.01);
  CHECK(cfg.get_double("eta", 0.5) == 0.5);
  CHECK(cfg.get_int("batch", 50) == 50);
  CHECK(cfg.get_string("dataset", "spheres") == "spheres");
  CHECK(cfg.get_bool("verbose", false) == false);
}

TEST_CASE("malformed configs fail loudly") {
  CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("just a bare line\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("= 3\n"), ConfigError);
  CHECK_THROWS_AS(Config::load("/definitely/not/a/file.cfg"), ConfigError);

  Config cfg = Config::parse("lr = fast\nn = 2.5\nflag = maybe\nlist = 1,,3\n");
  CHECK_THROWS_AS(cfg.get_double("lr"), ConfigError);
  CHECK_THROWS_AS(cfg.get_int("n"), ConfigError);
  CHECK_THROWS_AS(cfg.get_bool("flag"), ConfigError);
  CHECK_THROWS_AS(cfg.get_double_list("list"), ConfigError);
  CHECK_THROWS_AS(cfg.get_string("absent"), ConfigError);
  CHECK_THROWS_AS(cfg.require_known({"lr", "n", "flag"}), ConfigError);
  CHECK_NOTHROW(cfg.require_known({"lr", "n", "flag", "list"}));
}

TEST_CASE("results tables round-trip including absent metrics") {
  auto dir = test_dir("results_roundtrip");
  std::vector<ResultsRow> rows(2);
  rows[0].dataset = "spheres";
  rows[0].method = "pgd";
  rows[0].seed = 7;
  rows[0].eps_train = 0.05;
  rows[0].clean_accuracy = 0.985;
  rows[0].eps50 = 0.12;
  rows[0].alpha_dx = 0.91;
  rows[0].alpha_x = 0.44;
  rows[1].dataset = "squares32";
  rows[1].method = "baseline";
  rows[1].seed = 8;
  // metrics left NaN: the writer must emit them as nan and the reader
  // must bring them back as NaN rather than zero.

  std::string path = (dir / "results.csv").string();
  write_results_csv(rows, path);
  auto back = read_results_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].dataset == "spheres");
  CHECK(back[0].method == "pgd");
  CHECK(back[0].seed == 7);
  CHECK(back[0].eps_train == 0.05);
  CHECK(back[0].clean_accuracy == 0.985);
  CHECK(back[0].eps50 == 0.12);
  CHECK(back[0].alpha_dx == 0.91);
  CHECK(back[0].alpha_x == 0.44);
  CHECK(back[1].seed == 8);
  CHECK(std::isnan(back[1].clean_accuracy));
  CHECK(std::isnan(back[1].eps50));
  CHECK(std::isnan(back[1].alpha_dx));

  std::string bad = write_text(dir, "bad.csv", "wrong,header\n1,2\n");
  CHECK_THROWS_AS(read_results_csv(bad), std::runtime_error);
  CHECK_THROWS_AS(read_results_csv((dir / "nope.csv").string()),
                  std::runtime_error);
}

TEST_CASE("the rollup averages per group and skips absent metrics") {
  const double alphas[5] = {0.128, 0.131, 0.126, 0.133, 0.129};
  std::vector<ResultsRow> rows;
  for (int i = 0; i < 5; ++i) {
    ResultsRow r;
    r.dataset = "spheres";
    r.method = "align";
    r.seed = static_cast<std::uint64_t>(i);
    r.alpha_dx = alphas[i];
    if (i < 2) r.eps50 = 0.1;  // the other three runs never measured it
    rows.push_back(r);
  }
  ResultsRow other;
  other.dataset = "squares32";
  other.method = "pgd";
  other.clean_accuracy = 0.75;
  rows.push_back(other);

  auto groups = rollup(rows);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].dataset == "spheres");  // first-appearance order
  CHECK(groups[0].method == "align");
  CHECK(groups[0].runs == 5);
  CHECK(groups[0].alpha_dx_mean == 0.12940000000000002);
  CHECK(groups[0].alpha_dx_std == 0.0027018512172212617);
  CHECK(groups[0].eps50_mean == 0.1);  // averaged over the two finite rows
  CHECK(groups[0].eps50_std == 0.0);
  CHECK(std::isnan(groups[0].clean_mean));  // no row measured it
  CHECK(groups[1].runs == 1);
  CHECK(groups[1].clean_mean == 0.75);
  CHECK(groups[1].clean_std == 0.0);  // a single value has no spread

  auto dir = test_dir("rollup_csv");
  std::string path = (dir / "rollup.csv").string();
  write_rollup_csv(groups, path);
  std::string text = read_text_file(path);
  CHECK(text.rfind("dataset,method,runs,clean_mean,clean_std,eps50_mean,"
                   "eps50_std,alpha_dx_mean,alpha_dx_std,alpha_x_mean,"
                   "alpha_x_std\n",
                   0) == 0);
}

TEST_CASE("robustness curves round-trip with their attack label") {
  RobustnessCurve curve;
  curve.attack = "pgd-linf";
  curve.points = {{0.0, 1.0}, {0.05, 0.875}, {0.1, 0.25}};
  auto dir = test_dir("curve_roundtrip");
  std::string path = (dir / "curve.csv").string();
  write_curve_csv(curve, path);

  std::string text = read_text_file(path);
  CHECK(text.rfind("# attack: pgd-linf\nepsilon,accuracy\n", 0) == 0);

  RobustnessCurve back = read_curve_csv(path);
  CHECK(back.attack == "pgd-linf");
  REQUIRE(back.points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.points[i].first == curve.points[i].first);
    CHECK(back.points[i].second == curve.points[i].second);
  }

  std::string bad = write_text(dir, "bad_curve.csv",
                               "epsilon,accuracy\n0.1,0.5,junk\n");
  CHECK_THROWS_AS(read_curve_csv(bad), std::runtime_error);
}

TEST_CASE("curve plots are deterministic self-contained svg") {
  RobustnessCurve curve;
  curve.attack = "pgd-l2";
  curve.points = {{0.0, 1.0}, {0.1, 0.9}, {0.2, 0.4}, {0.4, 0.0}};
  auto dir = test_dir("curve_svg");
  std::string p1 = (dir / "a.svg").string();
  std::string p2 = (dir / "b.svg").string();
  emit_curve_svg(curve, p1);
  emit_curve_svg(curve, p2);
  std::string s1 = read_text_file(p1);
  CHECK(s1 == read_text_file(p2));  // byte-identical across renders
  CHECK(s1.find("<svg") != std::string::npos);
  CHECK(s1.find("<polyline") != std::string::npos);
  CHECK(s1.find("pgd-l2") != std::string::npos);
  CHECK(s1.find("accuracy") != std::string::npos);

  RobustnessCurve single;
  single.points = {{0.0, 1.0}};
  CHECK_THROWS_AS(emit_curve_svg(single, p1), std::invalid_argument);
  RobustnessCurve flat;
  flat.points = {{0.1, 1.0}, {0.1, 0.5}};
  CHECK_THROWS_AS(emit_curve_svg(flat, p1), std::invalid_argument);
  CHECK_THROWS_AS(emit_curve_svg(curve, (dir / "missing" / "c.svg").string()),
                  std::runtime_error);
}

TEST_CASE("scatter points serialize under the distance headers") {
  auto dir = test_dir("scatter_csv");
  std::string path = (dir / "scatter.csv").string();
  write_scatter_csv({{0.15, 0.149}, {0.3, 0.31}}, path);
  std::string text = read_text_file(path);
  CHECK(text == "rho_lemma1,rho_attack\n0.15,0.149\n0.3,0.31\n");
}

TEST_CASE("the correlation report needs two groups and tracks linearity") {
  std::vector<CorrelationPoint> one = {{0.05, 0.2, 0.1}, {0.05, 0.3, 0.15}};
  CHECK_THROWS_AS(correlation_report(one), std::invalid_argument);
  try {
    correlation_report(one);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()) == "insufficient data");
  }

  // eps50 = alpha/2 exactly, so the pooled Pearson r must be 1.
  std::vector<CorrelationPoint> pts = {{0.05, 0.2, 0.1},
                                       {0.05, 0.3, 0.15},
                                       {0.1, 0.5, 0.25},
                                       {0.1, 0.7, 0.35}};
  CorrelationSummary sum = correlation_report(pts);
  REQUIRE(sum.groups.size() == 2);
  CHECK(sum.groups[0].eps_train == 0.05);
  CHECK(sum.groups[0].count == 2);
  CHECK(sum.groups[0].alpha_mean == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(sum.groups[0].eps50_mean == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(sum.groups[1].eps_train == 0.1);
  CHECK(sum.groups[1].alpha_mean == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(sum.pearson_all == doctest::Approx(1.0).epsilon(1e-12));

  auto dir = test_dir("correlation_csv");
  std::string path = (dir / "correlation.csv").string();
  write_correlation_csv(sum, path);
  std::string text = read_text_file(path);
  CHECK(text.find("# pearson_all: 1\n") != std::string::npos);
  CHECK(text.find("eps_train,alpha_dx_mean,eps50_mean,count\n") !=
        std::string::npos);
}

TEST_CASE("the tool rejects bad invocations with a nonzero exit") {
  auto dir = test_dir("cli_bad");
  CHECK(cli_main({}) != 0);
  CHECK(cli_main({"gen-data", "--config", "/missing.cfg",
                  "--out", dir.string()}) != 0);
  std::string cfg = write_text(dir, "bad.cfg",
                               "dataset = spheres\ncount = 4\nbogus = 1\n");
  CHECK(cli_main({"gen-data", "--config", cfg, "--out", dir.string()}) == 1);
  std::string nodelta =
      write_text(dir, "align.cfg", "model = m.gam\ndata = d.gda\n");
  CHECK(cli_main({"align", "--config", nodelta, "--out", dir.string()}) == 1);
}

TEST_CASE("datasets can be sampled from the command line") {
  auto dir = test_dir("cli_gen");
  std::string cfg =
      write_text(dir, "gen.cfg", "dataset = spheres\ncount = 12\ndim = 6\n");
  REQUIRE(cli_main({"gen-data", "--config", cfg, "--seed", "3",
                    "--out", dir.string()}) == 0);
  Dataset ds = load_dataset((dir / "spheres.gda").string());
  CHECK(ds.count() == 12);
  CHECK(ds.n == 6);
  CHECK(ds.has_delta());

  std::string sq =
      write_text(dir, "sq.cfg", "dataset = squares32\ncount = 4\n");
  REQUIRE(cli_main({"gen-data", "--config", sq, "--out", dir.string()}) == 0);
  Dataset squares = load_dataset((dir / "squares32.gda").string());
  CHECK(squares.count() == 4);
  CHECK(squares.n == 1024);
}

TEST_CASE("the identity sweep subcommand writes its summary table") {
  auto dir = test_dir("cli_theory");
  REQUIRE(cli_main({"verify-theory", "--trials", "5", "--seed", "2",
                    "--out", dir.string()}) == 0);
  std::string text = read_text_file((dir / "sweep.csv").string());
  CHECK(text.rfind("trials,max_residual,mean_residual\n5,", 0) == 0);
}

TEST_CASE("a train-attack-align-report pipeline runs end to end") {
  auto dir = test_dir("cli_pipeline");
  fs::path train_dir = dir / "run_train";
  fs::path attack_dir = dir / "run_attack";
  fs::path align_dir = dir / "run_align";
  fs::path report_dir = dir / "report";

  std::string train_cfg = write_text(dir, "train.cfg",
                                     "dataset = spheres\n"
                                     "dim = 4\n"
                                     "per_epoch = 40\n"
                                     "batch_size = 20\n"
                                     "epochs = 1\n"
                                     "lr = 0.001\n"
                                     "hidden = 8\n"
                                     "val_count = 16\n"
                                     "val_attack_count = 16\n"
                                     "iterations = 10\n"
                                     "eta = 0.05\n");
  REQUIRE(cli_main({"train", "--config", train_cfg, "--seed", "5",
                    "--out", train_dir.string()}) == 0);
  CHECK(fs::exists(train_dir / "model.gam"));
  CHECK(fs::exists(train_dir / "history.csv"));
  auto train_rows = read_results_csv((train_dir / "results.csv").string());
  REQUIRE(train_rows.size() == 1);
  CHECK(train_rows[0].dataset == "spheres");
  CHECK(train_rows[0].method == "baseline");

  // reuse the trained model against a saved dataset
  std::string gen_cfg =
      write_text(dir, "gen.cfg", "dataset = spheres\ncount = 16\ndim = 4\n");
  REQUIRE(cli_main({"gen-data", "--config", gen_cfg, "--seed", "9",
                    "--out", dir.string()}) == 0);
  std::string data_path = (dir / "spheres.gda").string();
  std::string model_path = (train_dir / "model.gam").string();

  std::string attack_cfg = write_text(dir, "attack.cfg",
                                      "model = " + model_path + "\n" +
                                      "data = " + data_path + "\n" +
                                      "attack = pgd-linf\n"
                                      "eps_grid = 0, 0.05, 0.2\n"
                                      "eta = 0.05\n"
                                      "iterations = 5\n");
  REQUIRE(cli_main({"attack", "--config", attack_cfg, "--seed", "11",
                    "--out", attack_dir.string()}) == 0);
  RobustnessCurve curve = read_curve_csv((attack_dir / "curve.csv").string());
  CHECK(curve.attack == "pgd-linf");
  REQUIRE(curve.points.size() == 3);
  CHECK(curve.points[0].first == 0.0);

  std::string align_cfg = write_text(dir, "align.cfg",
                                     "model = " + model_path + "\n" +
                                     "data = " + data_path + "\n");
  REQUIRE(cli_main({"align", "--config", align_cfg,
                    "--out", align_dir.string()}) == 0);
  CHECK(fs::exists(align_dir / "alignment.csv"));
  auto align_rows = read_results_csv((align_dir / "results.csv").string());
  REQUIRE(align_rows.size() == 1);
  CHECK(align_rows[0].method == "alignment-dataset");
  CHECK(std::isfinite(align_rows[0].alpha_dx));

  REQUIRE(cli_main({"report", train_dir.string(), attack_dir.string(),
                    align_dir.string(), "--out", report_dir.string()}) == 0);
  auto combined =
      read_results_csv((report_dir / "combined_results.csv").string());
  CHECK(combined.size() == 3);
  CHECK(fs::exists(report_dir / "rollup.csv"));
  CHECK(fs::exists(report_dir / "run_attack_curve.svg"));
  // no run supplies eps_train > 0, so no correlation table is produced
  CHECK_FALSE(fs::exists(report_dir / "correlation.csv"));
}

}  // TEST_SUITE
