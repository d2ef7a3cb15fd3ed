#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gradalign/attacks.hpp"

namespace gradalign {

// One evaluated run. Producers fill the metrics they actually measured and
// leave the rest NaN; the rollup averages each metric over the rows where
// it is present.
struct ResultsRow {
  std::string dataset;
  std::string method;
  std::uint64_t seed = 0;
  double eps_train = 0.0;
  double clean_accuracy = std::numeric_limits<double>::quiet_NaN();
  double eps50 = std::numeric_limits<double>::quiet_NaN();
  double alpha_dx = std::numeric_limits<double>::quiet_NaN();
  double alpha_x = std::numeric_limits<double>::quiet_NaN();
};

// Header: dataset,method,seed,eps_train,clean_accuracy,eps50,alpha_dx,alpha_x
void write_results_csv(const std::vector<ResultsRow>& rows, const std::string& path);
std::vector<ResultsRow> read_results_csv(const std::string& path);

// Per-(dataset, method) mean ± sample std (n−1; 0 for a single value) of
// each metric, NaN entries skipped; groups keep first-appearance order.
struct RollupRow {
  std::string dataset;
  std::string method;
  std::size_t runs = 0;
  double clean_mean = 0.0, clean_std = 0.0;
  double eps50_mean = 0.0, eps50_std = 0.0;
  double alpha_dx_mean = 0.0, alpha_dx_std = 0.0;
  double alpha_x_mean = 0.0, alpha_x_std = 0.0;
};
std::vector<RollupRow> rollup(const std::vector<ResultsRow>& rows);
void write_rollup_csv(const std::vector<RollupRow>& rows, const std::string& path);

// Header: epsilon,accuracy (plus an `# attack: <name>` comment line).
void write_curve_csv(const RobustnessCurve& curve, const std::string& path);
RobustnessCurve read_curve_csv(const std::string& path);

// Header: rho_lemma1,rho_attack.
void write_scatter_csv(const std::vector<std::pair<double, double>>& points,
                       const std::string& path);

// Deterministic, self-contained SVG of a robustness curve: fixed canvas,
// one polyline, accuracy axis pinned to [0,1]. Identical curves produce
// byte-identical files. Throws on fewer than 2 points or unwritable paths.
void emit_curve_svg(const RobustnessCurve& curve, const std::string& path);

// (ε_train, ᾱ_Δx, ε₅₀) triples from a robustness sweep.
struct CorrelationPoint {
  double eps_train = 0.0, alpha_dx = 0.0, eps50 = 0.0;
};
struct CorrelationSummary {
  // One row per distinct ε_train (ascending): mean ᾱ_Δx, mean ε₅₀, count.
  struct Group {
    double eps_train = 0.0, alpha_mean = 0.0, eps50_mean = 0.0;
    std::size_t count = 0;
  };
  std::vector<Group> groups;
  double pearson_all = 0.0;  // Pearson r of (ᾱ_Δx, ε₅₀) over every point
};
// Throws std::invalid_argument("insufficient data") with fewer than two
// distinct ε_train groups.
CorrelationSummary correlation_report(const std::vector<CorrelationPoint>& points);
void write_correlation_csv(const CorrelationSummary& summary, const std::string& path);

// Aggregates finished run directories: concatenates their results.csv files
// into <out>/combined_results.csv, writes <out>/rollup.csv, renders every
// curve.csv found directly inside a run directory to <out>/<dir>_curve.svg,
// and emits <out>/correlation.csv when at least two ε_train groups can be
// joined (one point per run directory). Pure: depends only on the inputs.
void report_runs(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace gradalign
