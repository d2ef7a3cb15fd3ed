#include "gradalign/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "gradalign/theory.hpp"

namespace fs = std::filesystem;

namespace gradalign {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    auto comma = line.find(',', pos);
    if (comma == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

double parse_field(const std::string& s) {
  if (s == "nan" || s == "-nan")
    return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

// mean ± sample std over the finite entries; NaN mean when none.
std::pair<double, double> finite_mean_std(const std::vector<double>& v) {
  std::vector<double> kept;
  for (double x : v)
    if (std::isfinite(x)) kept.push_back(x);
  if (kept.empty())
    return {std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN()};
  double m = 0.0;
  for (double x : kept) m += x;
  m /= static_cast<double>(kept.size());
  double s = 0.0;
  for (double x : kept) s += (x - m) * (x - m);
  s = kept.size() > 1 ? std::sqrt(s / static_cast<double>(kept.size() - 1)) : 0.0;
  return {m, s};
}

}  // namespace

void write_results_csv(const std::vector<ResultsRow>& rows, const std::string& path) {
  auto f = open_out(path);
  f << "dataset,method,seed,eps_train,clean_accuracy,eps50,alpha_dx,alpha_x\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%llu,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  static_cast<unsigned long long>(r.seed), r.eps_train,
                  r.clean_accuracy, r.eps50, r.alpha_dx, r.alpha_x);
    f << r.dataset << ',' << r.method << buf;
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

std::vector<ResultsRow> read_results_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line) ||
      line != "dataset,method,seed,eps_train,clean_accuracy,eps50,alpha_dx,alpha_x")
    throw std::runtime_error(path + ": unexpected results header");
  std::vector<ResultsRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 8)
      throw std::runtime_error(path + ": malformed results row '" + line + "'");
    ResultsRow r;
    r.dataset = fields[0];
    r.method = fields[1];
    r.seed = std::stoull(fields[2]);
    r.eps_train = parse_field(fields[3]);
    r.clean_accuracy = parse_field(fields[4]);
    r.eps50 = parse_field(fields[5]);
    r.alpha_dx = parse_field(fields[6]);
    r.alpha_x = parse_field(fields[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RollupRow> rollup(const std::vector<ResultsRow>& rows) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const ResultsRow*>> groups;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.dataset, r.method);
    auto [it, inserted] = groups.emplace(key, std::vector<const ResultsRow*>{});
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<RollupRow> out;
  for (const auto& key : order) {
    const auto& members = groups[key];
    RollupRow g;
    g.dataset = key.first;
    g.method = key.second;
    g.runs = members.size();
    auto collect = [&](auto field) {
      std::vector<double> v;
      for (const ResultsRow* r : members) v.push_back(r->*field);
      return finite_mean_std(v);
    };
    std::tie(g.clean_mean, g.clean_std) = collect(&ResultsRow::clean_accuracy);
    std::tie(g.eps50_mean, g.eps50_std) = collect(&ResultsRow::eps50);
    std::tie(g.alpha_dx_mean, g.alpha_dx_std) = collect(&ResultsRow::alpha_dx);
    std::tie(g.alpha_x_mean, g.alpha_x_std) = collect(&ResultsRow::alpha_x);
    out.push_back(std::move(g));
  }
  return out;
}

void write_rollup_csv(const std::vector<RollupRow>& rows, const std::string& path) {
  auto f = open_out(path);
  f << "dataset,method,runs,clean_mean,clean_std,eps50_mean,eps50_std,"
       "alpha_dx_mean,alpha_dx_std,alpha_x_mean,alpha_x_std\n";
  char buf[320];
  for (const auto& g : rows) {
    std::snprintf(buf, sizeof buf, ",%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  g.runs, g.clean_mean, g.clean_std, g.eps50_mean, g.eps50_std,
                  g.alpha_dx_mean, g.alpha_dx_std, g.alpha_x_mean, g.alpha_x_std);
    f << g.dataset << ',' << g.method << buf;
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

void write_curve_csv(const RobustnessCurve& curve, const std::string& path) {
  auto f = open_out(path);
  f << "# attack: " << curve.attack << "\n";
  f << "epsilon,accuracy\n";
  char buf[96];
  for (const auto& [eps, acc] : curve.points) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", eps, acc);
    f << buf;
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

RobustnessCurve read_curve_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  RobustnessCurve curve;
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("# attack: ", 0) == 0) {
      curve.attack = line.substr(10);
      continue;
    }
    if (line.empty() || line == "epsilon,accuracy") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2)
      throw std::runtime_error(path + ": malformed curve row '" + line + "'");
    curve.points.emplace_back(parse_field(fields[0]), parse_field(fields[1]));
  }
  return curve;
}

void write_scatter_csv(const std::vector<std::pair<double, double>>& points,
                       const std::string& path) {
  auto f = open_out(path);
  f << "rho_lemma1,rho_attack\n";
  char buf[96];
  for (const auto& [a, b] : points) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", a, b);
    f << buf;
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

void emit_curve_svg(const RobustnessCurve& curve, const std::string& path) {
  if (curve.points.size() < 2)
    throw std::invalid_argument("emit_curve_svg: need at least 2 points");
  const double W = 640, H = 420;
  const double x0 = 70, x1 = 610, y0 = 380, y1 = 20;  // plot rectangle
  double emin = curve.points.front().first, emax = curve.points.back().first;
  if (emax <= emin) throw std::invalid_argument("emit_curve_svg: degenerate ε span");

  auto px = [&](double eps) { return x0 + (eps - emin) / (emax - emin) * (x1 - x0); };
  auto py = [&](double acc) { return y0 + acc * (y1 - y0); };
  char buf[160];
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
         "viewBox=\"0 0 640 420\">\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                x0, y1, x1 - x0, y0 - y1);
  svg << buf;
  // 5 ticks per axis with %.6g labels.
  for (int t = 0; t <= 4; ++t) {
    double fe = emin + (emax - emin) * t / 4.0;
    double fx = px(fe);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.6g\" y1=\"380\" x2=\"%.6g\" y2=\"386\" "
                  "stroke=\"black\"/>\n",
                  fx, fx);
    svg << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.6g\" y=\"400\" font-size=\"12\" "
                  "text-anchor=\"middle\">%.6g</text>\n",
                  fx, fe);
    svg << buf;
    double fa = t / 4.0;
    double fy = py(fa);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"64\" y1=\"%.6g\" x2=\"70\" y2=\"%.6g\" "
                  "stroke=\"black\"/>\n",
                  fy, fy);
    svg << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"58\" y=\"%.6g\" font-size=\"12\" "
                  "text-anchor=\"end\">%.6g</text>\n",
                  fy + 4, fa);
    svg << buf;
  }
  svg << "<text x=\"340\" y=\"416\" font-size=\"13\" text-anchor=\"middle\">"
         "epsilon</text>\n";
  svg << "<text x=\"16\" y=\"200\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 16 200)\">accuracy</text>\n";
  svg << "<text x=\"340\" y=\"14\" font-size=\"13\" text-anchor=\"middle\">"
      << curve.attack << "</text>\n";
  svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.6g,%.6g", i ? " " : "",
                  px(curve.points[i].first), py(curve.points[i].second));
    svg << buf;
  }
  svg << "\"/>\n</svg>\n";
  (void)W;
  (void)H;

  auto f = open_out(path);
  f << svg.str();
  if (!f) throw std::runtime_error("write failed for " + path);
}

CorrelationSummary correlation_report(const std::vector<CorrelationPoint>& points) {
  std::map<double, std::vector<const CorrelationPoint*>> by_eps;
  for (const auto& p : points) by_eps[p.eps_train].push_back(&p);
  if (by_eps.size() < 2) throw std::invalid_argument("insufficient data");
  CorrelationSummary out;
  for (const auto& [eps, members] : by_eps) {
    CorrelationSummary::Group g;
    g.eps_train = eps;
    g.count = members.size();
    for (const CorrelationPoint* p : members) {
      g.alpha_mean += p->alpha_dx;
      g.eps50_mean += p->eps50;
    }
    g.alpha_mean /= static_cast<double>(g.count);
    g.eps50_mean /= static_cast<double>(g.count);
    out.groups.push_back(g);
  }
  std::vector<double> alphas, eps50s;
  for (const auto& p : points) {
    alphas.push_back(p.alpha_dx);
    eps50s.push_back(p.eps50);
  }
  out.pearson_all = pearson(alphas, eps50s);
  return out;
}

void write_correlation_csv(const CorrelationSummary& summary, const std::string& path) {
  auto f = open_out(path);
  char buf[160];
  std::snprintf(buf, sizeof buf, "# pearson_all: %.9g\n", summary.pearson_all);
  f << buf << "eps_train,alpha_dx_mean,eps50_mean,count\n";
  for (const auto& g : summary.groups) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%zu\n", g.eps_train,
                  g.alpha_mean, g.eps50_mean, g.count);
    f << buf;
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

void report_runs(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<ResultsRow> combined;
  std::vector<CorrelationPoint> corr;
  for (const auto& dir : run_dirs) {
    fs::path results = fs::path(dir) / "results.csv";
    CorrelationPoint point;
    bool have_alpha = false, have_eps50 = false, have_eps_train = false;
    if (fs::exists(results)) {
      for (auto& row : read_results_csv(results.string())) {
        if (!have_eps_train && row.eps_train > 0.0) {
          point.eps_train = row.eps_train;
          have_eps_train = true;
        }
        if (!have_alpha && std::isfinite(row.alpha_dx)) {
          point.alpha_dx = row.alpha_dx;
          have_alpha = true;
        }
        if (!have_eps50 && std::isfinite(row.eps50)) {
          point.eps50 = row.eps50;
          have_eps50 = true;
        }
        combined.push_back(std::move(row));
      }
    }
    if (have_alpha && have_eps50 && have_eps_train) corr.push_back(point);
    fs::path curve_path = fs::path(dir) / "curve.csv";
    if (fs::exists(curve_path)) {
      RobustnessCurve curve = read_curve_csv(curve_path.string());
      std::string stem = fs::path(dir).filename().string();
      if (stem.empty()) stem = "run";
      emit_curve_svg(curve, (fs::path(out_dir) / (stem + "_curve.svg")).string());
    }
  }
  write_results_csv(combined, (fs::path(out_dir) / "combined_results.csv").string());
  write_rollup_csv(rollup(combined), (fs::path(out_dir) / "rollup.csv").string());
  try {
    CorrelationSummary summary = correlation_report(corr);
    write_correlation_csv(summary, (fs::path(out_dir) / "correlation.csv").string());
  } catch (const std::invalid_argument&) {
    // fewer than two ε_train groups: no correlation table for this set
  }
}

}  // namespace gradalign
