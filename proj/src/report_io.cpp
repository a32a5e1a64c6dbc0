#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "oprisk/errors.hpp"
#include "oprisk/experiments.hpp"

namespace oprisk::experiments {

using nlohmann::json;

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json implied_json(const calibration::ImpliedBiResult& r) {
  return {{"bi", r.bi},           {"converged", r.converged}, {"iterations", r.iterations},
          {"residual", r.residual}, {"bucket", r.bucket},     {"target", r.target},
          {"lc", r.lc}};
}

void write_file(const std::filesystem::path& path, const std::string& body,
                std::vector<std::filesystem::path>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << body;
  if (!out) throw InputError("write failed for '" + path.string() + "'");
  written.push_back(path);
}

template <class Writer>
std::string render(Writer writer, const ExperimentReport& report) {
  std::ostringstream s;
  writer(s, report);
  return s.str();
}

}  // namespace

json report_to_json(const ExperimentReport& r) {
  json j;
  j["study"] = std::string(study_name(r.study));
  j["seed"] = r.seed;
  j["units"] = "millions";
  j["config"] = r.config;
  json summary = json::array();
  for (const auto& s : r.summary)
    summary.push_back({{"entity", s.entity},
                       {"bi", s.bi},
                       {"mean_annual_loss", s.mean_annual_loss},
                       {"analytic_mean", s.analytic_mean},
                       {"mean_standard_error", s.mean_standard_error},
                       {"var_999", s.var_999},
                       {"k_mean", s.k_mean},
                       {"k_min", s.k_min},
                       {"k_max", s.k_max},
                       {"ratio_min", s.ratio_min},
                       {"ratio_max", s.ratio_max},
                       {"windows", s.windows}});
  j["summary"] = summary;
  json series = json::array();
  for (const auto& p : r.series)
    series.push_back({{"entity", p.entity},
                      {"year", p.year},
                      {"lc", p.lc},
                      {"k_sma", p.k_sma},
                      {"ratio", p.ratio}});
  j["series"] = series;
  json boxes = json::array();
  for (const auto& b : r.boxplots)
    boxes.push_back({{"label", b.label},
                     {"parameter", b.parameter},
                     {"n", b.n},
                     {"min", b.min},
                     {"q1", b.q1},
                     {"median", b.median},
                     {"q3", b.q3},
                     {"max", b.max},
                     {"iqr", b.iqr},
                     {"whisker_low", b.whisker_low},
                     {"whisker_high", b.whisker_high},
                     {"outliers", b.outliers},
                     {"max_over_median", b.max_over_median}});
  j["boxplots"] = boxes;
  json panels = json::array();
  for (const auto& p : r.panels)
    panels.push_back({{"panel", p.panel},
                      {"unit", p.unit},
                      {"role", p.role},
                      {"bi", p.bi},
                      {"bic", p.bic},
                      {"lc", p.lc},
                      {"sma", p.sma},
                      {"lda", p.lda},
                      {"line_implied_bi", p.line_implied_bi},
                      {"bucket", p.bucket}});
  j["panels"] = panels;
  json verdicts = json::array();
  for (const auto& v : r.verdicts)
    verdicts.push_back({{"panel", v.panel},
                        {"merged_sma", v.merged_sma},
                        {"split_total", v.split_total},
                        {"verdict", v.superadditive ? "superadditive" : "subadditive"}});
  j["verdicts"] = verdicts;
  json grid = json::array();
  for (const auto& c : r.grid)
    grid.push_back({{"mu", c.mu},
                    {"sigma", c.sigma},
                    {"lambda", c.lambda},
                    {"target_var", c.target_var},
                    {"status", c.status},
                    {"result", implied_json(c.result)}});
  j["grid"] = grid;
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  j["notes"] = r.notes;
  return j;
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 8);
}

std::string report_stem(const ExperimentReport& report) {
  return std::string(study_name(report.study)) + "_seed" + std::to_string(report.seed) + "_" +
         config_hash(report.config);
}

void write_summary_csv(std::ostream& out, const ExperimentReport& r) {
  out << "seed,entity,bi,mean_annual_loss,analytic_mean,mean_standard_error,var_999,k_mean,"
         "k_min,k_max,ratio_min,ratio_max,windows\n";
  for (const auto& s : r.summary)
    out << r.seed << ',' << s.entity << ',' << g17(s.bi) << ',' << g17(s.mean_annual_loss) << ','
        << g17(s.analytic_mean) << ',' << g17(s.mean_standard_error) << ',' << g17(s.var_999)
        << ',' << g17(s.k_mean) << ',' << g17(s.k_min) << ',' << g17(s.k_max) << ','
        << g17(s.ratio_min) << ',' << g17(s.ratio_max) << ',' << s.windows << '\n';
}

void write_series_csv(std::ostream& out, const ExperimentReport& r) {
  out << "seed,entity,year,lc,k_sma,ratio\n";
  for (const auto& p : r.series)
    out << r.seed << ',' << p.entity << ',' << p.year << ',' << g17(p.lc) << ',' << g17(p.k_sma)
        << ',' << g17(p.ratio) << '\n';
}

void write_boxplot_csv(std::ostream& out, const ExperimentReport& r) {
  out << "seed,label,parameter,n,min,q1,median,q3,max,iqr,whisker_low,whisker_high,"
         "max_over_median,outliers\n";
  for (const auto& b : r.boxplots) {
    out << r.seed << ',' << b.label << ',' << g17(b.parameter) << ',' << b.n << ',' << g17(b.min)
        << ',' << g17(b.q1) << ',' << g17(b.median) << ',' << g17(b.q3) << ',' << g17(b.max)
        << ',' << g17(b.iqr) << ',' << g17(b.whisker_low) << ',' << g17(b.whisker_high) << ','
        << g17(b.max_over_median) << ',';
    // Outliers share one field, space separated.
    for (std::size_t i = 0; i < b.outliers.size(); ++i)
      out << (i ? " " : "") << g17(b.outliers[i]);
    out << '\n';
  }
}

void write_panels_csv(std::ostream& out, const ExperimentReport& r) {
  out << "panel,unit,role,bi,bic,lc,sma,lda,line_implied_bi,bucket,sma_total,verdict\n";
  for (const auto& p : r.panels) {
    const PanelVerdict* v = nullptr;
    for (const auto& cand : r.verdicts)
      if (cand.panel == p.panel) v = &cand;
    out << p.panel << ',' << p.unit << ',' << p.role << ',' << g17(p.bi) << ',' << g17(p.bic)
        << ',' << g17(p.lc) << ',' << g17(p.sma) << ',' << g17(p.lda) << ','
        << g17(p.line_implied_bi) << ',' << p.bucket << ',';
    if (v && p.role == "merged")
      out << g17(v->split_total) << ',' << (v->superadditive ? "superadditive" : "subadditive");
    else
      out << ',';
    out << '\n';
  }
}

void write_grid_csv(std::ostream& out, const ExperimentReport& r) {
  out << "mu,sigma,lambda,target_var,lc,implied_bi,bucket,converged,iterations,residual,status\n";
  for (const auto& c : r.grid)
    out << g17(c.mu) << ',' << g17(c.sigma) << ',' << g17(c.lambda) << ',' << g17(c.target_var)
        << ',' << g17(c.result.lc) << ',' << g17(c.result.bi) << ',' << c.result.bucket << ','
        << (c.result.converged ? "true" : "false") << ',' << c.result.iterations << ','
        << g17(c.result.residual) << ',' << c.status << '\n';
}

std::vector<std::filesystem::path> write_report(const ExperimentReport& report,
                                                const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw InputError("cannot create output directory '" + directory.string() + "'");
  const std::string stem = report_stem(report);
  std::vector<std::filesystem::path> written;
  write_file(directory / (stem + ".json"), report_to_json(report).dump(2) + "\n", written);
  if (!report.summary.empty())
    write_file(directory / (stem + "_summary.csv"), render(write_summary_csv, report), written);
  if (!report.series.empty())
    write_file(directory / (stem + "_series.csv"), render(write_series_csv, report), written);
  if (!report.boxplots.empty())
    write_file(directory / (stem + "_boxplot.csv"), render(write_boxplot_csv, report), written);
  if (!report.panels.empty())
    write_file(directory / (stem + "_panels.csv"), render(write_panels_csv, report), written);
  if (!report.grid.empty())
    write_file(directory / (stem + "_grid.csv"), render(write_grid_csv, report), written);
  return written;
}

}  // namespace oprisk::experiments
