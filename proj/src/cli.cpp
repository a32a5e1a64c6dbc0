#include "oprisk/cli.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "oprisk/calibration.hpp"
#include "oprisk/errors.hpp"
#include "oprisk/experiments.hpp"
#include "oprisk/ingest.hpp"
#include "oprisk/lda.hpp"
#include "oprisk/sma.hpp"

namespace oprisk::cli {

using Row = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;
constexpr double M = sma::kUnitsPerMillion;

struct Globals {
  std::string format = "table";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out;
};

std::uint64_t parse_seed_text(const std::string& text, const char* what) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw InputError(std::string(what) + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

// --seed, then the config, then OPRISK_SEED, then the built-in default.
std::uint64_t resolve_seed(const Globals& g, std::optional<std::uint64_t> from_config) {
  if (g.seed) return *g.seed;
  if (from_config) return *from_config;
  if (const char* env = std::getenv("OPRISK_SEED"); env && *env)
    return parse_seed_text(env, "OPRISK_SEED");
  return kDefaultSeed;
}

std::string cell_text(const Row& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_null()) return "-";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    const double d = v.get<double>();
    if (!std::isfinite(d)) return d > 0 ? "inf" : (d < 0 ? "-inf" : "nan");
    if (std::fabs(d) >= 1000.0) return grouped(d, 2);
    if (d == std::floor(d)) return fmt::format("{:.0f}", d);
    return fmt::format("{:.6g}", d);
  }
  return v.dump();
}

std::string csv_text(const Row& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  if (v.is_number_float()) return fmt::format("{:.17g}", v.get<double>());
  if (v.is_null()) return "";
  return v.dump();
}

// One record: key/value lines in a table, an object in JSON.
void emit_record(const Row& rec, const std::string& format, std::ostream& out) {
  if (format == "json") {
    out << rec.dump(2) << '\n';
    return;
  }
  if (format == "csv") {
    std::string head, vals;
    bool first = true;
    for (const auto& [k, v] : rec.items()) {
      head += (first ? "" : ",") + k;
      vals += (first ? "" : ",") + csv_text(v);
      first = false;
    }
    out << head << '\n' << vals << '\n';
    return;
  }
  std::size_t width = 0;
  for (const auto& [k, v] : rec.items()) width = std::max(width, k.size());
  for (const auto& [k, v] : rec.items())
    out << fmt::format("{:<{}}  {}\n", k, width, cell_text(v));
}

// Several records sharing the first record's columns.
void emit_rows(const std::vector<Row>& rows, const std::string& format, std::ostream& out) {
  if (format == "json") {
    Row arr = Row::array();
    for (const auto& r : rows) arr.push_back(r);
    out << arr.dump(2) << '\n';
    return;
  }
  if (rows.empty()) return;
  std::vector<std::string> cols;
  for (const auto& [k, v] : rows.front().items()) cols.push_back(k);
  if (format == "csv") {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < cols.size(); ++i)
        out << (i ? "," : "") << (r.contains(cols[i]) ? csv_text(r.at(cols[i])) : "");
      out << '\n';
    }
    return;
  }
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width;
  for (const auto& c : cols) width.push_back(c.size());
  for (const auto& r : rows) {
    std::vector<std::string> line;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      line.push_back(r.contains(cols[i]) ? cell_text(r.at(cols[i])) : "");
      width[i] = std::max(width[i], line.back().size());
    }
    cells.push_back(std::move(line));
  }
  for (std::size_t i = 0; i < cols.size(); ++i)
    out << fmt::format("{}{:>{}}", i ? "  " : "", cols[i], width[i]);
  out << '\n';
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      out << fmt::format("{}{:>{}}", i ? "  " : "", line[i], width[i]);
    out << '\n';
  }
}

double parse_number(std::string_view s, const std::string& what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw InputError(what + ": bad number '" + std::string(s) + "'");
  return v;
}

// "lambda:family:p1,p2[,p3]"
lda::RiskCell parse_cell_flag(const std::string& text) {
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? a : text.find(':', a + 1);
  if (b == std::string::npos)
    throw InputError("--cell '" + text + "': expected lambda:family:p1,p2");
  const double lambda = parse_number(std::string_view(text).substr(0, a), "--cell lambda");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InputError("--cell '" + text + "': lambda must be >= 0");
  const auto family = parse_family(text.substr(a + 1, b - a - 1));
  std::array<double, 3> params{};
  std::size_t n = 0;
  std::string_view rest = std::string_view(text).substr(b + 1);
  while (!rest.empty() || n == 0) {
    const auto comma = rest.find(',');
    if (n == params.size()) throw InputError("--cell '" + text + "': too many parameters");
    params[n++] = parse_number(rest.substr(0, comma), "--cell parameter");
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  const auto needed = static_cast<std::size_t>(parameter_count(family));
  const bool optional_location = family == SeverityFamily::GPD && n == 3;
  if (n != needed && !optional_location)
    throw InputError("--cell '" + text + "': " + std::string(family_name(family)) + " takes " +
                     std::to_string(needed) + " parameters");
  return {FrequencySpec::poisson(lambda), SeveritySpec::make(family, params)};
}

std::optional<ingest::ConfigDocument> maybe_config(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return ingest::load_config(path);
}

lda::CompoundModel resolve_model(const std::vector<std::string>& cells,
                                 const std::optional<ingest::ConfigDocument>& cfg) {
  if (!cells.empty()) {
    lda::CompoundModel model;
    for (const auto& c : cells) model.cells.push_back(parse_cell_flag(c));
    return model;
  }
  if (cfg && cfg->model) return *cfg->model;
  throw InputError("no model: pass --cell or a --config with model.cells");
}

std::string describe_model(const lda::CompoundModel& model) {
  std::string s;
  for (const auto& c : model.cells)
    s += (s.empty() ? "" : " + ") + fmt::format("Poisson({})-{}", c.frequency.lambda,
                                                c.severity.describe());
  return s;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

// ---------------------------------------------------------------------------

struct SmaArgs {
  std::string config;
  std::optional<double> bi;
  std::vector<double> bi_components;
  std::optional<double> lc;
  std::string losses;
  std::vector<double> thresholds;
  std::optional<int> start_year;
  std::optional<int> end_year;
  bool allow_short = false;
};

int cmd_sma(const SmaArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const auto cfg = maybe_config(a.config);
  ingest::SmaSection s = cfg && cfg->sma ? *cfg->sma : ingest::SmaSection{};
  if (a.bi) {
    s.bi = a.bi;
    s.bi_components.reset();
  }
  if (!a.bi_components.empty()) {
    if (a.bi) throw InputError("sma: give --bi or --bi-components, not both");
    s.bi_components = sma::BiComponents{a.bi_components[0], a.bi_components[1],
                                        a.bi_components[2]};
    s.bi.reset();
  }
  if (a.lc) {
    s.lc = a.lc;
    s.losses.reset();
  }
  if (!a.losses.empty()) {
    if (a.lc) throw InputError("sma: give --lc or --losses, not both");
    s.losses = a.losses;
    s.lc.reset();
  }
  if (!a.thresholds.empty()) s.thresholds = {a.thresholds[0], a.thresholds[1]};
  if (!(s.thresholds.low > 0.0 && s.thresholds.low < s.thresholds.high))
    throw InputError("sma: thresholds require 0 < low < high");

  double bi = 0.0;
  if (s.bi)
    bi = *s.bi;
  else if (s.bi_components)
    bi = sma::business_indicator(*s.bi_components);
  else
    throw InputError("sma: need --bi, --bi-components or sma.bi in the config");

  Row rec;
  double lc = 0.0;
  if (s.lc) {
    lc = *s.lc;
  } else if (s.losses) {
    const auto csv = ingest::load_loss_csv(*s.losses);
    print_warnings(csv.warnings, err);
    for (const auto& e : csv.errors) err << "error: " << *s.losses << ":" << e.line << ": "
                                         << e.message << '\n';
    if (!csv.ok())
      throw InputError("sma: " + std::to_string(csv.errors.size()) + " invalid row(s) in " +
                       *s.losses);
    if (csv.events.empty() && !(a.start_year && a.end_year))
      throw InputError("sma: loss file has no events; pass --start-year and --end-year");
    int lo = 0, hi = 0;
    if (!csv.events.empty()) {
      const auto [mn, mx] = std::minmax_element(
          csv.events.begin(), csv.events.end(), [](const auto& x, const auto& y) {
            return x.occurrence_date.year < y.occurrence_date.year;
          });
      hi = mx->occurrence_date.year;
      lo = std::max(mn->occurrence_date.year, hi - 9);
    }
    const int start = a.start_year.value_or(lo);
    const int end = a.end_year.value_or(a.start_year ? std::max(start, hi) : hi);
    const auto records = ingest::annualize(csv.events, start, end);
    sma::LossComponentOptions opts;
    opts.thresholds = s.thresholds;
    opts.enforce_history_length = !a.allow_short;
    lc = sma::loss_component(records, opts);
    rec["start_year"] = start;
    rec["end_year"] = end;
  } else {
    throw InputError("sma: need --lc, --losses or sma.lc / sma.losses in the config");
  }
  const auto k = sma::k_sma(bi, lc);
  Row result;
  result["bi"] = bi;
  result["bucket"] = k.bucket;
  result["bic"] = k.bic;
  result["lc"] = k.lc;
  result["k_sma"] = k.k_sma;
  for (const auto& [key, v] : rec.items()) result[key] = v;
  emit_record(result, g.format, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct LdaArgs {
  std::string config;
  std::vector<std::string> cells;
  std::string method;
  std::vector<double> quantiles;
  std::optional<std::size_t> years;
  std::optional<double> grid_step;
  std::optional<std::size_t> grid_size;
  std::optional<std::size_t> fft_pad;
};

int cmd_lda(const LdaArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const auto cfg = maybe_config(a.config);
  const auto model = resolve_model(a.cells, cfg);
  model.validate();
  ingest::LdaSection s = cfg && cfg->lda ? *cfg->lda : ingest::LdaSection{};
  if (!a.method.empty()) s.method = a.method;
  if (!a.quantiles.empty()) s.quantiles = a.quantiles;
  if (a.years) s.years = *a.years;
  if (a.grid_step) s.grid_step = a.grid_step;
  if (a.grid_size) s.grid_size = *a.grid_size;
  if (a.fft_pad) s.fft_pad = *a.fft_pad;
  for (double q : s.quantiles)
    if (!(q > 0.0 && q < 1.0)) throw InputError("lda: quantiles must be in (0, 1)");
  if (s.years == 0) throw InputError("lda: --years must be >= 1");

  std::vector<Row> rows;
  const double mean = model.mean_annual_loss() / M;
  if (s.method == "sla") {
    if (model.cells.size() != 1)
      throw InputError("lda: the sla method takes a single frequency/severity cell");
    for (double q : s.quantiles) {
      const auto r = lda::sla_var(q, model.cells[0].frequency, model.cells[0].severity);
      if (!r.mean_correction_defined)
        err << "warning: severity mean is infinite; SLA mean correction dropped\n";
      Row row;
      row["method"] = "sla";
      row["quantile"] = q;
      row["var"] = r.var / M;
      row["quantile_term"] = r.quantile_term / M;
      row["mean_term"] = r.mean_term / M;
      rows.push_back(std::move(row));
    }
  } else if (s.method == "mc") {
    const auto seed = resolve_seed(g, cfg ? cfg->seed : std::nullopt);
    const auto totals = lda::simulate_annual_totals(model, s.years, RngStream(seed, 0), g.threads);
    for (double q : s.quantiles) {
      const auto band = lda::var_empirical_band(totals, q);
      Row row;
      row["method"] = "mc";
      row["quantile"] = q;
      row["var"] = band.var / M;
      row["ci_lower"] = band.lower / M;
      row["ci_upper"] = band.upper / M;
      row["confidence"] = band.confidence;
      row["years"] = s.years;
      row["seed"] = seed;
      rows.push_back(std::move(row));
    }
  } else {
    if (s.grid_size < 2) throw InputError("lda: --grid-size must be >= 2");
    double step = 0.0;
    if (s.grid_step) {
      step = *s.grid_step;
    } else {
      const double em = model.mean_annual_loss();
      if (!std::isfinite(em))
        throw DomainError("lda: the default grid step needs a finite mean; pass --grid-step");
      // The grid spans twenty times the mean annual loss.
      step = 20.0 * em / static_cast<double>(s.grid_size);
    }
    lda::AggregatePmf pmf;
    if (s.method == "panjer") {
      pmf = lda::panjer_aggregate(model, step, s.grid_size);
    } else {
      lda::FftOptions opts;
      opts.pad_factor = s.fft_pad;
      pmf = lda::fft_aggregate(model, step, s.grid_size, opts);
    }
    for (double q : s.quantiles) lda::check_tail_coverage(pmf, q);
    print_warnings(pmf.warnings, err);
    for (double q : s.quantiles) {
      Row row;
      row["method"] = s.method;
      row["quantile"] = q;
      row["var"] = lda::quantile_from_pmf(pmf, q) / M;
      row["grid_step"] = step / M;
      row["grid_size"] = s.grid_size;
      row["truncation_mass"] = pmf.truncation_mass;
      if (s.method == "fft") row["padding_mass"] = pmf.padding_mass;
      rows.push_back(std::move(row));
    }
  }
  for (auto& r : rows) r["mean_annual_loss"] = mean;
  if (g.format == "table") out << "model: " << describe_model(model) << '\n';
  emit_rows(rows, g.format, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ImpliedArgs {
  std::string config;
  std::vector<std::string> cells;
  std::optional<double> target;
  std::optional<double> lc;
  std::optional<double> alpha;
  std::vector<double> thresholds;
};

int cmd_implied_bi(const ImpliedArgs& a, const Globals& g, std::ostream& out,
                   std::ostream& err) {
  const bool direct = a.target || a.lc;
  const auto cfg = maybe_config(a.config);
  const bool model_mode = !a.cells.empty() || (cfg && cfg->model);
  if (direct && !a.cells.empty())
    throw InputError("implied-bi: give either --target-var/--lc or a model, not both");
  if (direct && !(a.target && a.lc))
    throw InputError("implied-bi: --target-var and --lc go together");
  if (!direct && !model_mode)
    throw InputError("implied-bi: need --target-var and --lc, or a model (--cell / --config)");

  calibration::ImpliedBiResult r;
  if (direct) {
    r = calibration::implied_bi(*a.target, *a.lc);
  } else {
    const auto model = resolve_model(a.cells, cfg);
    model.validate();
    if (model.cells.size() != 1)
      throw InputError("implied-bi: model mode takes a single frequency/severity cell");
    const double alpha = a.alpha.value_or(cfg && cfg->alpha ? *cfg->alpha : 0.999);
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("implied-bi: alpha must be in (0, 1)");
    sma::LossThresholds t = cfg && cfg->sma ? cfg->sma->thresholds : sma::LossThresholds{};
    if (!a.thresholds.empty()) t = {a.thresholds[0], a.thresholds[1]};
    r = calibration::implied_bi_from_model(alpha, model.cells[0].frequency,
                                           model.cells[0].severity, t);
  }
  Row rec;
  rec["target_var"] = r.target;
  rec["lc"] = r.lc;
  rec["bi"] = r.bi;
  rec["bic"] = sma::bic(r.bi).bic;
  rec["bucket"] = r.bucket;
  rec["converged"] = r.converged;
  rec["iterations"] = r.iterations;
  rec["residual"] = r.residual;
  emit_record(rec, g.format, out);
  if (!r.converged) {
    err << "error: implied-bi did not converge (residual " << r.residual << " after "
        << r.iterations << " iterations)\n";
    return kExitDomain;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
  std::string study;
  std::string config;
};

void print_report(const experiments::ExperimentReport& r, const std::string& format,
                  std::ostream& out) {
  using experiments::Study;
  if (format == "json") return;  // the caller prints the full report
  std::vector<Row> rows;
  switch (r.study) {
    case Study::Instability:
      for (const auto& s : r.summary) {
        Row row;
        row["entity"] = s.entity;
        row["mean_annual_loss"] = s.mean_annual_loss;
        row["analytic_mean"] = s.analytic_mean;
        row["var_999"] = s.var_999;
        row["k_mean"] = s.k_mean;
        row["ratio_min"] = s.ratio_min;
        row["ratio_max"] = s.ratio_max;
        row["max_over_min"] = s.k_min > 0 ? s.k_max / s.k_min : 0.0;
        rows.push_back(std::move(row));
      }
      break;
    case Study::SigmaSensitivity:
      for (const auto& b : r.boxplots) {
        Row row;
        row["sigma"] = b.parameter;
        row["q1"] = b.q1;
        row["median"] = b.median;
        row["q3"] = b.q3;
        row["iqr"] = b.iqr;
        row["whisker_low"] = b.whisker_low;
        row["whisker_high"] = b.whisker_high;
        row["outliers"] = b.outliers.size();
        row["max_over_median"] = b.max_over_median;
        rows.push_back(std::move(row));
      }
      break;
    case Study::Superadditivity:
      for (const auto& p : r.panels) {
        Row row;
        row["panel"] = p.panel;
        row["unit"] = p.unit;
        row["bi"] = p.bi;
        row["bic"] = p.bic;
        row["lc"] = p.lc;
        row["sma"] = p.sma;
        row["lda"] = p.lda > 0.0 ? Row(p.lda) : Row();
        rows.push_back(std::move(row));
      }
      break;
    case Study::ImpliedBiGrid:
      for (const auto& c : r.grid) {
        Row row;
        row["mu"] = c.mu;
        row["sigma"] = c.sigma;
        row["target_var"] = c.target_var;
        row["lc"] = c.result.lc;
        row["implied_bi"] = c.result.bi;
        row["bucket"] = c.result.bucket;
        row["status"] = c.status;
        rows.push_back(std::move(row));
      }
      break;
  }
  emit_rows(rows, format, out);
  if (format != "table") return;
  for (const auto& v : r.verdicts)
    out << fmt::format("{}: merged {} vs split {} -> {}\n", v.panel, grouped(v.merged_sma),
                       grouped(v.split_total), v.superadditive ? "superadditive" : "subadditive");
  for (const auto& c : r.checks)
    out << fmt::format("[{}] {}: {}\n", c.passed ? "pass" : "fail", c.name, c.detail);
  for (const auto& n : r.notes) out << "note: " << n << '\n';
}

int cmd_experiment(const ExperimentArgs& a, const Globals& g, std::ostream& out,
                   std::ostream&) {
  const auto study = experiments::parse_study(a.study);
  const auto cfg = maybe_config(a.config);
  const nlohmann::json block = cfg && cfg->experiment ? *cfg->experiment : nlohmann::json();
  auto ec = experiments::config_from_json(study, block);
  std::optional<std::uint64_t> config_seed;
  if (block.is_object() && block.contains("seed"))
    config_seed = ec.seed;
  else if (cfg)
    config_seed = cfg->seed;
  ec.seed = resolve_seed(g, config_seed);
  if (g.threads) ec.threads = g.threads;
  const auto report = experiments::run(ec);
  const auto paths = experiments::write_report(report, g.out.empty() ? "results" : g.out);
  if (g.format == "json") {
    auto j = experiments::report_to_json(report);
    j["artifacts"] = nlohmann::json::array();
    for (const auto& p : paths) j["artifacts"].push_back(p.string());
    out << j.dump(2) << '\n';
    return kExitOk;
  }
  if (g.format == "table")
    out << fmt::format("study {} seed {}\n", experiments::study_name(report.study), report.seed);
  print_report(report, g.format, out);
  if (g.format == "table")
    for (const auto& p : paths) out << "wrote " << p.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::vector<std::string> families;
  std::optional<double> pot_threshold;
  double level = 0.05;
};

Row fit_row(const calibration::FitResult& f, const calibration::GofReport& gof) {
  Row row;
  row["family"] = std::string(family_name(f.spec.family()));
  row["parameters"] = f.spec.describe();
  row["n"] = f.n_used;
  row["log_likelihood"] = f.log_likelihood;
  row["aic"] = f.aic;
  row["bic"] = f.bic_criterion;
  row["ks"] = gof.ks_statistic;
  row["ks_critical"] = gof.ks_critical;
  row["ad"] = gof.ad_statistic;
  row["ad_critical"] = gof.ad_critical;
  row["gof_pass"] = gof.pass;
  row["converged"] = f.converged;
  return row;
}

int cmd_fit(const FitArgs& a, const Globals& g, std::ostream& out, std::ostream&) {
  const auto data = ingest::load_amounts_csv(a.data);
  std::vector<std::string> families = a.families.empty() ? std::vector<std::string>{"lognormal"}
                                                         : a.families;
  std::vector<std::pair<calibration::FitResult, calibration::GofReport>> fits;
  for (const auto& name : families) {
    auto f = calibration::fit_mle(data, parse_family(name));
    auto gof = calibration::goodness_of_fit(data, f.spec, a.level);
    fits.emplace_back(std::move(f), gof);
  }
  std::stable_sort(fits.begin(), fits.end(),
                   [](const auto& x, const auto& y) { return x.first.aic < y.first.aic; });
  std::vector<Row> rows;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    Row row;
    row["rank"] = i + 1;
    const Row fitted = fit_row(fits[i].first, fits[i].second);
    for (const auto& [k, v] : fitted.items()) row[k] = v;
    rows.push_back(std::move(row));
  }
  std::optional<Row> pot;
  if (a.pot_threshold) {
    const auto f = calibration::fit_pot_gpd(data, *a.pot_threshold);
    std::vector<double> tail;
    for (double x : data)
      if (x > *a.pot_threshold) tail.push_back(x);
    const auto gof = calibration::goodness_of_fit(tail, f.spec, a.level);
    pot = fit_row(f, gof);
    (*pot)["threshold"] = *a.pot_threshold;
  }
  if (g.format == "json") {
    Row doc;
    doc["fits"] = Row::array();
    for (auto& r : rows) doc["fits"].push_back(r);
    doc["pot"] = pot ? *pot : Row();
    out << doc.dump(2) << '\n';
    return kExitOk;
  }
  emit_rows(rows, g.format, out);
  if (pot) {
    if (g.format == "table") out << "peaks over threshold:\n";
    emit_record(*pot, g.format, out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::vector<std::string> cells;
  std::size_t years = 10;
  std::string entity = "entity-1";
  int base_year = 2000;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g, std::ostream& out, std::ostream&) {
  const auto cfg = maybe_config(a.config);
  const auto model = resolve_model(a.cells, cfg);
  model.validate();
  if (a.years == 0) throw InputError("simulate: --years must be >= 1");
  const auto seed = resolve_seed(g, cfg ? cfg->seed : std::nullopt);
  const auto records = lda::simulate_years(model, a.years, RngStream(seed, 0), g.threads);
  const auto events = ingest::records_to_events(records, a.entity, a.base_year);
  if (g.out.empty()) {
    ingest::write_loss_csv(out, events);
    return kExitOk;
  }
  std::ofstream file(g.out, std::ios::binary);
  if (!file) throw InputError("cannot write '" + g.out + "'");
  ingest::write_loss_csv(file, events);
  out << "wrote " << events.size() << " events over " << a.years << " years to " << g.out << '\n';
  return kExitOk;
}

const CLI::App* parsed_leaf(const CLI::App& app) {
  for (const auto* sub : app.get_subcommands()) return parsed_leaf(*sub);
  return &app;
}

}  // namespace

std::string grouped(double v, int decimals) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  std::string s = fmt::format("{:.{}f}", std::fabs(v), decimals);
  const auto dot = s.find('.');
  std::string head = s.substr(0, dot);
  const std::string tail = dot == std::string::npos ? "" : s.substr(dot);
  for (int i = static_cast<int>(head.size()) - 3; i > 0; i -= 3) head.insert(i, ",");
  return (v < 0 && std::stod(s) != 0.0 ? "-" : "") + head + tail;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Operational-risk capital: SMA formula, LDA models, calibration and studies"};
  app.name(args.empty() ? "oprisk" : args[0]);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"table", "json", "csv"}))
      ->capture_default_str();
  app.add_option("--seed", g.seed, "Random seed (default: OPRISK_SEED, then 42)");
  app.add_option("--threads", g.threads, "Worker threads, 0 = all cores")->capture_default_str();
  app.add_option("--out", g.out, "Output directory (experiment) or file (simulate)");

  SmaArgs sma_a;
  auto* sma_cmd = app.add_subcommand("sma", "Capital under the SMA formula");
  sma_cmd->add_option("--config", sma_a.config, "JSON config with an sma block");
  sma_cmd->add_option("--bi", sma_a.bi, "Business Indicator, millions");
  sma_cmd->add_option("--bi-components", sma_a.bi_components,
                      "Three BI addends in millions: interest,services,financial")
      ->delimiter(',')
      ->expected(3);
  sma_cmd->add_option("--lc", sma_a.lc, "Loss Component, millions");
  sma_cmd->add_option("--losses", sma_a.losses, "Loss-event CSV (amounts in base units)");
  sma_cmd->add_option("--thresholds", sma_a.thresholds, "Event thresholds low,high (base units)")
      ->delimiter(',')
      ->expected(2);
  sma_cmd->add_option("--start-year", sma_a.start_year, "First year of the loss history");
  sma_cmd->add_option("--end-year", sma_a.end_year, "Last year of the loss history");
  sma_cmd->add_flag("--allow-short-history", sma_a.allow_short,
                    "Accept loss histories outside 5-10 years");

  LdaArgs lda_a;
  auto* lda_cmd = app.add_subcommand("lda", "Annual-loss VaR of a compound Poisson model");
  lda_cmd->add_option("--config", lda_a.config, "JSON config with model and lda blocks");
  lda_cmd->add_option("--cell", lda_a.cells, "Risk cell lambda:family:p1,p2 (repeatable)");
  lda_cmd->add_option("--method", lda_a.method, "mc, panjer, fft or sla (default mc)")
      ->check(CLI::IsMember({"mc", "panjer", "fft", "sla"}));
  lda_cmd->add_option("--quantile", lda_a.quantiles, "VaR level(s), default 0.999")
      ->delimiter(',');
  lda_cmd->add_option("--years", lda_a.years, "Simulated years for mc (default 1e6)");
  lda_cmd->add_option("--grid-step", lda_a.grid_step,
                      "Grid step in base units (default 20 x mean / size)");
  lda_cmd->add_option("--grid-size", lda_a.grid_size, "Grid points (default 65536)");
  lda_cmd->add_option("--fft-pad", lda_a.fft_pad, "FFT zero-padding factor (default 2)");

  ImpliedArgs imp_a;
  auto* imp_cmd = app.add_subcommand("implied-bi", "BI at which SMA capital equals a VaR");
  imp_cmd->add_option("--target-var", imp_a.target, "Target capital, millions");
  imp_cmd->add_option("--lc", imp_a.lc, "Loss Component, millions");
  imp_cmd->add_option("--config", imp_a.config, "JSON config with a single-cell model");
  imp_cmd->add_option("--cell", imp_a.cells, "Risk cell lambda:family:p1,p2");
  imp_cmd->add_option("--alpha", imp_a.alpha, "VaR level for model mode (default 0.999)");
  imp_cmd->add_option("--thresholds", imp_a.thresholds, "Event thresholds low,high (base units)")
      ->delimiter(',')
      ->expected(2);

  ExperimentArgs exp_a;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a seeded study and write its report");
  exp_cmd->add_option("--study", exp_a.study, "instability, sigma, superadditivity, implied-bi-grid")
      ->required();
  exp_cmd->add_option("--config", exp_a.config, "JSON config with an experiment block");

  FitArgs fit_a;
  auto* fit_cmd = app.add_subcommand("fit", "Fit severity families and test goodness of fit");
  fit_cmd->add_option("--data", fit_a.data, "CSV with an amount column")->required();
  fit_cmd->add_option("--family", fit_a.families, "Families, comma separated (default lognormal)")
      ->delimiter(',');
  fit_cmd->add_option("--pot-threshold", fit_a.pot_threshold,
                      "Also fit a GPD to the excesses over this threshold");
  fit_cmd->add_option("--level", fit_a.level, "Test level: 0.10, 0.05, 0.025 or 0.01")
      ->capture_default_str();

  SimulateArgs sim_a;
  auto* sim_cmd = app.add_subcommand("simulate", "Write simulated loss events as CSV");
  sim_cmd->add_option("--config", sim_a.config, "JSON config with model.cells");
  sim_cmd->add_option("--cell", sim_a.cells, "Risk cell lambda:family:p1,p2 (repeatable)");
  sim_cmd->add_option("--years", sim_a.years, "Years to simulate")->capture_default_str();
  sim_cmd->add_option("--entity", sim_a.entity, "entity_id column value")->capture_default_str();
  sim_cmd->add_option("--base-year", sim_a.base_year, "Calendar year of the first simulated year")
      ->capture_default_str();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) argv.push_back("oprisk");
  for (const auto& s : args) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << parsed_leaf(app)->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (app.get_subcommands().empty()) err << "run with --help for usage\n";
    return kExitInput;
  }

  try {
    if (sma_cmd->parsed()) return cmd_sma(sma_a, g, out, err);
    if (lda_cmd->parsed()) return cmd_lda(lda_a, g, out, err);
    if (imp_cmd->parsed()) return cmd_implied_bi(imp_a, g, out, err);
    if (exp_cmd->parsed()) return cmd_experiment(exp_a, g, out, err);
    if (fit_cmd->parsed()) return cmd_fit(fit_a, g, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(sim_a, g, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const nlohmann::json::exception& e) {
    err << "error: config: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitInput;
}

}  // namespace oprisk::cli
