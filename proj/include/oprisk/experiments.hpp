#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "oprisk/calibration.hpp"
#include "oprisk/lda.hpp"
#include "oprisk/sma.hpp"

namespace oprisk::experiments {

enum class Study { Instability, SigmaSensitivity, Superadditivity, ImpliedBiGrid };

// CLI names: instability, sigma, superadditivity, implied-bi-grid.
std::string_view study_name(Study study);
Study parse_study(std::string_view name);

struct EntityConfig {
  std::string name;
  lda::CompoundModel model;
  double bi = 2000.0;  // millions
};

// A fixed pair of SMA inputs, used for the deterministic superadditivity panels.
struct SmaUnit {
  std::string name;
  double bi = 0.0;
  double lc = 0.0;
};

struct SmaPanel {
  std::string name;
  SmaUnit merged;
  std::vector<SmaUnit> parts;
};

struct ExperimentConfig {
  Study study = Study::Instability;
  std::uint64_t seed = 42;
  std::size_t years = 1000;
  std::size_t window = 10;
  unsigned threads = 0;
  sma::LossThresholds thresholds{};
  double alpha = 0.999;

  // Instability: one simulated entity per entry.
  std::vector<EntityConfig> entities;

  // Sigma sensitivity: Poisson(sigma_lambda)-Lognormal(sigma_mu, s) for each
  // s in sigmas, on top of the background cells, at BI = sigma_bi.
  std::vector<double> sigmas;
  double sigma_mu = 14.0;
  double sigma_lambda = 10.0;
  double sigma_bi = 2000.0;
  lda::CompoundModel background;

  // Superadditivity: deterministic panels plus a model-driven merger of
  // `lines` identical Poisson-Lognormal lines sharing merged_lambda.
  std::vector<SmaPanel> panels;
  double merged_lambda = 10.0;
  double merged_mu = 14.0;
  double merged_sigma = 2.0;
  int lines = 2;

  // Implied-BI grid over Poisson(grid_lambda)-Lognormal(mu, sigma).
  std::vector<double> grid_mu;
  std::vector<double> grid_sigma;
  double grid_lambda = 10.0;

  static ExperimentConfig defaults(Study study);
  // Throws InputError when the configuration cannot run.
  void validate() const;
};

// Overlays an "experiment" JSON block on the study defaults. Unknown keys
// are rejected.
ExperimentConfig config_from_json(Study study, const nlohmann::json& block);
nlohmann::json config_to_json(const ExperimentConfig& config);

// Monetary fields are in millions.
struct EntitySummary {
  std::string entity;
  double bi = 0.0;
  double mean_annual_loss = 0.0;
  double analytic_mean = 0.0;
  double mean_standard_error = 0.0;  // analytic sd / sqrt(years)
  double var_999 = 0.0;              // empirical order statistic
  double k_mean = 0.0;
  double k_min = 0.0;
  double k_max = 0.0;
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  std::size_t windows = 0;
};

struct SeriesPoint {
  std::string entity;
  int year = 0;  // last year of the trailing window, 1-based
  double lc = 0.0;
  double k_sma = 0.0;
  double ratio = 0.0;  // k_sma / mean k_sma of the entity
};

// Tukey boxplot: type-7 quartiles, whiskers at the most extreme points
// within 1.5 IQR of the box.
struct BoxplotSummary {
  std::string label;
  double parameter = 0.0;
  std::size_t n = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double iqr = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
  double max_over_median = 0.0;
};

BoxplotSummary boxplot(std::string label, double parameter, std::vector<double> values);

struct PanelRow {
  std::string panel;
  std::string unit;
  std::string role;  // "merged" or "part"
  double bi = 0.0;
  double bic = 0.0;
  double lc = 0.0;
  double sma = 0.0;
  double lda = 0.0;               // 0 when the panel has no model
  double line_implied_bi = 0.0;   // implied BI of a part from its own LDA, 0 if n/a
  int bucket = 0;
};

struct PanelVerdict {
  std::string panel;
  double merged_sma = 0.0;
  double split_total = 0.0;
  bool superadditive = false;
};

struct GridCell {
  double mu = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
  double target_var = 0.0;  // SLA VaR, millions
  calibration::ImpliedBiResult result;
  std::string status;  // "converged" or "no-bracket"
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  Study study = Study::Instability;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<EntitySummary> summary;
  std::vector<SeriesPoint> series;
  std::vector<BoxplotSummary> boxplots;
  std::vector<PanelRow> panels;
  std::vector<PanelVerdict> verdicts;
  std::vector<GridCell> grid;
  std::vector<Check> checks;
  std::vector<std::string> notes;
};

ExperimentReport run_instability(const ExperimentConfig& config);
ExperimentReport run_sigma_sensitivity(const ExperimentConfig& config);
ExperimentReport run_superadditivity(const ExperimentConfig& config);
ExperimentReport run_implied_bi_grid(const ExperimentConfig& config);
ExperimentReport run(const ExperimentConfig& config);

// Rolling K_SMA over trailing windows of a simulated history at fixed BI.
std::vector<SeriesPoint> rolling_capital(const std::string& entity,
                                         const std::vector<AnnualLossRecord>& history,
                                         double bi, std::size_t window,
                                         const sma::LossThresholds& thresholds);

// ---------------------------------------------------------------------------
// Report files

nlohmann::json report_to_json(const ExperimentReport& report);

// First 8 hex digits of the 64-bit FNV-1a hash of the canonical config dump.
std::string config_hash(const nlohmann::json& config);

// "<study>_seed<seed>_<hash>" without extension.
std::string report_stem(const ExperimentReport& report);

// Writes <stem>.json plus one CSV per non-empty table (_summary, _series,
// _boxplot, _panels, _grid). Returns the paths written.
std::vector<std::filesystem::path> write_report(const ExperimentReport& report,
                                                const std::filesystem::path& directory);

void write_summary_csv(std::ostream& out, const ExperimentReport& report);
void write_series_csv(std::ostream& out, const ExperimentReport& report);
void write_boxplot_csv(std::ostream& out, const ExperimentReport& report);
void write_panels_csv(std::ostream& out, const ExperimentReport& report);
void write_grid_csv(std::ostream& out, const ExperimentReport& report);

}  // namespace oprisk::experiments
