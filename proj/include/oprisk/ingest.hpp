#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <initializer_list>
#include <vector>

#include "json.hpp"
#include "oprisk/lda.hpp"
#include "oprisk/loss_record.hpp"
#include "oprisk/sma.hpp"

namespace oprisk::ingest {

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  // Strict ISO-8601 calendar date, YYYY-MM-DD.
  static std::optional<Date> parse(std::string_view text);
  std::string to_string() const;
};

struct LossEvent {
  std::string entity_id;
  Date occurrence_date;
  double amount = 0.0;  // base UM, > 0
  std::string business_line;
  std::string event_type;
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct LossCsv {
  std::vector<LossEvent> events;
  std::vector<RowError> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
};

// Canonical column order of the loss-event CSV.
inline constexpr std::array<std::string_view, 5> kLossCsvColumns{
    "entity_id", "occurrence_date", "amount", "business_line", "event_type"};

// The eight Basel business lines and seven event types, snake_case.
std::span<const std::string_view> business_lines();
std::span<const std::string_view> event_types();

// Parses the loss-event CSV. Throws InputError when the file cannot be read
// or the header lacks a required column; bad rows are collected in
// LossCsv::errors with their 1-based line numbers.
LossCsv load_loss_csv(const std::filesystem::path& path);
LossCsv parse_loss_csv(std::istream& in);

void write_loss_csv(std::ostream& out, std::span<const LossEvent> events);

// One record per calendar year in [start_year, end_year] (year_index is the
// calendar year); events are bucketed by occurrence year. Events outside the
// span are skipped.
std::vector<AnnualLossRecord> annualize(std::span<const LossEvent> events, int start_year,
                                        int end_year);

// Simulated years as loss events dated January 1 of base_year + year_index.
std::vector<LossEvent> records_to_events(std::span<const AnnualLossRecord> records,
                                         const std::string& entity_id, int base_year = 2000);

// A single amount column named "amount" (other columns ignored).
std::vector<double> load_amounts_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Configuration document (JSON). Unknown keys are rejected everywhere.

struct SmaSection {
  std::optional<double> bi;
  std::optional<sma::BiComponents> bi_components;
  std::optional<double> lc;
  std::optional<std::string> losses;
  sma::LossThresholds thresholds{};
};

struct LdaSection {
  std::string method = "mc";
  std::vector<double> quantiles{0.999};
  std::size_t years = 1'000'000;
  std::optional<double> grid_step;
  std::size_t grid_size = 1u << 16;
  std::size_t fft_pad = 2;
};

struct ConfigDocument {
  std::optional<std::uint64_t> seed;
  std::optional<lda::CompoundModel> model;
  std::optional<double> alpha;
  std::optional<SmaSection> sma;
  std::optional<LdaSection> lda;
  std::optional<nlohmann::json> experiment;  // validated by the experiments module
};

ConfigDocument parse_config(const nlohmann::json& doc);
ConfigDocument load_config(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

// Building blocks shared with the experiments module.
SeveritySpec parse_severity(const nlohmann::json& j, const std::string& where);
nlohmann::json severity_to_json(const SeveritySpec& spec);
lda::CompoundModel parse_cells(const nlohmann::json& j, const std::string& where);
nlohmann::json cells_to_json(const lda::CompoundModel& model);
// Throws InputError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         const std::string& where);

}  // namespace oprisk::ingest
