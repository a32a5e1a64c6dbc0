#include "oprisk/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "oprisk/errors.hpp"

namespace oprisk::ingest {

namespace {

constexpr std::array<std::string_view, 8> kBusinessLines{
    "corporate_finance", "trading_and_sales",  "retail_banking",   "commercial_banking",
    "payment_and_settlement", "agency_services", "asset_management", "retail_brokerage"};

constexpr std::array<std::string_view, 7> kEventTypes{
    "internal_fraud",
    "external_fraud",
    "employment_practices_and_workplace_safety",
    "clients_products_and_business_practices",
    "damage_to_physical_assets",
    "business_disruption_and_system_failures",
    "execution_delivery_and_process_management"};

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && leap(y) ? 29 : days[m - 1];
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Splits one CSV line; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

std::optional<double> parse_double(std::string_view s) {
  double value = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

bool known_label(std::string_view value, std::span<const std::string_view> labels) {
  return std::find(labels.begin(), labels.end(), value) != labels.end();
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::optional<Date> Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    const auto* b = text.data() + pos;
    const auto [ptr, ec] = std::from_chars(b, b + len, v);
    if (ec != std::errc() || ptr != b + len) return std::nullopt;
    return v;
  };
  const auto y = field(0, 4), m = field(5, 2), d = field(8, 2);
  if (!y || !m || !d) return std::nullopt;
  if (*m < 1 || *m > 12 || *d < 1 || *d > days_in_month(*y, *m)) return std::nullopt;
  return Date{*y, *m, *d};
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::span<const std::string_view> business_lines() { return kBusinessLines; }
std::span<const std::string_view> event_types() { return kEventTypes; }

LossCsv parse_loss_csv(std::istream& in) {
  LossCsv out;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> column;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (column.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) column[lowercase(fields[i])] = i;
      for (auto name : kLossCsvColumns)
        if (!column.count(std::string(name)))
          throw InputError("loss CSV: header is missing column '" + std::string(name) + "'");
      for (const auto& [name, idx] : column) {
        if (std::find(kLossCsvColumns.begin(), kLossCsvColumns.end(), name) ==
            kLossCsvColumns.end())
          throw InputError("loss CSV: unknown column '" + name + "'");
      }
      continue;
    }
    if (fields.size() != column.size()) {
      out.errors.push_back({line_no, "expected " + std::to_string(column.size()) +
                                         " fields, got " + std::to_string(fields.size())});
      continue;
    }
    auto get = [&](std::string_view name) -> const std::string& {
      return fields[column.at(std::string(name))];
    };
    LossEvent ev;
    ev.entity_id = get("entity_id");
    if (ev.entity_id.empty()) {
      out.errors.push_back({line_no, "empty entity_id"});
      continue;
    }
    const auto date = Date::parse(get("occurrence_date"));
    if (!date) {
      out.errors.push_back({line_no, "bad occurrence_date '" + get("occurrence_date") +
                                         "', expected YYYY-MM-DD"});
      continue;
    }
    ev.occurrence_date = *date;
    const auto amount = parse_double(get("amount"));
    if (!amount || !std::isfinite(*amount)) {
      out.errors.push_back({line_no, "bad amount '" + get("amount") + "'"});
      continue;
    }
    if (*amount <= 0.0) {
      out.errors.push_back({line_no, "amount must be > 0, got " + get("amount")});
      continue;
    }
    ev.amount = *amount;
    ev.business_line = lowercase(get("business_line"));
    ev.event_type = lowercase(get("event_type"));
    if (!ev.business_line.empty() && !known_label(ev.business_line, kBusinessLines)) {
      out.errors.push_back({line_no, "unknown business_line '" + get("business_line") + "'"});
      continue;
    }
    if (!ev.event_type.empty() && !known_label(ev.event_type, kEventTypes)) {
      out.errors.push_back({line_no, "unknown event_type '" + get("event_type") + "'"});
      continue;
    }
    out.events.push_back(std::move(ev));
  }
  if (column.empty()) throw InputError("loss CSV: missing header row");
  if (out.events.empty() && out.errors.empty())
    out.warnings.push_back("loss CSV contains no events");
  return out;
}

LossCsv load_loss_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open loss CSV '" + path.string() + "'");
  return parse_loss_csv(in);
}

void write_loss_csv(std::ostream& out, std::span<const LossEvent> events) {
  out << "entity_id,occurrence_date,amount,business_line,event_type\n";
  char buf[32];
  for (const auto& ev : events) {
    std::snprintf(buf, sizeof buf, "%.17g", ev.amount);
    out << csv_field(ev.entity_id) << ',' << ev.occurrence_date.to_string() << ',' << buf << ','
        << csv_field(ev.business_line) << ',' << csv_field(ev.event_type) << '\n';
  }
}

std::vector<AnnualLossRecord> annualize(std::span<const LossEvent> events, int start_year,
                                        int end_year) {
  if (end_year < start_year) throw InputError("annualize: end year precedes start year");
  std::vector<std::vector<double>> per_year(static_cast<std::size_t>(end_year - start_year + 1));
  for (const auto& ev : events) {
    const int y = ev.occurrence_date.year;
    if (y < start_year || y > end_year) continue;
    per_year[static_cast<std::size_t>(y - start_year)].push_back(ev.amount);
  }
  std::vector<AnnualLossRecord> out;
  out.reserve(per_year.size());
  for (std::size_t i = 0; i < per_year.size(); ++i)
    out.push_back(AnnualLossRecord::from_events(start_year + static_cast<int>(i),
                                                std::move(per_year[i])));
  return out;
}

std::vector<LossEvent> records_to_events(std::span<const AnnualLossRecord> records,
                                         const std::string& entity_id, int base_year) {
  std::vector<LossEvent> out;
  for (const auto& rec : records) {
    for (double x : rec.events) {
      if (!(x > 0.0)) continue;
      out.push_back({entity_id, Date{base_year + rec.year_index, 1, 1}, x, {}, {}});
    }
  }
  return out;
}

std::vector<double> load_amounts_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file '" + path.string() + "'");
  std::string line;
  std::optional<std::size_t> amount_col;
  std::vector<double> out;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (!amount_col) {
      for (std::size_t i = 0; i < fields.size(); ++i)
        if (lowercase(fields[i]) == "amount") amount_col = i;
      if (!amount_col) throw InputError("data CSV: header has no 'amount' column");
      continue;
    }
    if (*amount_col >= fields.size())
      throw InputError("data CSV line " + std::to_string(line_no) + ": missing amount");
    const auto v = parse_double(fields[*amount_col]);
    if (!v || !std::isfinite(*v))
      throw InputError("data CSV line " + std::to_string(line_no) + ": bad amount '" +
                       fields[*amount_col] + "'");
    out.push_back(*v);
  }
  if (!amount_col) throw InputError("data CSV: missing header row");
  return out;
}

}  // namespace oprisk::ingest
