#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "oprisk/errors.hpp"
#include "oprisk/ingest.hpp"

using namespace oprisk;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ingest::LossCsv parse(const std::string& text) {
  std::istringstream in(text);
  return ingest::parse_loss_csv(in);
}

const char* kHeader = "entity_id,occurrence_date,amount,business_line,event_type\n";

ingest::LossEvent event_on(int y, int m, int d, double amount) {
  return {"bank", ingest::Date{y, m, d}, amount, "", ""};
}

}  // namespace

TEST(LossCsv, WellFormedRows) {
  const auto csv = parse(std::string(kHeader) +
                         "bank,2020-01-15,1500000,retail_banking,external_fraud\n"
                         "bank,2020-06-30,2.5e7,,\n"
                         "\"bank, s.a.\",2021-12-31,300,Trading_And_Sales,internal_fraud\n");
  ASSERT_TRUE(csv.ok());
  ASSERT_EQ(csv.events.size(), 3u);
  EXPECT_EQ(csv.events[2].entity_id, "bank, s.a.");
  EXPECT_EQ(csv.events[2].business_line, "trading_and_sales");
  EXPECT_DOUBLE_EQ(csv.events[1].amount, 2.5e7);
  EXPECT_EQ(csv.events[0].occurrence_date.to_string(), "2020-01-15");
}

TEST(LossCsv, NegativeAmountRejectedWithLineNumber) {
  const auto csv = parse(std::string(kHeader) + "bank,2020-01-15,100,,\n" +
                         "bank,2020-01-16,-5,,\n");
  EXPECT_EQ(csv.events.size(), 1u);
  ASSERT_EQ(csv.errors.size(), 1u);
  EXPECT_EQ(csv.errors[0].line, 3u);
  EXPECT_NE(csv.errors[0].message.find("> 0"), std::string::npos);
}

TEST(LossCsv, RowLevelErrorsAreCollected) {
  const auto csv = parse(std::string(kHeader) + "bank,2023-02-30,100,,\n" +
                         "bank,2023-02-28,abc,,\n" + "bank,2023-02-28,10,moon_banking,\n" +
                         ",2023-02-28,10,,\n" + "bank,2023-02-28,10\n");
  EXPECT_TRUE(csv.events.empty());
  ASSERT_EQ(csv.errors.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(csv.errors[i].line, i + 2);
}

TEST(LossCsv, HeaderOnlyGivesEmptyListAndWarning) {
  const auto csv = parse(kHeader);
  EXPECT_TRUE(csv.events.empty());
  EXPECT_TRUE(csv.ok());
  ASSERT_EQ(csv.warnings.size(), 1u);
}

TEST(LossCsv, HeaderProblemsThrow) {
  EXPECT_THROW(parse("entity_id,occurrence_date,business_line,event_type\n"), InputError);
  EXPECT_THROW(parse(std::string("extra,") + kHeader), InputError);
  EXPECT_THROW(parse(""), InputError);
  EXPECT_THROW(ingest::load_loss_csv("/nonexistent/losses.csv"), InputError);
}

TEST(LossCsv, ColumnOrderIsFree) {
  const auto csv = parse("amount,event_type,entity_id,business_line,occurrence_date\n"
                         "42,,e1,,2019-03-01\n");
  ASSERT_EQ(csv.events.size(), 1u);
  EXPECT_DOUBLE_EQ(csv.events[0].amount, 42.0);
}

TEST(LossCsv, WriteReadRoundTrip) {
  std::vector<ingest::LossEvent> ev{{"a,b", {2020, 2, 29}, 0.1 + 0.2, "agency_services", ""},
                                    {"x", {1999, 12, 31}, 1e12 / 3.0, "", "internal_fraud"}};
  std::ostringstream out;
  ingest::write_loss_csv(out, ev);
  const auto back = parse(out.str());
  ASSERT_EQ(back.events.size(), 2u);
  EXPECT_EQ(back.events[0].entity_id, "a,b");
  EXPECT_EQ(back.events[0].amount, 0.1 + 0.2);
  EXPECT_EQ(back.events[1].amount, 1e12 / 3.0);
  EXPECT_EQ(back.events[1].occurrence_date.to_string(), "1999-12-31");
}

TEST(Date, StrictParsing) {
  EXPECT_TRUE(ingest::Date::parse("2024-02-29"));
  EXPECT_FALSE(ingest::Date::parse("2023-02-29"));
  EXPECT_FALSE(ingest::Date::parse("1900-02-29"));
  EXPECT_TRUE(ingest::Date::parse("2000-02-29"));
  EXPECT_FALSE(ingest::Date::parse("2023-13-01"));
  EXPECT_FALSE(ingest::Date::parse("2023-1-01"));
  EXPECT_FALSE(ingest::Date::parse("20230101"));
  EXPECT_FALSE(ingest::Date::parse("2023-01-0x"));
}

TEST(Annualize, OnePopulatedYearInTen) {
  std::vector<ingest::LossEvent> ev{event_on(2015, 3, 1, 10), event_on(2015, 7, 1, 20)};
  const auto recs = ingest::annualize(ev, 2010, 2019);
  ASSERT_EQ(recs.size(), 10u);
  int populated = 0;
  for (const auto& r : recs) populated += r.events.empty() ? 0 : 1;
  EXPECT_EQ(populated, 1);
  EXPECT_EQ(recs[5].year_index, 2015);
  EXPECT_DOUBLE_EQ(recs[5].total, 30.0);
}

TEST(Annualize, YearBoundary) {
  std::vector<ingest::LossEvent> ev{event_on(2015, 12, 31, 1), event_on(2016, 1, 1, 2)};
  const auto recs = ingest::annualize(ev, 2015, 2016);
  EXPECT_DOUBLE_EQ(recs[0].total, 1.0);
  EXPECT_DOUBLE_EQ(recs[1].total, 2.0);
}

TEST(Annualize, EmptyInputAndBadSpan) {
  const auto recs = ingest::annualize({}, 2000, 2004);
  ASSERT_EQ(recs.size(), 5u);
  for (const auto& r : recs) EXPECT_EQ(r.total, 0.0);
  EXPECT_THROW(ingest::annualize({}, 2005, 2004), InputError);
}

TEST(Annualize, TotalsConserveIngestedAmounts) {
  std::vector<ingest::LossEvent> ev;
  for (int i = 0; i < 500; ++i) ev.push_back(event_on(2000 + i % 10, 1 + i % 12, 1, 1000.0 + i));
  const auto recs = ingest::annualize(ev, 2000, 2009);
  double by_year = 0.0, raw = 0.0;
  for (const auto& r : recs) by_year += r.total;
  for (const auto& e : ev) raw += e.amount;
  EXPECT_EQ(by_year, raw);
}

TEST(RecordsToEvents, DatesFollowYearIndex) {
  std::vector<AnnualLossRecord> recs{AnnualLossRecord::from_events(0, {5.0}),
                                     AnnualLossRecord::from_events(3, {1.0, 2.0})};
  const auto ev = ingest::records_to_events(recs, "sim", 2000);
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev[2].occurrence_date.to_string(), "2003-01-01");
  EXPECT_EQ(ev[0].entity_id, "sim");
}

TEST(Config, ParsesAFullDocument) {
  const auto doc = json::parse(R"({
    "seed": 7,
    "units": {"amounts": "UM", "capital": "millions"},
    "alpha": 0.999,
    "model": {"cells": [
      {"frequency": {"family": "poisson", "lambda": 10},
       "severity": {"family": "lognormal", "mu": 14, "sigma": 2}},
      {"frequency": {"lambda": 990},
       "severity": {"family": "gamma", "shape": 1, "scale": 1e5}},
      {"frequency": {"lambda": 1},
       "severity": {"family": "gpd", "shape": 0.3, "scale": 1e4}}
    ]},
    "sma": {"bi": 2000, "lc": 1321, "thresholds": {"low": 2e7, "high": 2e8}},
    "lda": {"method": "fft", "quantiles": [0.99, 0.999], "years": 1000,
            "grid": {"step": 1000, "size": 4096}, "fft_pad": 4},
    "expected_loss_offset": false,
    "experiment": {"years": 500}
  })");
  const auto cfg = ingest::parse_config(doc);
  EXPECT_EQ(cfg.seed, 7u);
  ASSERT_TRUE(cfg.model);
  ASSERT_EQ(cfg.model->cells.size(), 3u);
  EXPECT_EQ(cfg.model->cells[0].severity, SeveritySpec::lognormal(14, 2));
  EXPECT_EQ(cfg.model->cells[2].severity, SeveritySpec::gpd(0.3, 1e4, 0.0));
  EXPECT_DOUBLE_EQ(cfg.sma->thresholds.low, 2e7);
  EXPECT_EQ(cfg.lda->method, "fft");
  EXPECT_EQ(cfg.lda->grid_size, 4096u);
  EXPECT_EQ(cfg.experiment->at("years"), 500);
}

TEST(Config, UnknownKeysRejectedAtEveryLevel) {
  EXPECT_THROW(ingest::parse_config(json::parse(R"({"sed": 1})")), InputError);
  EXPECT_THROW(ingest::parse_config(json::parse(R"({"sma": {"bi": 1, "LC": 2}})")), InputError);
  EXPECT_THROW(ingest::parse_config(json::parse(
                   R"({"model": {"cells": [{"frequency": {"lambda": 1},
                        "severity": {"family": "lognormal", "mu": 1, "sigma": 1, "scale": 2}}]}})")),
               InputError);
  EXPECT_THROW(ingest::parse_config(json::parse(R"({"lda": {"grid": {"steps": 1}}})")), InputError);
}

TEST(Config, ValueErrors) {
  EXPECT_THROW(ingest::parse_config(json::parse(R"({"alpha": 1.5})")), InputError);
  EXPECT_THROW(ingest::parse_config(json::parse(R"({"seed": -1})")), InputError);
  EXPECT_THROW(ingest::parse_config(json::parse(R"({"units": {"amounts": "EUR"}})")), InputError);
  EXPECT_THROW(ingest::parse_config(json::parse(R"({"expected_loss_offset": true})")), InputError);
  EXPECT_THROW(ingest::parse_config(json::parse(R"({"lda": {"method": "magic"}})")), InputError);
  EXPECT_THROW(ingest::parse_config(json::parse(R"({"sma": {"bi": 1,
                 "bi_components": {"services": 1}}})")),
               InputError);
  EXPECT_THROW(ingest::parse_config(json::parse(
                   R"({"model": {"cells": [{"frequency": {"family": "negbin", "lambda": 1},
                        "severity": {"family": "gamma", "shape": 1, "scale": 1}}]}})")),
               InputError);
  EXPECT_THROW(ingest::parse_config(json::parse(
                   R"({"model": {"cells": [{"frequency": {"lambda": 1},
                        "severity": {"family": "gamma", "shape": -1, "scale": 1}}]}})")),
               InputError);
}

TEST(Config, SeverityJsonRoundTrip) {
  for (const auto& spec :
       {SeveritySpec::lognormal(14, 2), SeveritySpec::gamma(1, 1e5), SeveritySpec::gpd(0.2, 3, 4),
        SeveritySpec::weibull(0.5, 9), SeveritySpec::pareto(1.5, 2), SeveritySpec::log_logistic(2, 3),
        SeveritySpec::log_gamma(2, 3), SeveritySpec::point_mass(5)})
    EXPECT_EQ(ingest::parse_severity(ingest::severity_to_json(spec), "s"), spec);
}

TEST(Config, SchemaListsTheAcceptedKeys) {
  std::ifstream in(OPRISK_SCHEMA);
  ASSERT_TRUE(in) << OPRISK_SCHEMA;
  const auto schema = json::parse(in);
  std::vector<std::string> keys;
  for (const auto& [k, v] : schema.at("properties").items()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  EXPECT_EQ(keys, (std::vector<std::string>{"$schema", "alpha", "expected_loss_offset",
                                            "experiment", "lda", "model", "seed", "sma",
                                            "units"}));
  EXPECT_EQ(schema.at("additionalProperties"), false);
}

TEST(Config, LoadFromFile) {
  const auto path = fs::temp_directory_path() / "oprisk_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"seed": 3, "sma": {"bi": 32000, "lc": 4000}})";
  }
  const auto cfg = ingest::load_config(path);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_DOUBLE_EQ(*cfg.sma->bi, 32000.0);
  {
    std::ofstream out(path);
    out << "{not json";
  }
  EXPECT_THROW(ingest::load_config(path), InputError);
  fs::remove(path);
  EXPECT_THROW(ingest::load_config(path), InputError);
}
