#include <algorithm>
#include <cmath>
#include <fstream>

#include "oprisk/errors.hpp"
#include "oprisk/ingest.hpp"

namespace oprisk::ingest {

using nlohmann::json;

namespace {

struct FamilyKeys {
  SeverityFamily family;
  std::vector<std::string> keys;  // in params[] order
  std::size_t required;
};

const std::vector<FamilyKeys>& family_keys() {
  static const std::vector<FamilyKeys> table{
      {SeverityFamily::Lognormal, {"mu", "sigma"}, 2},
      {SeverityFamily::Gamma, {"shape", "scale"}, 2},
      {SeverityFamily::GPD, {"shape", "scale", "location"}, 2},
      {SeverityFamily::Weibull, {"shape", "scale"}, 2},
      {SeverityFamily::Pareto, {"tail_index", "scale"}, 2},
      {SeverityFamily::LogLogistic, {"shape", "scale"}, 2},
      {SeverityFamily::LogGamma, {"shape", "rate"}, 2},
      {SeverityFamily::PointMass, {"value"}, 1},
  };
  return table;
}

const FamilyKeys& keys_for(SeverityFamily family) {
  for (const auto& fk : family_keys())
    if (fk.family == family) return fk;
  throw InputError("unsupported severity family");
}

double number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw InputError(where + ": missing key '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw InputError(where + "." + key + ": expected a number");
  return v.get<double>();
}

std::size_t count(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() && !(v.is_number() && std::floor(v.get<double>()) == v.get<double>()))
    throw InputError(where + "." + key + ": expected an integer");
  const double d = v.get<double>();
  if (d < 0) throw InputError(where + "." + key + ": must be >= 0");
  return static_cast<std::size_t>(d);
}

std::string text(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw InputError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::string lowercase_copy(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
}

sma::LossThresholds parse_thresholds(const json& j, const std::string& where) {
  require_object(j, where);
  reject_unknown_keys(j, {"low", "high"}, where);
  sma::LossThresholds t;
  if (j.contains("low")) t.low = number(j, "low", where);
  if (j.contains("high")) t.high = number(j, "high", where);
  if (!(t.low > 0.0 && t.low < t.high)) throw InputError(where + ": requires 0 < low < high");
  return t;
}

SmaSection parse_sma(const json& j) {
  const std::string where = "sma";
  require_object(j, where);
  reject_unknown_keys(j, {"bi", "bi_components", "lc", "losses", "thresholds"}, where);
  SmaSection s;
  if (j.contains("bi")) s.bi = number(j, "bi", where);
  if (j.contains("bi_components")) {
    const auto& c = j.at("bi_components");
    const std::string w = where + ".bi_components";
    require_object(c, w);
    reject_unknown_keys(c, {"interest_leasing_dividend", "services", "financial"}, w);
    sma::BiComponents bc;
    if (c.contains("interest_leasing_dividend"))
      bc.interest_leasing_dividend = number(c, "interest_leasing_dividend", w);
    if (c.contains("services")) bc.services = number(c, "services", w);
    if (c.contains("financial")) bc.financial = number(c, "financial", w);
    s.bi_components = bc;
  }
  if (s.bi && s.bi_components) throw InputError("sma: give either bi or bi_components, not both");
  if (j.contains("lc")) s.lc = number(j, "lc", where);
  if (j.contains("losses")) s.losses = text(j, "losses", where);
  if (j.contains("thresholds")) s.thresholds = parse_thresholds(j.at("thresholds"), "sma.thresholds");
  return s;
}

LdaSection parse_lda(const json& j) {
  const std::string where = "lda";
  require_object(j, where);
  reject_unknown_keys(j, {"method", "quantiles", "years", "grid", "fft_pad"}, where);
  LdaSection s;
  if (j.contains("method")) {
    s.method = text(j, "method", where);
    static const std::vector<std::string> methods{"mc", "panjer", "fft", "sla"};
    if (std::find(methods.begin(), methods.end(), s.method) == methods.end())
      throw InputError("lda.method: expected one of mc, panjer, fft, sla");
  }
  if (j.contains("quantiles")) {
    const auto& q = j.at("quantiles");
    if (!q.is_array() || q.empty()) throw InputError("lda.quantiles: expected a non-empty array");
    s.quantiles.clear();
    for (const auto& v : q) {
      if (!v.is_number()) throw InputError("lda.quantiles: expected numbers");
      const double p = v.get<double>();
      if (!(p > 0.0 && p < 1.0)) throw InputError("lda.quantiles: values must be in (0, 1)");
      s.quantiles.push_back(p);
    }
  }
  if (j.contains("years")) {
    s.years = count(j, "years", where);
    if (s.years == 0) throw InputError("lda.years: must be >= 1");
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    require_object(g, "lda.grid");
    reject_unknown_keys(g, {"step", "size"}, "lda.grid");
    if (g.contains("step")) s.grid_step = number(g, "step", "lda.grid");
    if (g.contains("size")) s.grid_size = count(g, "size", "lda.grid");
  }
  if (j.contains("fft_pad")) s.fft_pad = count(j, "fft_pad", where);
  return s;
}

}  // namespace

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw InputError(where + ": unknown key '" + key + "'");
  }
}

SeveritySpec parse_severity(const json& j, const std::string& where) {
  require_object(j, where);
  if (!j.contains("family")) throw InputError(where + ": missing key 'family'");
  const auto family = parse_family(text(j, "family", where));
  const auto& fk = keys_for(family);
  for (const auto& [key, value] : j.items()) {
    if (key != "family" && std::find(fk.keys.begin(), fk.keys.end(), key) == fk.keys.end())
      throw InputError(where + ": unknown key '" + key + "' for family " +
                       std::string(family_name(family)));
  }
  std::array<double, 3> params{};
  for (std::size_t i = 0; i < fk.keys.size(); ++i) {
    if (i < fk.required || j.contains(fk.keys[i])) params[i] = number(j, fk.keys[i], where);
  }
  try {
    return SeveritySpec::make(family, params);
  } catch (const InputError& e) {
    throw InputError(where + ": " + e.what());
  }
}

json severity_to_json(const SeveritySpec& spec) {
  json j;
  j["family"] = std::string(family_name(spec.family()));
  const auto& fk = keys_for(spec.family());
  for (std::size_t i = 0; i < fk.keys.size(); ++i) j[fk.keys[i]] = spec.param(i);
  return j;
}

lda::CompoundModel parse_cells(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a non-empty array of cells");
  lda::CompoundModel model;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    const auto& cell = j[i];
    require_object(cell, w);
    reject_unknown_keys(cell, {"frequency", "severity"}, w);
    if (!cell.contains("frequency") || !cell.contains("severity"))
      throw InputError(w + ": needs 'frequency' and 'severity'");
    const auto& f = cell.at("frequency");
    require_object(f, w + ".frequency");
    reject_unknown_keys(f, {"family", "lambda"}, w + ".frequency");
    if (f.contains("family") && lowercase_copy(text(f, "family", w + ".frequency")) != "poisson")
      throw InputError(w + ".frequency: only the poisson family is supported");
    const double lambda = number(f, "lambda", w + ".frequency");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw InputError(w + ".frequency.lambda: must be >= 0");
    model.cells.push_back({FrequencySpec::poisson(lambda),
                           parse_severity(cell.at("severity"), w + ".severity")});
  }
  return model;
}

json cells_to_json(const lda::CompoundModel& model) {
  json cells = json::array();
  for (const auto& cell : model.cells) {
    cells.push_back({{"frequency", {{"family", "poisson"}, {"lambda", cell.frequency.lambda}}},
                     {"severity", severity_to_json(cell.severity)}});
  }
  return cells;
}

ConfigDocument parse_config(const json& doc) {
  require_object(doc, "config");
  reject_unknown_keys(doc,
                      {"$schema", "seed", "units", "model", "alpha", "sma", "lda", "experiment",
                       "expected_loss_offset"},
                      "config");
  ConfigDocument cfg;
  if (doc.contains("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw InputError("config.seed: expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("units")) {
    const auto& u = doc.at("units");
    require_object(u, "units");
    reject_unknown_keys(u, {"amounts", "capital"}, "units");
    if (u.contains("amounts") && text(u, "amounts", "units") != "UM")
      throw InputError("units.amounts: only 'UM' (base monetary units) is supported");
    if (u.contains("capital") && text(u, "capital", "units") != "millions")
      throw InputError("units.capital: only 'millions' is supported");
  }
  if (doc.contains("expected_loss_offset")) {
    const auto& e = doc.at("expected_loss_offset");
    if (!e.is_boolean()) throw InputError("config.expected_loss_offset: expected a boolean");
    if (e.get<bool>())
      throw InputError("config.expected_loss_offset: offsetting expected loss is not supported");
  }
  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    require_object(m, "model");
    reject_unknown_keys(m, {"cells"}, "model");
    if (!m.contains("cells")) throw InputError("model: missing key 'cells'");
    cfg.model = parse_cells(m.at("cells"), "model.cells");
  }
  if (doc.contains("alpha")) {
    cfg.alpha = number(doc, "alpha", "config");
    if (!(*cfg.alpha > 0.0 && *cfg.alpha < 1.0))
      throw InputError("config.alpha: must be in (0, 1)");
  }
  if (doc.contains("sma")) cfg.sma = parse_sma(doc.at("sma"));
  if (doc.contains("lda")) cfg.lda = parse_lda(doc.at("lda"));
  if (doc.contains("experiment")) {
    require_object(doc.at("experiment"), "experiment");
    cfg.experiment = doc.at("experiment");
  }
  return cfg;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

ConfigDocument load_config(const std::filesystem::path& path) {
  return parse_config(read_json_file(path));
}

}  // namespace oprisk::ingest
