#pragma once

// Forecast-outcome archives: loading, empirical scores, and relative
// Ignorance in bits with its probability-ratio reading.

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "psl/density.hpp"
#include "psl/errors.hpp"
#include "psl/io.hpp"
#include "psl/scores.hpp"

namespace psl {

struct ForecastRecord {
  std::map<std::string, AnyDensity> forecasts;
  double outcome = 0.0;
  std::size_t line = 0;  // 1-based source line
};

using ForecastArchive = std::vector<ForecastRecord>;

enum class ArchiveFormat { jsonl, csv };

/// Sum by recursive halving; the reduction order depends only on the length.
inline double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const auto half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace detail {

inline ValidationError at_line(const std::string& what, std::size_t line) {
  std::ostringstream msg;
  msg << what << ", line " << line;
  return ValidationError(msg.str());
}

inline ValidationError at_line(const std::string& what, std::size_t line, const std::string& system) {
  std::ostringstream msg;
  msg << what << ", line " << line << " (forecast '" << system << "')";
  return ValidationError(msg.str());
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_cell(const std::string& cell, const std::string& column, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw at_line("column '" + column + "' is not a number", line);
  }
}

inline ForecastArchive load_jsonl(std::istream& in) {
  ForecastArchive out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      throw at_line("malformed JSON", line);
    }
    if (!j.is_object()) throw at_line("record must be a JSON object", line);
    if (!j.contains("outcome") || !j.at("outcome").is_number())
      throw at_line("field 'outcome' must be a number", line);
    if (!j.contains("forecasts") || !j.at("forecasts").is_object() || j.at("forecasts").empty())
      throw at_line("field 'forecasts' must be a non-empty object", line);
    ForecastRecord rec;
    rec.line = line;
    rec.outcome = j.at("outcome").get<double>();
    if (!std::isfinite(rec.outcome)) throw at_line("field 'outcome' must be finite", line);
    for (const auto& [name, spec] : j.at("forecasts").items()) {
      try {
        rec.forecasts.emplace(name, io::density_from_json(spec));
      } catch (const ValidationError& e) {
        throw at_line(e.what(), line, name);
      } catch (const DomainError& e) {
        throw at_line(e.what(), line, name);
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// Header: outcome,<sys>_mu,<sys>_sigma,... (one Gaussian per system).
inline ForecastArchive load_csv(std::istream& in) {
  ForecastArchive out;
  std::string text;
  std::size_t line = 0;
  std::vector<std::string> header;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_csv(text);
    break;
  }
  if (header.empty()) return out;

  std::optional<std::size_t> outcome_col;
  std::map<std::string, std::pair<std::optional<std::size_t>, std::optional<std::size_t>>> systems;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& h = header[i];
    if (h == "outcome") {
      outcome_col = i;
    } else if (h.size() > 3 && h.ends_with("_mu")) {
      systems[h.substr(0, h.size() - 3)].first = i;
    } else if (h.size() > 6 && h.ends_with("_sigma")) {
      systems[h.substr(0, h.size() - 6)].second = i;
    } else {
      throw at_line("unrecognised column '" + h + "'", line);
    }
  }
  if (!outcome_col) throw at_line("missing column 'outcome'", line);
  if (systems.empty()) throw at_line("no <system>_mu/<system>_sigma columns", line);
  for (const auto& [name, cols] : systems)
    if (!cols.first || !cols.second) throw at_line("system '" + name + "' needs both _mu and _sigma", line);

  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(text);
    if (cells.size() != header.size()) throw at_line("expected " + std::to_string(header.size()) + " columns", line);
    ForecastRecord rec;
    rec.line = line;
    rec.outcome = parse_cell(cells[*outcome_col], "outcome", line);
    if (!std::isfinite(rec.outcome)) throw at_line("field 'outcome' must be finite", line);
    for (const auto& [name, cols] : systems) {
      const double mu = parse_cell(cells[*cols.first], name + "_mu", line);
      const double sigma = parse_cell(cells[*cols.second], name + "_sigma", line);
      try {
        rec.forecasts.emplace(name, MixtureDensity::normal(mu, sigma));
      } catch (const ValidationError& e) {
        throw at_line(e.what(), line, name);
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline const AnyDensity& forecast_of(const ForecastRecord& rec, const std::string& system) {
  const auto it = rec.forecasts.find(system);
  if (it == rec.forecasts.end()) throw at_line("system '" + system + "' missing from record", rec.line);
  return it->second;
}

}  // namespace detail

/// Streaming parse; every record keeps its source line for error reporting.
inline ForecastArchive load_archive(std::istream& in, ArchiveFormat format = ArchiveFormat::jsonl) {
  return format == ArchiveFormat::csv ? detail::load_csv(in) : detail::load_jsonl(in);
}

struct EmpiricalScore {
  double value = 0.0;      // mean score; +inf when any record scored +inf
  std::size_t count = 0;
  double std_error = 0.0;  // sample stddev / sqrt(N) over finite scores
  bool infinite = false;
  std::size_t infinite_count = 0;
};

/// Per-record Monte-Carlo scores use seed + record index.
inline EmpiricalScore empirical_score(const ScoreSpec& spec, const ForecastArchive& archive,
                                      const std::string& system, const ScoreOptions& opts = {}) {
  if (archive.empty()) throw ValidationError("empirical score: archive is empty");
  std::vector<double> values;
  values.reserve(archive.size());
  EmpiricalScore out;
  out.count = archive.size();
  for (std::size_t i = 0; i < archive.size(); ++i) {
    const auto& rec = archive[i];
    ScoreOptions local = opts;
    if (opts.monte_carlo)
      local.monte_carlo = MonteCarloOptions(opts.monte_carlo->seed + i, opts.monte_carlo->samples);
    const auto s = score(spec, detail::forecast_of(rec, system), rec.outcome, local);
    if (s.infinite) {
      ++out.infinite_count;
      continue;
    }
    values.push_back(s.value);
  }
  if (out.infinite_count > 0) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  const double n = static_cast<double>(values.size());
  out.value = pairwise_sum(values) / n;
  if (values.size() > 1) {
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - out.value) * (values[i] - out.value);
    out.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  }
  return out;
}

struct RelativeIgnorance {
  std::string system1;
  std::string system2;
  double bits = 0.0;               // mean of -log2(p1(Y) / p2(Y)); negative favours system1
  double probability_ratio = 1.0;  // 2^(-bits): average density ratio p1/p2 at the outcome
  std::size_t count = 0;
  double std_error = 0.0;
};

/// Mean relative Ignorance. -1 bit reads as "system1 assigns twice the
/// probability to the outcome on average".
inline RelativeIgnorance relative_empirical_ignorance(const ForecastArchive& archive, const std::string& system1,
                                                      const std::string& system2) {
  if (archive.empty()) throw ValidationError("relative ignorance: archive is empty");
  std::vector<double> terms;
  terms.reserve(archive.size());
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  for (const auto& rec : archive) {
    const double l1 = detail::forecast_of(rec, system1).log_pdf(rec.outcome);
    const double l2 = detail::forecast_of(rec, system2).log_pdf(rec.outcome);
    if (l1 == neg_inf && l2 == neg_inf)
      throw detail::at_line("both systems assign zero density to the outcome", rec.line);
    terms.push_back((l2 - l1) / std::numbers::ln2);
  }
  RelativeIgnorance out;
  out.system1 = system1;
  out.system2 = system2;
  out.count = terms.size();
  const double n = static_cast<double>(terms.size());
  out.bits = pairwise_sum(terms) / n;
  out.probability_ratio = std::exp2(-out.bits);
  if (terms.size() > 1 && std::isfinite(out.bits)) {
    std::vector<double> sq(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) sq[i] = (terms[i] - out.bits) * (terms[i] - out.bits);
    out.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  }
  return out;
}

struct EvalReport {
  std::size_t count = 0;
  std::vector<std::string> systems;
  std::vector<ScoreSpec> specs;
  std::map<std::string, std::vector<EmpiricalScore>> scores;  // system -> one per spec
  std::vector<RelativeIgnorance> relative_ignorance;          // every ordered pair (i < j)
};

/// Empirical scores for each system under each spec, plus relative Ignorance
/// for each pair of systems. Systems default to those of the first record.
inline EvalReport evaluate_archive(const ForecastArchive& archive, const std::vector<ScoreSpec>& specs,
                                   std::vector<std::string> systems = {}, const ScoreOptions& opts = {}) {
  if (archive.empty()) throw ValidationError("archive evaluation: archive is empty");
  if (systems.empty())
    for (const auto& [name, d] : archive.front().forecasts) systems.push_back(name);
  EvalReport report;
  report.count = archive.size();
  report.systems = systems;
  report.specs = specs;
  for (const auto& s : systems) {
    auto& row = report.scores[s];
    for (const auto& spec : specs) row.push_back(empirical_score(spec, archive, s, opts));
  }
  for (std::size_t i = 0; i < systems.size(); ++i)
    for (std::size_t j = i + 1; j < systems.size(); ++j)
      report.relative_ignorance.push_back(relative_empirical_ignorance(archive, systems[i], systems[j]));
  return report;
}

namespace io {

inline json to_json(const EmpiricalScore& s) {
  return json{{"value", number(s.value)},
              {"count", s.count},
              {"stderr", number(s.std_error)},
              {"infinite", s.infinite},
              {"infinite_count", s.infinite_count}};
}

inline json to_json(const RelativeIgnorance& r) {
  return json{{"system1", r.system1},
              {"system2", r.system2},
              {"bits", number(r.bits)},
              {"probability_ratio", number(r.probability_ratio)},
              {"count", r.count},
              {"stderr", number(r.std_error)}};
}

inline json to_json(const EvalReport& r) {
  json systems = json::object();
  for (const auto& name : r.systems) {
    json per = json::object();
    const auto& row = r.scores.at(name);
    for (std::size_t k = 0; k < r.specs.size(); ++k) per[r.specs[k].label()] = to_json(row[k]);
    systems[name] = per;
  }
  json rel = json::array();
  for (const auto& x : r.relative_ignorance) rel.push_back(to_json(x));
  return json{{"count", r.count}, {"systems", systems}, {"relative_ignorance", rel}};
}

}  // namespace io

}  // namespace psl
