#pragma once

// JSON encodings of densities, transforms, score specs and reports.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "psl/analysis.hpp"
#include "psl/density.hpp"
#include "psl/errors.hpp"
#include "psl/scores.hpp"

namespace psl::io {

using json = nlohmann::json;

/// x rounded to 9 significant digits (the precision of all emitted numbers).
inline double round9(double x) {
  if (x == 0.0) return 0.0;  // drops the sign of -0
  if (!std::isfinite(x)) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

inline std::string format9(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

/// JSON has no infinities; non-finite values are written as strings.
inline json number(double x) {
  if (std::isfinite(x)) return round9(x);
  return format9(x);
}

namespace detail {

inline double get_number(const json& j, const char* field) {
  if (!j.is_object() || !j.contains(field)) throw ValidationError(std::string("missing field '") + field + "'");
  const auto& v = j.at(field);
  if (!v.is_number()) throw ValidationError(std::string("field '") + field + "' must be a number");
  return v.get<double>();
}

inline std::vector<double> get_numbers(const json& j, const char* field) {
  if (!j.is_object() || !j.contains(field)) throw ValidationError(std::string("missing field '") + field + "'");
  const auto& v = j.at(field);
  if (!v.is_array()) throw ValidationError(std::string("field '") + field + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ValidationError(std::string("field '") + field + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Transforms: {"kind": "affine"|"cubic"|"exp"|"identity", "params": [...]}

inline Transform transform_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ValidationError("transform needs a string field 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  const auto params = j.contains("params") ? detail::get_numbers(j, "params") : std::vector<double>{};
  if (kind == "identity") return Transform::identity();
  if (kind == "cubic") {
    if (!params.empty()) throw ValidationError("cubic transform takes no params");
    return Transform::cubic();
  }
  if (kind == "affine") {
    if (params.size() != 2) throw ValidationError("affine transform takes params [scale, shift]");
    return Transform::affine(params[0], params[1]);
  }
  if (kind == "exp") {
    if (params.size() > 1) throw ValidationError("exp transform takes params [rate]");
    return Transform::exponential(params.empty() ? 1.0 : params[0]);
  }
  throw ValidationError("unknown transform kind '" + kind + "'");
}

/// Built-in transform by name with default parameters (affine: 1, 0).
inline Transform transform_from_name(const std::string& kind, const std::vector<double>& params = {}) {
  json j{{"kind", kind}};
  if (!params.empty()) j["params"] = params;
  else if (kind == "affine") j["params"] = {1.0, 0.0};
  return transform_from_json(j);
}

inline json to_json(const Transform& t) {
  if (t.kind() == Transform::Kind::custom) throw ValidationError("custom transforms have no JSON form");
  return json{{"kind", t.name()}, {"params", t.params()}};
}

// ---------------------------------------------------------------------------
// Densities.

inline MixtureDensity mixture_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
    throw ValidationError("density needs a string field 'type'");
  const auto type = j.at("type").get<std::string>();
  if (type == "gaussian_mixture") {
    if (!j.contains("components") || !j.at("components").is_array())
      throw ValidationError("gaussian_mixture needs an array field 'components'");
    std::vector<GaussianComponent> comps;
    for (const auto& c : j.at("components"))
      comps.push_back({detail::get_number(c, "w"), detail::get_number(c, "mu"), detail::get_number(c, "sigma")});
    return MixtureDensity::gaussian_mixture(std::move(comps));
  }
  if (type == "piecewise_uniform")
    return MixtureDensity::piecewise_uniform(detail::get_numbers(j, "breaks"), detail::get_numbers(j, "masses"));
  throw ValidationError("unknown density type '" + type + "'");
}

/// A density spec, optionally carrying a "transform" member for a pushforward.
inline AnyDensity density_from_json(const json& j) {
  auto base = mixture_from_json(j);
  if (j.contains("transform")) return pushforward(base, transform_from_json(j.at("transform")));
  return base;
}

inline AnyDensity density_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("density is not valid JSON: ") + e.what());
  }
  return density_from_json(j);
}

inline json to_json(const MixtureDensity& d) {
  if (d.kind() == MixtureDensity::Kind::piecewise_uniform)
    return json{{"type", "piecewise_uniform"}, {"breaks", d.breaks()}, {"masses", d.masses()}};
  json comps = json::array();
  for (const auto& c : d.components()) comps.push_back({{"w", c.weight}, {"mu", c.mean}, {"sigma", c.stddev}});
  return json{{"type", "gaussian_mixture"}, {"components", comps}};
}

inline json to_json(const AnyDensity& d) {
  if (const auto* m = d.mixture()) return to_json(*m);
  const auto* t = d.transformed();
  auto j = to_json(t->base());
  j["transform"] = to_json(t->transform());
  return j;
}

// ---------------------------------------------------------------------------
// Score specs: {"family": "crps"} | {"family": "energy", "beta": 1.5} | ...

inline ScoreSpec score_spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
    throw ValidationError("score spec needs a string field 'family'");
  const auto f = j.at("family").get<std::string>();
  if (f == "ignorance") return ScoreSpec::ignorance();
  if (f == "crps") return ScoreSpec::crps();
  if (f == "naive_linear") return ScoreSpec::naive_linear();
  if (f == "energy") return ScoreSpec::energy(detail::get_number(j, "beta"));
  if (f == "power") return ScoreSpec::power(detail::get_number(j, "alpha"));
  if (f == "pseudospherical") return ScoreSpec::pseudospherical(detail::get_number(j, "beta"));
  throw ValidationError("unknown score family '" + f + "'");
}

inline json to_json(const ScoreSpec& s) {
  json j{{"family", s.name()}};
  if (s.family == Family::power) j["alpha"] = s.parameter;
  if (s.family == Family::energy || s.family == Family::pseudospherical) j["beta"] = s.parameter;
  return j;
}

inline json to_json(const ScoreValue& v) {
  json j{{"value", number(v.value)}, {"infinite", v.infinite}};
  if (v.std_error) j["stderr"] = number(*v.std_error);
  return j;
}

// ---------------------------------------------------------------------------
// Reports.

inline json to_json(const WitnessReport& r) {
  return json{{"spec", to_json(r.spec)}, {"p1", to_json(r.p1)},      {"p2", to_json(r.p2)},
              {"y", number(r.y)},        {"ratio", number(r.ratio)}, {"s1", to_json(r.s1)},
              {"s2", to_json(r.s2)},     {"verified", r.verified}};
}

inline json to_json(const FlipReport& r) {
  json j{{"spec", to_json(r.spec)},
         {"a", to_json(r.a)},
         {"b", to_json(r.b)},
         {"transform", to_json(r.transform)},
         {"y", number(r.y)},
         {"relative_pre", number(r.relative_pre)},
         {"relative_post", number(r.relative_post)},
         {"region", {number(r.region_lo), number(r.region_hi)}}};
  j["pre_threshold"] = r.pre_threshold ? number(*r.pre_threshold) : json(nullptr);
  j["post_threshold"] = r.post_threshold ? number(*r.post_threshold) : json(nullptr);
  return j;
}

inline json to_json(const ProprietyFinding& f) {
  json j{{"pair", f.pair_index},
         {"candidate", f.candidate_index},
         {"expected_candidate", number(f.expected_candidate)},
         {"expected_truth", number(f.expected_truth)},
         {"margin", number(f.margin)},
         {"l1_distance", number(f.l1_distance)},
         {"improper", f.improper},
         {"not_strict", f.not_strict}};
  if (f.std_error) j["stderr"] = number(*f.std_error);
  return j;
}

/// Propriety report; each violation also carries the offending (truth, candidate) pair.
inline json to_json(const ProprietyReport& r, std::span<const PairSet> sets) {
  json findings = json::array();
  json violations = json::array();
  for (const auto& f : r.findings) {
    findings.push_back(to_json(f));
    if (f.improper || f.not_strict) {
      auto v = to_json(f);
      v["truth"] = to_json(sets[f.pair_index].truth);
      v["forecast"] = to_json(sets[f.pair_index].candidates[f.candidate_index]);
      violations.push_back(v);
    }
  }
  return json{{"spec", to_json(r.spec)},
              {"passed", r.passed()},
              {"checked", r.findings.size()},
              {"violations", violations},
              {"findings", findings}};
}

}  // namespace psl::io
