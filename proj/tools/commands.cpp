#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace psl::cli {

using nlohmann::json;

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw ValidationError("grid needs at least 2 points");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw ValidationError("grid range must be finite with lo < hi");
  std::vector<double> g(n);
  // Grid points are rounded to the printed precision so every output row can
  // be recomputed exactly from what was written.
  for (std::size_t i = 0; i < n; ++i)
    g[i] = io::round9(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

ScoreSpec spec_from_flags(const std::string& family_in, std::optional<double> alpha, std::optional<double> beta) {
  const auto family = lower(family_in);
  const auto no_alpha = [&] {
    if (alpha) throw ValidationError("--alpha applies only to the power family");
  };
  const auto no_beta = [&] {
    if (beta) throw ValidationError("--beta applies only to the energy and pseudospherical families");
  };
  if (family == "ignorance" || family == "ign" || family == "log") {
    no_alpha(), no_beta();
    return ScoreSpec::ignorance();
  }
  if (family == "crps") {
    no_alpha(), no_beta();
    return ScoreSpec::crps();
  }
  if (family == "naive_linear" || family == "linear") {
    no_alpha(), no_beta();
    return ScoreSpec::naive_linear();
  }
  if (family == "energy") {
    no_alpha();
    return ScoreSpec::energy(beta.value_or(1.0));
  }
  if (family == "power" || family == "pls") {
    no_beta();
    return ScoreSpec::power(alpha.value_or(2.0));
  }
  if (family == "pseudospherical" || family == "sps") {
    no_alpha();
    return ScoreSpec::pseudospherical(beta.value_or(2.0));
  }
  throw ValidationError("unknown score family '" + family_in + "'");
}

ScoreOptions score_options(const ScoreSpec& spec, std::optional<std::uint64_t> seed, std::size_t samples,
                           std::optional<double> floor = std::nullopt) {
  ScoreOptions o;
  o.density_floor = floor;
  if (spec.uses_monte_carlo()) {
    if (!seed) throw ValidationError(spec.label() + " is estimated by Monte Carlo: pass --seed or set PSL_DEFAULT_SEED");
    o.monte_carlo = MonteCarloOptions(*seed, samples);
  }
  return o;
}

MixtureDensity require_mixture(const AnyDensity& d, const char* what) {
  const auto* m = d.mixture();
  if (!m) throw ValidationError(std::string(what) + " must be an untransformed density");
  return *m;
}

std::string cell(double x) { return io::format9(x); }

std::string cell(const std::optional<double>& x) { return x ? io::format9(*x) : std::string(); }

void write_output(const std::string& text, const std::optional<std::string>& path, std::ostream& out) {
  if (!path) {
    out << text;
    return;
  }
  std::ofstream f(*path, std::ios::binary);
  if (!f) throw ValidationError("cannot open output file '" + *path + "'");
  f << text;
  if (!f) throw ValidationError("failed writing output file '" + *path + "'");
}

std::string format_of(const std::optional<std::string>& flag, const char* fallback) {
  return flag ? lower(*flag) : std::string(fallback);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Figures.

FigureTable figure1(const FigureOptions& o) {
  const std::size_t n =
      o.points.value_or(static_cast<std::size_t>(std::llround((o.sigma_max - o.sigma_min) / 0.05)) + 1);
  const auto grid = linspace(o.sigma_min, o.sigma_max, n);
  const auto curve = figure1_curve(grid);
  FigureTable t;
  t.id = 1;
  t.meta = {{"figure", "1: relative expected scores S(A) - S(B), negative favours A"},
            {"forecast_a", "N(0, sigma^2)"},
            {"forecast_b", "N(0, 1/sigma^2)"},
            {"truth", "N(0, 1)"},
            {"scores", "ignorance (bits), crps, pls = power(2), sps = pseudospherical(2)"},
            {"sigma_grid", cell(o.sigma_min) + ".." + cell(o.sigma_max) + " (" + std::to_string(n) + " points)"}};
  t.columns = {"sigma"};
  for (const auto& [name, values] : curve.columns) t.columns.push_back(name);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> row{grid[i]};
    for (const auto& [name, values] : curve.columns) row.push_back(values[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

struct PanelDefaults {
  AnyDensity a;
  AnyDensity b;
  ScoreSpec spec;
  double y_min;
  double y_max;
  const char* title;
};

PanelDefaults panel_defaults(int id) {
  switch (id) {
    case 2:
      return {figure2_a(), figure2_b(), ScoreSpec::crps(), -2.0, 3.0, "2: CRPS of two bimodal forecasts"};
    case 3:
      return {MixtureDensity::normal(-3.0, 0.5), MixtureDensity::normal(3.0, 1.0), ScoreSpec::power(2.0), -7.0, 7.0,
              "3: power score (alpha = 2) of two Gaussians"};
    default:
      return {MixtureDensity::normal(0.0, 1.0), MixtureDensity::normal(0.0, 5.0), ScoreSpec::pseudospherical(2.0),
              -5.0, 5.0, "4: pseudospherical score (beta = 2) of two Gaussians"};
  }
}

FigureTable figure_panel(const FigureOptions& o) {
  auto d = panel_defaults(o.id);
  if (!o.densities.empty()) {
    if (o.densities.size() != 2) throw ValidationError("figure overrides need exactly two --density values");
    d.a = io::density_from_string(o.densities[0]);
    d.b = io::density_from_string(o.densities[1]);
  }
  const auto spec = o.spec.value_or(d.spec);
  const auto sopts = score_options(spec, o.seed, o.samples);
  const double lo = o.y_min.value_or(d.y_min);
  const double hi = o.y_max.value_or(d.y_max);
  const std::size_t n = o.points.value_or(501);
  const auto grid = linspace(lo, hi, n);

  FigureTable t;
  t.id = o.id;
  t.meta = {{"figure", d.title},
            {"score", spec.label()},
            {"forecast_a", io::to_json(d.a).dump()},
            {"forecast_b", io::to_json(d.b).dump()},
            {"y_grid", cell(lo) + ".." + cell(hi) + " (" + std::to_string(n) + " points)"},
            {"relative", "S(A, y) - S(B, y), negative favours A"},
            {"unfortunate", "1 where the score favours the forecast with less density at y"}};
  if (sopts.monte_carlo) {
    t.meta.emplace_back("seed", std::to_string(sopts.monte_carlo->seed));
    t.meta.emplace_back("samples", std::to_string(sopts.monte_carlo->samples));
  }
  t.columns = {"y", "pdf_a", "pdf_b", "relative", "unfortunate"};
  for (double y : grid) {
    const double pa = d.a.pdf(y);
    const double pb = d.b.pdf(y);
    const double rel = score(spec, d.a, y, sopts).value - score(spec, d.b, y, sopts).value;
    const bool unfortunate = (rel < 0.0 && pa < pb) || (rel > 0.0 && pa > pb);
    t.rows.push_back({y, pa, pb, rel, unfortunate ? 1.0 : 0.0});
  }
  return t;
}

FigureTable figure5(const FigureOptions& o) {
  MixtureDensity a = figure5_a();
  MixtureDensity b = figure5_b();
  if (!o.densities.empty()) {
    if (o.densities.size() != 2) throw ValidationError("figure overrides need exactly two --density values");
    a = require_mixture(io::density_from_string(o.densities[0]), "figure 5 forecast");
    b = require_mixture(io::density_from_string(o.densities[1]), "figure 5 forecast");
  }
  const auto spec = o.spec.value_or(ScoreSpec::crps());
  const auto t_ = o.transform.value_or(Transform::cubic());
  const auto sopts = score_options(spec, o.seed, o.samples);
  const double lo = o.y_min.value_or(10.0);
  const double hi = o.y_max.value_or(13.0);
  const std::size_t n = o.points.value_or(601);
  const auto grid = linspace(lo, hi, n);
  const auto ta = pushforward(a, t_);
  const auto tb = pushforward(b, t_);

  FlipSearchOptions fopts;
  fopts.score = sopts;
  const auto flip = find_preference_flip(spec, a, b, t_, {lo, hi}, fopts);

  FigureTable t;
  t.id = 5;
  t.meta = {{"figure", "5: preference of " + spec.label() + " before and after a transformation"},
            {"score", spec.label()},
            {"forecast_a", io::to_json(a).dump()},
            {"forecast_b", io::to_json(b).dump()},
            {"transform", io::to_json(t_).dump()},
            {"y_grid", cell(lo) + ".." + cell(hi) + " (" + std::to_string(n) + " points)"},
            {"relative", "S(A, y) - S(B, y) before, S(tA, t(y)) - S(tB, t(y)) after"}};
  if (flip) {
    t.meta.emplace_back("flip_region", cell(flip->region_lo) + ".." + cell(flip->region_hi));
    t.meta.emplace_back("pre_threshold", flip->pre_threshold ? cell(*flip->pre_threshold) : "none");
    t.meta.emplace_back("post_threshold", flip->post_threshold ? cell(*flip->post_threshold) : "none");
  } else {
    t.meta.emplace_back("flip_region", "none");
  }
  t.columns = {"y", "y_star", "pdf_a", "pdf_b", "pdf_a_star", "pdf_b_star", "relative_pre", "relative_post"};
  for (double y : grid) {
    const double ys = t_.forward(y);
    const double pre = score(spec, a, y, sopts).value - score(spec, b, y, sopts).value;
    const double post = score(spec, ta, ys, sopts).value - score(spec, tb, ys, sopts).value;
    t.rows.push_back({y, ys, a.pdf(y), b.pdf(y), ta.pdf(ys), tb.pdf(ys), pre, post});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Subcommand configuration.

struct Common {
  std::string family;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<std::uint64_t> seed;
  std::size_t samples = 1'000'000;
  std::optional<std::string> format;
  std::optional<std::string> out;

  ScoreSpec spec() const { return spec_from_flags(family, alpha, beta); }
};

void add_spec_flags(CLI::App* sub, Common& c, const char* default_family) {
  c.family = default_family;
  sub->add_option("--family", c.family,
                  "ignorance | crps | energy | power | pseudospherical | naive_linear")
      ->capture_default_str();
  sub->add_option("--alpha", c.alpha, "power exponent (default 2)");
  sub->add_option("--beta", c.beta, "energy exponent (default 1) or pseudospherical exponent (default 2)");
}

void add_run_flags(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Monte-Carlo seed (falls back to PSL_DEFAULT_SEED)");
  sub->add_option("--samples", c.samples, "Monte-Carlo sample count")->capture_default_str();
  sub->add_option("--format", c.format, "csv | json")->check(CLI::IsMember({"csv", "json"}, CLI::ignore_case));
  sub->add_option("--out", c.out, "output file (default stdout)");
}

int cmd_score(const Common& c, const std::vector<std::string>& densities, const std::vector<double>& outcomes,
              std::optional<double> floor, std::ostream& out) {
  const auto spec = c.spec();
  const auto opts = score_options(spec, resolve_seed(c.seed), c.samples, floor);
  std::vector<AnyDensity> ds;
  for (const auto& s : densities) ds.push_back(io::density_from_string(s));

  json results = json::array();
  std::ostringstream csv;
  csv << "density,outcome,score,stderr,infinite\n";
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (double y : outcomes) {
      const auto v = score(spec, ds[i], y, opts);
      auto j = io::to_json(v);
      j["density"] = i;
      j["outcome"] = io::number(y);
      results.push_back(j);
      csv << i << ',' << cell(y) << ',' << cell(v.value) << ',' << cell(v.std_error) << ','
          << (v.infinite ? 1 : 0) << '\n';
    }
  if (format_of(c.format, "csv") == "json")
    write_output(dump({{"spec", io::to_json(spec)}, {"results", results}}), c.out, out);
  else
    write_output(csv.str(), c.out, out);
  return ok;
}

int cmd_expected(const Common& c, const std::vector<std::string>& densities, const std::string& truth_text,
                 std::ostream& out) {
  const auto spec = c.spec();
  const auto opts = score_options(spec, resolve_seed(c.seed), c.samples);
  const auto truth = io::density_from_string(truth_text);
  json results = json::array();
  std::ostringstream csv;
  csv << "density,expected,stderr,infinite\n";
  for (std::size_t i = 0; i < densities.size(); ++i) {
    const auto d = io::density_from_string(densities[i]);
    const auto v = expected_score(spec, d, truth, opts);
    auto j = io::to_json(v);
    j["density"] = i;
    results.push_back(j);
    csv << i << ',' << cell(v.value) << ',' << cell(v.std_error) << ',' << (v.infinite ? 1 : 0) << '\n';
  }
  if (format_of(c.format, "csv") == "json")
    write_output(dump({{"spec", io::to_json(spec)}, {"truth", io::to_json(truth)}, {"results", results}}), c.out,
                 out);
  else
    write_output(csv.str(), c.out, out);
  return ok;
}

// Seed for the random pair sets when none is given.
constexpr std::uint64_t default_pair_seed = 20240601;

int cmd_check_proper(const Common& c, std::size_t pairs, const std::vector<std::string>& densities,
                     const std::optional<std::string>& truth_text, std::ostream& out) {
  const auto spec = c.spec();
  const auto seed = resolve_seed(c.seed);
  ProprietyOptions popts;
  popts.score = score_options(spec, seed, c.samples);

  std::vector<PairSet> sets;
  if (truth_text) {
    PairSet custom{io::density_from_string(*truth_text), {}};
    custom.candidates.push_back(custom.truth);
    for (const auto& s : densities) {
      auto d = io::density_from_string(s);
      if (!(d == custom.truth)) custom.candidates.push_back(std::move(d));
    }
    sets.push_back(std::move(custom));
  } else {
    if (!densities.empty()) throw ValidationError("--density candidates need a --truth");
    sets.push_back(reference_pair_set());
    auto random = sample_pair_sets(seed.value_or(default_pair_seed), pairs);
    sets.insert(sets.end(), random.begin(), random.end());
  }
  const auto report = propriety_check(spec, sets, popts);

  if (format_of(c.format, "json") == "csv") {
    std::ostringstream csv;
    csv << "pair,candidate,expected_candidate,expected_truth,margin,stderr,l1_distance,improper,not_strict\n";
    for (const auto& f : report.findings)
      csv << f.pair_index << ',' << f.candidate_index << ',' << cell(f.expected_candidate) << ','
          << cell(f.expected_truth) << ',' << cell(f.margin) << ',' << cell(f.std_error) << ','
          << cell(f.l1_distance) << ',' << (f.improper ? 1 : 0) << ',' << (f.not_strict ? 1 : 0) << '\n';
    write_output(csv.str(), c.out, out);
  } else {
    write_output(dump(io::to_json(report, sets)), c.out, out);
  }
  return report.passed() ? ok : violation;
}

double parse_ratio(const std::string& text) {
  const auto t = lower(text);
  if (t == "inf" || t == "+inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ValidationError("--ratio must be a number or 'inf'");
  return v;
}

int cmd_find_witness(const Common& c, const std::string& ratio_text, std::ostream& out) {
  const auto spec = c.spec();
  const auto opts = score_options(spec, resolve_seed(c.seed), c.samples);
  const auto report = construct_witness(spec, parse_ratio(ratio_text), opts);
  if (format_of(c.format, "json") == "csv") {
    std::ostringstream csv;
    csv << "score,y,ratio,pdf1,pdf2,s1,s2,verified\n"
        << spec.label() << ',' << cell(report.y) << ',' << cell(report.ratio) << ',' << cell(report.p1.pdf(report.y))
        << ',' << cell(report.p2.pdf(report.y)) << ',' << cell(report.s1.value) << ',' << cell(report.s2.value) << ','
        << (report.verified ? 1 : 0) << '\n';
    write_output(csv.str(), c.out, out);
  } else {
    write_output(dump(io::to_json(report)), c.out, out);
  }
  if (!report.verified) throw NumericalError("witness construction did not verify");
  return ok;
}

int cmd_flip(const Common& c, const std::vector<std::string>& densities, const std::string& transform,
             const std::vector<double>& transform_params, double y_min, double y_max, std::size_t points,
             std::ostream& out) {
  const auto spec = c.spec();
  MixtureDensity a = figure5_a();
  MixtureDensity b = figure5_b();
  if (!densities.empty()) {
    if (densities.size() != 2) throw ValidationError("flip needs exactly two --density values");
    a = require_mixture(io::density_from_string(densities[0]), "flip forecast");
    b = require_mixture(io::density_from_string(densities[1]), "flip forecast");
  }
  const auto t = io::transform_from_name(lower(transform), transform_params);
  FlipSearchOptions fopts;
  fopts.grid_points = points;
  fopts.score = score_options(spec, resolve_seed(c.seed), c.samples);
  const auto flip = find_preference_flip(spec, a, b, t, {y_min, y_max}, fopts);

  if (format_of(c.format, "json") == "csv") {
    std::ostringstream csv;
    csv << "found,y,relative_pre,relative_post,region_lo,region_hi,pre_threshold,post_threshold\n";
    if (flip)
      csv << "1," << cell(flip->y) << ',' << cell(flip->relative_pre) << ',' << cell(flip->relative_post) << ','
          << cell(flip->region_lo) << ',' << cell(flip->region_hi) << ',' << cell(flip->pre_threshold) << ','
          << cell(flip->post_threshold) << '\n';
    else
      csv << "0,,,,,,,\n";
    write_output(csv.str(), c.out, out);
  } else {
    json j{{"spec", io::to_json(spec)},
           {"range", {io::number(y_min), io::number(y_max)}},
           {"flip_found", flip.has_value()},
           {"report", flip ? io::to_json(*flip) : json(nullptr)}};
    write_output(dump(j), c.out, out);
  }
  return ok;
}

int cmd_archive_eval(const Common& c, const std::string& path, const std::string& format_flag,
                     const std::vector<std::string>& systems, const std::vector<std::string>& families,
                     std::optional<double> floor, std::ostream& out) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open archive '" + path + "'");
  auto fmt = lower(format_flag);
  if (fmt == "auto") fmt = path.size() >= 4 && lower(path.substr(path.size() - 4)) == ".csv" ? "csv" : "jsonl";
  const auto archive = load_archive(in, fmt == "csv" ? ArchiveFormat::csv : ArchiveFormat::jsonl);

  std::vector<ScoreSpec> specs;
  const std::vector<std::string> defaults{"ignorance", "crps", "power", "pseudospherical"};
  bool needs_mc = false;
  for (const auto& f : families.empty() ? defaults : families) {
    // --alpha / --beta apply to whichever listed families take them.
    const auto fam = lower(f);
    const bool takes_alpha = fam == "power" || fam == "pls";
    const bool takes_beta = fam == "energy" || fam == "pseudospherical" || fam == "sps";
    specs.push_back(spec_from_flags(f, takes_alpha ? c.alpha : std::nullopt, takes_beta ? c.beta : std::nullopt));
    needs_mc = needs_mc || specs.back().uses_monte_carlo();
  }
  const auto opts = score_options(needs_mc ? ScoreSpec::energy(1.0) : ScoreSpec::crps(), resolve_seed(c.seed),
                                  c.samples, floor);
  const auto report = evaluate_archive(archive, specs, systems, opts);

  if (format_of(c.format, "json") == "csv") {
    std::ostringstream csv;
    csv << "system,score,value,stderr,count,infinite_count,probability_ratio\n";
    for (const auto& name : report.systems) {
      const auto& row = report.scores.at(name);
      for (std::size_t k = 0; k < specs.size(); ++k)
        csv << name << ',' << specs[k].label() << ',' << cell(row[k].value) << ',' << cell(row[k].std_error) << ','
            << row[k].count << ',' << row[k].infinite_count << ",\n";
    }
    for (const auto& r : report.relative_ignorance)
      csv << r.system1 << '-' << r.system2 << ",relative_ignorance," << cell(r.bits) << ',' << cell(r.std_error)
          << ',' << r.count << ",0," << cell(r.probability_ratio) << '\n';
    write_output(csv.str(), c.out, out);
  } else {
    write_output(dump(io::to_json(report)), c.out, out);
  }
  return ok;
}

int cmd_figure(FigureOptions fo, const Common& c, bool family_given, const std::optional<std::string>& transform,
               const std::vector<double>& transform_params, bool gnuplot, std::ostream& out) {
  if (family_given || c.alpha || c.beta) {
    if (fo.id == 1) throw ValidationError("figure 1 has fixed score families; --family does not apply");
    fo.spec = c.spec();
  }
  if (transform) {
    if (fo.id != 5) throw ValidationError("--transform applies only to figure 5");
    fo.transform = io::transform_from_name(lower(*transform), transform_params);
  }
  if (!fo.densities.empty() && fo.id == 1) throw ValidationError("figure 1 has fixed forecasts; --density does not apply");
  if (gnuplot && !c.out) throw ValidationError("--gnuplot needs --out; the script is written next to it as <out>.gp");
  fo.seed = resolve_seed(c.seed);
  fo.samples = c.samples;
  const auto table = make_figure(fo);
  const auto fmt = format_of(c.format, "csv");
  write_output(fmt == "json" ? figure_json(table) : figure_csv(table), c.out, out);
  if (gnuplot) {
    if (fmt == "json") throw ValidationError("--gnuplot needs CSV output");
    write_output(figure_gnuplot(table, *c.out), *c.out + ".gp", out);
  }
  return ok;
}

}  // namespace

// ---------------------------------------------------------------------------

MixtureDensity figure2_a() { return MixtureDensity::gaussian_mixture({{0.5, -1.0, 0.1}, {0.5, 1.0, 0.1}}); }
MixtureDensity figure2_b() { return MixtureDensity::gaussian_mixture({{0.5, 0.0, 0.1}, {0.5, 2.0, 0.1}}); }
MixtureDensity figure5_a() { return MixtureDensity::gaussian_mixture({{0.5, 10.0, 0.1}, {0.5, 12.0, 0.1}}); }
MixtureDensity figure5_b() { return MixtureDensity::gaussian_mixture({{0.5, 11.0, 0.1}, {0.5, 13.0, 0.1}}); }

FigureTable make_figure(const FigureOptions& opts) {
  switch (opts.id) {
    case 1: return figure1(opts);
    case 2:
    case 3:
    case 4: return figure_panel(opts);
    case 5: return figure5(opts);
    default: throw ValidationError("figure id must be 1..5");
  }
}

std::string figure_csv(const FigureTable& t) {
  std::ostringstream s;
  for (const auto& [k, v] : t.meta) s << "# " << k << ": " << v << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) s << (i ? "," : "") << t.columns[i];
  s << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << io::format9(row[i]);
    s << '\n';
  }
  return s.str();
}

std::string figure_json(const FigureTable& t) {
  json meta = json::object();
  for (const auto& [k, v] : t.meta) meta[k] = v;
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (double x : row) r.push_back(io::number(x));
    rows.push_back(r);
  }
  return dump({{"figure", t.id}, {"meta", meta}, {"columns", t.columns}, {"rows", rows}});
}

std::string figure_gnuplot(const FigureTable& t, const std::string& data_path) {
  std::ostringstream s;
  s << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set grid\n"
    << "data = '" << data_path << "'\n";
  switch (t.id) {
    case 1:
      s << "set xlabel 'sigma'\nset ylabel 'relative expected score'\n"
        << "plot data using 1:3 with lines, '' using 1:4 with lines, '' using 1:5 with lines, "
        << "'' using 1:6 with lines, 0 notitle lc 'black'\n";
      break;
    case 5:
      s << "set multiplot layout 2,2\n"
        << "set xlabel 'y'\nplot data using 1:3 with lines, '' using 1:4 with lines\n"
        << "plot data using 1:7 with lines, 0 notitle lc 'black'\n"
        << "set xlabel 't(y)'\nplot data using 2:5 with lines, '' using 2:6 with lines\n"
        << "plot data using 2:8 with lines, 0 notitle lc 'black'\n"
        << "unset multiplot\n";
      break;
    default:
      s << "set multiplot layout 2,1\n"
        << "set xlabel 'y'\nplot data using 1:2 with lines, '' using 1:3 with lines\n"
        << "plot data using 1:4 with lines, 0 notitle lc 'black'\n"
        << "unset multiplot\n";
  }
  return s.str();
}

std::optional<std::uint64_t> resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return flag;
  const char* env = std::getenv("PSL_DEFAULT_SEED");
  if (!env || !*env) return std::nullopt;
  const std::string text(env);
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ValidationError("PSL_DEFAULT_SEED must be an unsigned integer");
  return v;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Proper scoring rules for univariate probabilistic forecasts", "psl"};
  app.require_subcommand(1);

  // figure
  Common fig_c;
  FigureOptions fig_o;
  std::size_t fig_points = 0;
  std::optional<std::string> fig_transform;
  std::vector<double> fig_tparams;
  bool fig_gnuplot = false;
  auto* fig = app.add_subcommand("figure", "emit the data behind figures 1-5");
  fig->add_option("--id", fig_o.id, "figure number")->required()->check(CLI::Range(1, 5));
  fig->add_option("--points", fig_points, "grid points (default: fig 1 step 0.05, figs 2-4 501, fig 5 601)");
  fig->add_option("--sigma-min", fig_o.sigma_min, "figure 1 grid start")->capture_default_str();
  fig->add_option("--sigma-max", fig_o.sigma_max, "figure 1 grid end")->capture_default_str();
  fig->add_option("--y-min", fig_o.y_min, "outcome grid start (figs 2-5)");
  fig->add_option("--y-max", fig_o.y_max, "outcome grid end (figs 2-5)");
  fig->add_option("--density", fig_o.densities, "forecast A then forecast B as JSON (figs 2-5)");
  fig->add_option("--transform", fig_transform, "cubic | affine | exp (fig 5)");
  fig->add_option("--transform-params", fig_tparams, "transform parameters");
  fig->add_flag("--gnuplot", fig_gnuplot, "also write a gnuplot script to <out>.gp");
  add_spec_flags(fig, fig_c, "crps");
  add_run_flags(fig, fig_c);

  // score
  Common sc_c;
  std::vector<std::string> sc_densities;
  std::vector<double> sc_outcomes;
  std::optional<double> sc_floor;
  auto* sc = app.add_subcommand("score", "score forecasts against outcomes");
  add_spec_flags(sc, sc_c, "ignorance");
  sc->add_option("--density", sc_densities, "forecast density as JSON (repeatable)")->required();
  sc->add_option("--outcome", sc_outcomes, "verifying outcome (repeatable)")->required();
  sc->add_option("--density-floor", sc_floor, "ignorance only: floor applied to the density");
  add_run_flags(sc, sc_c);

  // expected
  Common ex_c;
  std::vector<std::string> ex_densities;
  std::string ex_truth;
  auto* ex = app.add_subcommand("expected", "expected score of forecasts under a true density");
  add_spec_flags(ex, ex_c, "ignorance");
  ex->add_option("--density", ex_densities, "forecast density as JSON (repeatable)")->required();
  ex->add_option("--truth", ex_truth, "true density as JSON")->required();
  add_run_flags(ex, ex_c);

  // check-proper
  Common cp_c;
  std::size_t cp_pairs = 50;
  std::vector<std::string> cp_densities;
  std::optional<std::string> cp_truth;
  auto* cp = app.add_subcommand("check-proper", "numerically check strict propriety");
  add_spec_flags(cp, cp_c, "crps");
  cp->add_option("--pairs", cp_pairs, "random (truth, forecast) pairs")->capture_default_str();
  cp->add_option("--truth", cp_truth, "check this truth against the --density candidates instead");
  cp->add_option("--density", cp_densities, "candidate forecast as JSON (repeatable)");
  add_run_flags(cp, cp_c);

  // find-witness
  Common fw_c;
  std::string fw_ratio;
  auto* fw = app.add_subcommand("find-witness", "construct an implausibility witness");
  add_spec_flags(fw, fw_c, "crps");
  fw->add_option("--ratio", fw_ratio, "density ratio p1(y)/p2(y), > 1 or inf")->required();
  add_run_flags(fw, fw_c);

  // flip
  Common fl_c;
  std::vector<std::string> fl_densities;
  std::string fl_transform = "cubic";
  std::vector<double> fl_tparams;
  double fl_ymin = 10.0, fl_ymax = 13.0;
  std::size_t fl_points = 2001;
  auto* fl = app.add_subcommand("flip", "search for a preference flip under a transformation");
  add_spec_flags(fl, fl_c, "crps");
  fl->add_option("--density", fl_densities, "forecast A then forecast B as JSON");
  fl->add_option("--transform", fl_transform, "cubic | affine | exp | identity")->capture_default_str();
  fl->add_option("--transform-params", fl_tparams, "transform parameters");
  fl->add_option("--y-min", fl_ymin)->capture_default_str();
  fl->add_option("--y-max", fl_ymax)->capture_default_str();
  fl->add_option("--points", fl_points, "search grid points")->capture_default_str();
  add_run_flags(fl, fl_c);

  // archive-eval
  Common ae_c;
  std::string ae_path;
  std::string ae_format = "auto";
  std::vector<std::string> ae_systems;
  std::vector<std::string> ae_families;
  std::optional<double> ae_floor;
  auto* ae = app.add_subcommand("archive-eval", "empirical scores of a forecast archive");
  ae->add_option("--archive", ae_path, "JSON-lines or CSV archive")->required();
  ae->add_option("--archive-format", ae_format, "auto | jsonl | csv")
      ->check(CLI::IsMember({"auto", "jsonl", "csv"}, CLI::ignore_case))
      ->capture_default_str();
  ae->add_option("--systems", ae_systems, "systems to score, e.g. A,B")->delimiter(',');
  ae->add_option("--family", ae_families,
                 "score family (repeatable; default ignorance, crps, power, pseudospherical)");
  ae->add_option("--alpha", ae_c.alpha, "power exponent (default 2)");
  ae->add_option("--beta", ae_c.beta, "energy or pseudospherical exponent");
  ae->add_option("--density-floor", ae_floor, "ignorance only: floor applied to the density");
  add_run_flags(ae, ae_c);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : validation;
  }

  try {
    if (*fig) {
      if (fig_points) fig_o.points = fig_points;
      return cmd_figure(fig_o, fig_c, fig->count("--family") > 0, fig_transform, fig_tparams, fig_gnuplot, out);
    }
    if (*sc) return cmd_score(sc_c, sc_densities, sc_outcomes, sc_floor, out);
    if (*ex) return cmd_expected(ex_c, ex_densities, ex_truth, out);
    if (*cp) return cmd_check_proper(cp_c, cp_pairs, cp_densities, cp_truth, out);
    if (*fw) return cmd_find_witness(fw_c, fw_ratio, out);
    if (*fl) return cmd_flip(fl_c, fl_densities, fl_transform, fl_tparams, fl_ymin, fl_ymax, fl_points, out);
    if (*ae) return cmd_archive_eval(ae_c, ae_path, ae_format, ae_systems, ae_families, ae_floor, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return validation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return validation;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return validation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return validation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return numerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return numerical;
  }
  return validation;
}

}  // namespace psl::cli
