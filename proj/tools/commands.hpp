#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psl/psl.hpp"

namespace psl::cli {

enum ExitCode : int { ok = 0, validation = 2, numerical = 3, violation = 4 };

/// Figure data as a table plus the settings that produced it.
struct FigureTable {
  int id = 0;
  std::vector<std::pair<std::string, std::string>> meta;  // printed as "# key: value"
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct FigureOptions {
  int id = 1;
  std::optional<std::size_t> points;
  double sigma_min = 1.05;
  double sigma_max = 3.0;
  std::optional<double> y_min;
  std::optional<double> y_max;
  std::vector<std::string> densities;  // JSON overrides for A and B (figures 2-5)
  std::optional<ScoreSpec> spec;       // family override (figures 2-5)
  std::optional<Transform> transform;  // figure 5
  std::optional<std::uint64_t> seed;
  std::size_t samples = 1'000'000;
};

// Default densities of figures 2-5.
MixtureDensity figure2_a();
MixtureDensity figure2_b();
MixtureDensity figure5_a();
MixtureDensity figure5_b();

FigureTable make_figure(const FigureOptions& opts);

std::string figure_csv(const FigureTable& t);
std::string figure_json(const FigureTable& t);
std::string figure_gnuplot(const FigureTable& t, const std::string& data_path);

/// Seed from --seed, else PSL_DEFAULT_SEED, else nothing.
std::optional<std::uint64_t> resolve_seed(std::optional<std::uint64_t> flag);

/// Runs one subcommand. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace psl::cli
