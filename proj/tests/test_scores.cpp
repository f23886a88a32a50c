#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "psl/analysis.hpp"
#include "psl/scores.hpp"

using namespace psl;

namespace {

const auto std_normal = MixtureDensity::normal(0, 1);
const auto unit_box = MixtureDensity::uniform(0, 1);

MixtureDensity fig2_a() { return MixtureDensity::gaussian_mixture({{0.5, -1, 0.1}, {0.5, 1, 0.1}}); }
MixtureDensity fig2_b() { return MixtureDensity::gaussian_mixture({{0.5, 0, 0.1}, {0.5, 2, 0.1}}); }

MixtureDensity to_density(const std::vector<oracle::Gaussian>& m) {
  std::vector<GaussianComponent> c;
  for (const auto& g : m) c.push_back({g.w, g.mu, g.sd});
  return MixtureDensity::gaussian_mixture(c);
}

// E|Z|^p for Z ~ N(0, 1).
double abs_moment(double p) { return std::pow(2.0, p / 2) * std::tgamma((p + 1) / 2) / std::sqrt(oracle::pi); }

}  // namespace

TEST(ScoreSpec, Metadata) {
  EXPECT_TRUE(ScoreSpec::ignorance().is_local());
  for (const auto& s : {ScoreSpec::crps(), ScoreSpec::energy(1.0), ScoreSpec::power(2), ScoreSpec::pseudospherical(2),
                        ScoreSpec::naive_linear()})
    EXPECT_FALSE(s.is_local() && s.is_strictly_proper()) << s.label();
  EXPECT_FALSE(ScoreSpec::naive_linear().is_strictly_proper());
  for (const auto& s : {ScoreSpec::ignorance(), ScoreSpec::crps(), ScoreSpec::energy(0.5), ScoreSpec::power(3),
                        ScoreSpec::pseudospherical(1.5)})
    EXPECT_TRUE(s.is_strictly_proper()) << s.label();
  EXPECT_EQ(ScoreSpec::power(2).label(), "power(2)");
  EXPECT_THROW(ScoreSpec::energy(0.0), DomainError);
  EXPECT_THROW(ScoreSpec::energy(2.0), DomainError);
  EXPECT_THROW(ScoreSpec::power(1.0), DomainError);
  EXPECT_THROW(ScoreSpec::pseudospherical(0.9), DomainError);
}

TEST(Ignorance, Examples) {
  EXPECT_NEAR(ignorance(std_normal, 0.0).value, std::log2(std::sqrt(2 * oracle::pi)), 1e-14);
  EXPECT_NEAR(ignorance(std_normal, 0.0).value, 1.3257481, 5e-8);
  EXPECT_EQ(ignorance(unit_box, 0.5).value, 0.0);
  const auto out = ignorance(unit_box, 2.0);
  EXPECT_TRUE(out.infinite);
  EXPECT_TRUE(std::isinf(out.value));
  EXPECT_FALSE(out.std_error);
}

TEST(Ignorance, FloorIsOptIn) {
  const auto floored = ignorance(unit_box, 2.0, 1e-6);
  EXPECT_FALSE(floored.infinite);
  EXPECT_NEAR(floored.value, -std::log2(1e-6), 1e-12);
  EXPECT_THROW(ignorance(unit_box, 2.0, 0.0), ValidationError);
}

TEST(Ignorance, FarTailStaysFinite) {
  // pdf underflows to 0 at 40 sigma but the log density does not.
  const auto s = ignorance(std_normal, 40.0);
  EXPECT_FALSE(s.infinite);
  EXPECT_NEAR(s.value, (800.0 + std::log(std::sqrt(2 * oracle::pi))) / std::log(2.0), 1e-9);
}

TEST(Ignorance, RatioIsExactlyMinusLog2R) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto m1 = to_density(oracle::random_mixture(rng));
    const auto m2 = to_density(oracle::random_mixture(rng));
    const double y = std::uniform_real_distribution<double>(-3, 3)(rng);
    const double r = m1.pdf(y) / m2.pdf(y);
    EXPECT_NEAR(ignorance(m1, y).value - ignorance(m2, y).value, -std::log2(r), 1e-9);
  }
}

TEST(Crps, Examples) {
  EXPECT_NEAR(crps(std_normal, 0.0).value, 2 * oracle::phi(0) - 1 / std::sqrt(oracle::pi), 1e-10);
  EXPECT_NEAR(crps(std_normal, 0.0).value, 0.2336950, 5e-8);
  EXPECT_NEAR(crps(MixtureDensity::normal(0, 1e-6), 1.0).value, 1.0, 1e-5);
  EXPECT_NEAR(crps(fig2_a(), 0.0).value, 0.4718, 5e-5);
  EXPECT_NEAR(crps(fig2_b(), 0.0).value, 0.5117, 5e-5);
  EXPECT_LT(crps(fig2_a(), 0.0).value, crps(fig2_b(), 0.0).value);
}

TEST(Crps, QuadratureMatchesClosedFormGrid) {
  for (double mu = -3; mu <= 3; mu += 1)
    for (double sd : {0.2, 1.0, 5.0})
      for (double y = -10; y <= 10; y += 1) {
        const double q = crps(MixtureDensity::normal(mu, sd), y).value;
        EXPECT_NEAR(q, oracle::crps_normal(mu, sd, y), 1e-7);
        EXPECT_NEAR(crps_gaussian(mu, sd, y), oracle::crps_normal(mu, sd, y), 1e-12);
      }
}

TEST(Crps, MixturesMatchPairwiseAbsoluteMoments) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const auto m = oracle::random_mixture(rng);
    const auto d = to_density(m);
    for (double y : {-4.0, -0.7, 0.0, 1.3, 5.0}) EXPECT_NEAR(crps(d, y).value, oracle::crps_mixture(m, y), 1e-8);
  }
  const std::vector<oracle::Gaussian> a{{0.5, -1, 0.1}, {0.5, 1, 0.1}};
  EXPECT_NEAR(crps(fig2_a(), 0.0).value, oracle::crps_mixture(a, 0.0), 1e-9);
}

TEST(Crps, PiecewiseUniformMatchesSimpson) {
  const auto d = MixtureDensity::piecewise_uniform({-1, 0, 2}, {0.25, 0.75});
  const auto F = [](double x) { return x < -1 ? 0.0 : x < 0 ? 0.25 * (x + 1) : x < 2 ? 0.25 + 0.375 * x : 1.0; };
  for (double y : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    const double ref = oracle::simpson([&](double x) { return F(x) * F(x); }, -3.0, y, 60000) +
                       oracle::simpson([&](double x) { return (1 - F(x)) * (1 - F(x)); }, y, 5.0, 60000);
    EXPECT_NEAR(crps(d, y).value, ref, 1e-8);
  }
}

TEST(Energy, BetaOneMatchesCrps) {
  const auto e = energy_score(std_normal, 0.0, 1.0, MonteCarloOptions(1));
  ASSERT_TRUE(e.std_error);
  EXPECT_LT(std::abs(e.value - 0.2336950), 3 * *e.std_error);
  // Near-degenerate forecast: 1 - sd / sqrt(pi), i.e. 1 up to 5.6e-7.
  const auto d = energy_score(MixtureDensity::normal(0, 1e-6), 1.0, 1.0, MonteCarloOptions(2));
  EXPECT_LT(std::abs(d.value - oracle::crps_normal(0, 1e-6, 1.0)), 3 * *d.std_error);
  EXPECT_NEAR(d.value, 1.0, 1e-6);
}

TEST(Energy, BetaOneAgreesWithCrpsOnRandomMixtures) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const auto m = oracle::random_mixture(rng);
    const auto d = to_density(m);
    const double y = std::uniform_real_distribution<double>(-3, 3)(rng);
    const auto e = energy_score(d, y, 1.0, MonteCarloOptions(100 + t));
    EXPECT_LT(std::abs(e.value - oracle::crps_mixture(m, y)), 3 * *e.std_error) << "trial " << t;
  }
}

TEST(Energy, BetaOneAndAHalf) {
  // E|X|^1.5 - 0.5 E|X - X'|^1.5 with X - X' ~ N(0, 2).
  const double ref = abs_moment(1.5) * (1.0 - 0.5 * std::pow(2.0, 0.75));
  const auto e = energy_score(std_normal, 0.0, 1.5, MonteCarloOptions(7));
  EXPECT_LT(std::abs(e.value - ref), 3 * *e.std_error);
}

TEST(Energy, SeedDeterminesResult) {
  const auto a = energy_score(std_normal, 0.3, 1.2, MonteCarloOptions(5, 20000));
  const auto b = energy_score(std_normal, 0.3, 1.2, MonteCarloOptions(5, 20000));
  const auto c = energy_score(std_normal, 0.3, 1.2, MonteCarloOptions(6, 20000));
  EXPECT_EQ(a.value, b.value);
  EXPECT_NE(a.value, c.value);
}

TEST(Energy, RejectsBadArguments) {
  EXPECT_THROW(energy_score(std_normal, 0.0, 0.0, MonteCarloOptions(1)), DomainError);
  EXPECT_THROW(energy_score(std_normal, 0.0, 2.0, MonteCarloOptions(1)), DomainError);
  EXPECT_THROW(energy_score(std_normal, 0.0, 1.0, MonteCarloOptions(1, 9999)), DomainError);
  EXPECT_THROW(score(ScoreSpec::energy(1.0), std_normal, 0.0), ValidationError);
}

TEST(Power, Examples) {
  EXPECT_NEAR(power_score(std_normal, 0.0, 2.0).value, -2 * oracle::phi(0) + oracle::gaussian_power_integral(1, 2),
              1e-14);
  EXPECT_NEAR(power_score(std_normal, 0.0, 2.0).value, -0.5157897, 1e-7);
  EXPECT_NEAR(power_score(MixtureDensity::normal(-3, 0.5), -5.0, 2.0).value,
              -2 * oracle::normal_pdf(-5, -3, 0.5) + oracle::gaussian_power_integral(0.5, 2), 1e-14);
  EXPECT_NEAR(power_score(MixtureDensity::normal(-3, 0.5), -5.0, 2.0).value, 0.5636544, 1e-6);
  EXPECT_NEAR(power_score(MixtureDensity::normal(3, 1), -5.0, 2.0).value, 0.2820948, 5e-8);
  EXPECT_NEAR(power_score(unit_box, 0.5, 2.0).value, -1.0, 1e-14);
  EXPECT_THROW(power_score(std_normal, 0.0, 1.0), DomainError);
}

TEST(Power, AlphaTwoIsProperLinearScore) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 30; ++t) {
    const auto d = to_density(oracle::random_mixture(rng));
    const double y = std::uniform_real_distribution<double>(-4, 4)(rng);
    EXPECT_NEAR(power_score(d, y, 2.0).value, -2 * d.pdf(y) + lp_norm_integral(d, 2.0), 1e-12);
  }
}

TEST(PseudoSpherical, Examples) {
  const double norm = std::sqrt(oracle::gaussian_power_integral(1, 2));
  EXPECT_NEAR(pseudospherical_score(std_normal, 0.0, 2.0).value, -oracle::phi(0) / norm, 1e-14);
  EXPECT_NEAR(pseudospherical_score(std_normal, 0.0, 2.0).value, -0.7511255, 5e-8);
  EXPECT_NEAR(pseudospherical_score(unit_box, 0.5, 2.0).value, -1.0, 1e-14);
  EXPECT_EQ(pseudospherical_score(unit_box, 3.0, 2.0).value, 0.0);
  EXPECT_THROW(pseudospherical_score(std_normal, 0.0, 1.0), DomainError);
}

TEST(PseudoSpherical, NormalisedByTheBetaNorm) {
  // -(p(y) / ||p||_b)^(b-1); the truth's expected score is then -||q||_b.
  for (double b : {1.5, 3.0})
    for (double y : {-1.0, 0.0, 2.0}) {
      const double norm = std::pow(oracle::gaussian_power_integral(1.3, b), 1.0 / b);
      EXPECT_NEAR(pseudospherical_score(MixtureDensity::normal(0, 1.3), y, b).value,
                  -std::pow(oracle::normal_pdf(y, 0, 1.3) / norm, b - 1), 1e-13);
    }
  const auto box = MixtureDensity::uniform(0, 2);
  EXPECT_NEAR(pseudospherical_score(box, 1.0, 3.0).value, -std::pow(0.5 / std::cbrt(0.25), 2), 1e-14);
}

TEST(PseudoSpherical, WiderForecastWinsAtOneAndAHalf) {
  // Direct evaluation: -phi(1.5 / s) / s / sqrt(1 / (2 sqrt(pi) s)).
  const auto direct = [](double s, double y) {
    return -oracle::normal_pdf(y, 0, s) / std::sqrt(oracle::gaussian_power_integral(s, 2));
  };
  const double s1 = pseudospherical_score(std_normal, 1.5, 2.0).value;
  const double s5 = pseudospherical_score(MixtureDensity::normal(0, 5), 1.5, 2.0).value;
  EXPECT_NEAR(s1, direct(1, 1.5), 1e-14);
  EXPECT_NEAR(s5, direct(5, 1.5), 1e-14);
  EXPECT_NEAR(s1, -0.2438548, 5e-8);
  EXPECT_NEAR(s5, -0.3211325, 5e-8);
  EXPECT_GT(s1, s5);
  EXPECT_NEAR(std_normal.pdf(1.5) / MixtureDensity::normal(0, 5).pdf(1.5), 1.6979, 1e-4);
}

TEST(PseudoSpherical, MonotoneInDensity) {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 20; ++t) {
    const auto d = to_density(oracle::random_mixture(rng));
    for (double beta : {1.5, 2.0, 3.0}) {
      for (double y1 = -4; y1 <= 4; y1 += 0.5)
        for (double y2 = -4; y2 <= 4; y2 += 0.5)
          if (d.pdf(y2) > 1e-100 && d.pdf(y1) > d.pdf(y2) * (1 + 1e-9))
            EXPECT_LT(pseudospherical_score(d, y1, beta).value, pseudospherical_score(d, y2, beta).value);
    }
  }
}

TEST(NaiveLinear, Examples) {
  EXPECT_NEAR(naive_linear_score(std_normal, 0.0).value, -0.3989423, 5e-8);
  EXPECT_EQ(naive_linear_score(unit_box, 0.5).value, -1.0);
  EXPECT_EQ(naive_linear_score(unit_box, 7.0).value, 0.0);
}

TEST(Dispatch, MatchesDirectCalls) {
  const auto d = MixtureDensity::gaussian_mixture({{0.3, -1, 0.5}, {0.7, 1, 1.5}});
  const double y = 0.4;
  EXPECT_EQ(score(ScoreSpec::ignorance(), d, y).value, ignorance(d, y).value);
  EXPECT_EQ(score(ScoreSpec::crps(), d, y).value, crps(d, y).value);
  EXPECT_EQ(score(ScoreSpec::power(2), d, y).value, power_score(d, y, 2).value);
  EXPECT_EQ(score(ScoreSpec::pseudospherical(3), d, y).value, pseudospherical_score(d, y, 3).value);
  EXPECT_EQ(score(ScoreSpec::naive_linear(), d, y).value, naive_linear_score(d, y).value);
  ScoreOptions o;
  o.monte_carlo = MonteCarloOptions(9);
  const auto e = score(ScoreSpec::energy(1.0), std_normal, 0.0, o);
  EXPECT_LT(std::abs(e.value - crps(std_normal, 0.0).value), 3 * *e.std_error);
  EXPECT_FALSE(score(ScoreSpec::crps(), d, y).std_error);
}

TEST(Crps, OutcomeDerivative) {
  EXPECT_EQ(crps_outcome_derivative(std_normal, 0.0), 0.0);
  EXPECT_NEAR(crps_outcome_derivative(std_normal, 1.959964), 2 * oracle::Phi(1.959964) - 1, 1e-14);
  EXPECT_NEAR(crps_outcome_derivative(std_normal, 1.959964), 0.95, 1e-6);
  const auto a = fig2_a();
  EXPECT_EQ(crps_outcome_derivative(a, 0.0), 0.0);
  EXPECT_LT(a.pdf(0.0), 1e-20);
  // Finite difference of the score itself.
  const auto d = MixtureDensity::gaussian_mixture({{0.4, -1, 0.6}, {0.6, 2, 1.1}});
  for (double y : {-2.0, 0.0, 1.5}) {
    const double h = 1e-4;
    const double fd = (crps(d, y + h).value - crps(d, y - h).value) / (2 * h);
    EXPECT_NEAR(crps_outcome_derivative(d, y), fd, 1e-6);
  }
}

TEST(Crps, ArgminIsTheMedian) {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 20; ++t) {
    const auto m = oracle::random_mixture(rng);
    const auto d = to_density(m);
    EXPECT_NEAR(crps_argmin_outcome(d, d.support()), oracle::mixture_median(m), 1e-6);
  }
  EXPECT_NEAR(crps_argmin_outcome(fig2_a(), {-3, 3}), 0.0, 1e-6);
}
