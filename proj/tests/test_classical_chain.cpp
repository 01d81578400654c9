#include "qchimera/classical_chain.hpp"

#include <gtest/gtest.h>

using namespace qchimera;

namespace {

OscillatorParams small() { return {40, 8, 0.3, 1.0, 1.46}; }

double max_phase_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, phase_distance(a[i], b[i]));
  return m;
}

} // namespace

TEST(Phase, Wrap) {
  EXPECT_DOUBLE_EQ(wrap_phase(0.5), 0.5);
  EXPECT_DOUBLE_EQ(wrap_phase(std::numbers::pi), -std::numbers::pi);
  EXPECT_NEAR(wrap_phase(3 * std::numbers::pi / 2), -std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(wrap_phase(-7.0), -7.0 + 2 * std::numbers::pi, 1e-15);
  EXPECT_NEAR(phase_distance(3.1, -3.1), 2 * std::numbers::pi - 6.2, 1e-12);
}

TEST(Params, Validation) {
  EXPECT_NO_THROW(OscillatorParams{}.validate());
  EXPECT_THROW((OscillatorParams{150, 1}.validate()), ParameterError);
  EXPECT_THROW((OscillatorParams{150, 75}.validate()), ParameterError);
  EXPECT_THROW(OscillatorChain(small(), std::vector<double>(3, 0.0)), ParameterError);
}

TEST(Derivative, MatchesDirectSum) {
  const auto p = small();
  const auto th = random_phases(p.sites, 5);
  const auto d = phase_derivative(p, th);
  for (int i = 0; i < p.sites; ++i) {
    double s = 0.0;
    for (int j = i - p.range; j <= i + p.range; ++j)
      s += std::sin(th[static_cast<std::size_t>(i)] - th[static_cast<std::size_t>((j + p.sites) % p.sites)] + p.alpha);
    EXPECT_NEAR(d[static_cast<std::size_t>(i)], p.omega - p.nu / (2.0 * p.range) * s, 1e-12);
  }
}

TEST(Integrate, RotationalSymmetry) {
  const auto p = small();
  const auto th = random_phases(p.sites, 3);
  std::vector<double> shifted;
  for (double x : th) shifted.push_back(x + 0.8);
  OscillatorChain a(p, th), b(p, shifted);
  integrate(a, 0.01, 1000);
  integrate(b, 0.01, 1000);
  for (std::size_t i = 0; i < th.size(); ++i) EXPECT_LE(phase_distance(b.phases[i], a.phases[i] + 0.8), 1e-9);
}

TEST(Integrate, IndexShiftEquivariance) {
  const auto p = small();
  const auto th = random_phases(p.sites, 4);
  std::vector<double> rolled(th.size());
  for (std::size_t i = 0; i < th.size(); ++i) rolled[(i + 7) % th.size()] = th[i];
  OscillatorChain a(p, th), b(p, rolled);
  integrate(a, 0.01, 500);
  integrate(b, 0.01, 500);
  for (std::size_t i = 0; i < th.size(); ++i) EXPECT_LE(phase_distance(b.phases[(i + 7) % th.size()], a.phases[i]), 1e-9);
}

TEST(Integrate, StepHalvingConverges) {
  const OscillatorParams p;
  const auto th = random_phases(p.sites, 1);
  OscillatorChain a(p, th), b(p, th);
  integrate(a, 0.01, 10000);
  integrate(b, 0.005, 20000);
  EXPECT_LE(max_phase_gap(a.phases, b.phases), 1e-6);
  EXPECT_THROW(integrate(a, 0.0, 1), ParameterError);
}

TEST(Entropy, Examples) {
  EXPECT_EQ(local_entropy(std::vector<double>(30, 0.4)), std::vector<double>(30, 0.0));
  std::vector<double> spread;
  for (int k = 0; k < 11; ++k) spread.push_back(-std::numbers::pi + (k + 0.5) * 2 * std::numbers::pi / 20);
  const auto s = local_entropy(spread, 20, 5);
  EXPECT_NEAR(s[5], std::log(11.0), 1e-12);
  EXPECT_THROW(local_entropy(spread, 0, 5), ParameterError);
}

TEST(Entropy, Bounds) {
  const auto s = local_entropy(random_phases(150, 9));
  for (double x : s) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, std::log(11.0) + 1e-12);
  }
  const auto wide = local_entropy(random_phases(150, 9), 20, 30);
  for (double x : wide) EXPECT_LE(x, std::log(20.0) + 1e-12);
}

TEST(Snapshot, Reproducible) {
  const auto a = chimera_snapshot({}, 4), b = chimera_snapshot({}, 4);
  EXPECT_EQ(a.phases, b.phases);
  EXPECT_EQ(a.entropy, b.entropy);
  EXPECT_DOUBLE_EQ(a.t_end, 100.0);
}

TEST(Snapshot, ZeroLagSynchronizes) {
  OscillatorParams p;
  p.alpha = 0.0;
  const auto s = chimera_snapshot(p, 2, 200.0);
  double mean = 0.0;
  for (double x : s.entropy) mean += x / double(s.entropy.size());
  EXPECT_LT(mean, 0.05);
}

TEST(Snapshot, SomeSeedShowsChimeraBlocks) {
  bool any = false;
  for (std::uint64_t seed = 1; seed <= 10 && !any; ++seed) any = has_chimera_blocks(chimera_snapshot({}, seed).entropy);
  EXPECT_TRUE(any);
}

TEST(Runs, Circular) {
  const std::vector<double> v{0.1, 0.1, 2.0, 2.0, 2.0, 0.1};
  const auto lo = longest_circular_run(v, [](double x) { return x < 0.3; });
  EXPECT_EQ(lo.first, 5);
  EXPECT_EQ(lo.second, 3);
  EXPECT_EQ(longest_circular_run(v, [](double x) { return x > 1.5; }).second, 3);
  EXPECT_EQ(longest_circular_run(v, [](double) { return true; }).second, 6);
  EXPECT_FALSE(has_chimera_blocks(v));
}
