#include "qchimera/chain_model.hpp"
#include "qchimera/eigensystem.hpp"
#include "qchimera/spectral_stats.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace qchimera;

namespace {

std::vector<double> progression(std::size_t n, double a, double d) {
  std::vector<double> v;
  for (std::size_t k = 0; k < n; ++k) v.push_back(a + d * double(k));
  return v;
}

std::vector<double> chain_levels(FrequencyProfile f) {
  const auto s = eigenvalues(build_hamiltonian(ChainParams::make(12, 3, 1.0, 1.46, f)));
  return remove_degeneracies(s, default_degeneracy_tolerance(s));
}

} // namespace

TEST(Degeneracies, Removal) {
  EXPECT_EQ(remove_degeneracies({0, 0, 1, 1, 1, 2}, 1e-9), (std::vector<double>{0, 1, 2}));
  const std::vector<double> distinct{0.1, 0.5, 0.9};
  EXPECT_EQ(remove_degeneracies(distinct, 1e-9), distinct);
  EXPECT_DOUBLE_EQ(default_degeneracy_tolerance({-3.0, 0.5, 2.0}), 3e-9);
}

TEST(Degeneracies, SineProfileHasNone) {
  const auto s = eigenvalues(build_hamiltonian(ChainParams::make(12, 3, 1.0, 1.46, FrequencyProfile::sine())));
  EXPECT_EQ(remove_degeneracies(s, default_degeneracy_tolerance(s)).size(), s.size());
}

TEST(Unfold, ArithmeticProgressionHasUnitSpacings) {
  const auto u = unfold(progression(500, -3.0, 0.013));
  const auto s = u.spacings();
  for (std::size_t k = 1; k + 1 < s.size(); ++k) EXPECT_NEAR(s[k], 1.0, 1e-6);
  const auto h = lsd(u);
  EXPECT_EQ(std::count_if(h.density.begin(), h.density.end(), [](double d) { return d > 0.0; }), 1);
  const auto nat = unfold(progression(500, -3.0, 0.013), 10, SplineKind::natural);
  for (double x : nat.spacings()) EXPECT_NEAR(x, 1.0, 1e-6);
}

TEST(Unfold, AffineInvariance) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(800);
  for (double& x : v) x = u(rng);
  std::sort(v.begin(), v.end());
  std::vector<double> w;
  for (double x : v) w.push_back(-2.0 + 7.5 * x);
  const auto a = unfold(v).spacings(), b = unfold(w).spacings();
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
}

TEST(Unfold, MeanSpacingIdentity) {
  const auto levels = chain_levels(FrequencyProfile::linear());
  const auto u = unfold(levels);
  const auto s = u.spacings();
  double sum = 0.0;
  for (double x : s) sum += x;
  EXPECT_NEAR(sum / double(s.size()), u.mean_spacing(), 1e-12);
  EXPECT_GE(u.mean_spacing(), 0.95);
  EXPECT_LE(u.mean_spacing(), 1.05);
}

TEST(Unfold, UniformSampleInteriorMean) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(4096);
  for (double& x : v) x = u(rng);
  std::sort(v.begin(), v.end());
  const auto s = unfold(v).spacings();
  double sum = 0.0;
  for (std::size_t k = 100; k + 100 < s.size(); ++k) sum += s[k];
  const double mean = sum / double(s.size() - 200);
  EXPECT_GE(mean, 0.95);
  EXPECT_LE(mean, 1.05);
}

TEST(Unfold, Errors) {
  EXPECT_THROW(unfold({1.0, 2.0, 3.0}), ParameterError);
  EXPECT_THROW(unfold(progression(50, 0, 0.1), 0), ParameterError);
  auto v = progression(50, 0, 0.1);
  v[10] = v[9];
  EXPECT_THROW(unfold(v), ParameterError);
}

TEST(Unfold, NaturalSplineReportsInterval) {
  // sparse top of the spectrum makes the natural spline dip
  auto v = progression(40, 0.0, 0.01);
  for (int k = 0; k < 5; ++k) v.push_back(10.0 + 30.0 * k);
  try {
    unfold(v, 10, SplineKind::natural);
    FAIL() << "expected an unfolding failure";
  } catch (const UnfoldingError& e) {
    EXPECT_LT(e.interval_begin(), e.interval_end());
  }
  EXPECT_NO_THROW(unfold(v, 10, SplineKind::monotone));
}

TEST(Histogram, AreaAndOutside) {
  const auto h = histogram({0.5, 1.0, 1.5, 5.0}, 4, 0.0, 2.0);
  EXPECT_EQ(h.samples, 3u);
  EXPECT_EQ(h.outside, 1u);
  EXPECT_NEAR(h.area(), 1.0, 1e-15);
  EXPECT_THROW(histogram({1.0}, 0), ParameterError);
}

TEST(Histogram, ExponentialSpacingsNearPoisson) {
  std::mt19937_64 rng(99);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> s(20000);
  for (double& x : s) x = e(rng);
  EXPECT_LE(distribution_distance(histogram(s), ReferenceKind::poisson), 0.15);
}

TEST(Reference, Densities) {
  EXPECT_EQ(reference_density(ReferenceKind::poisson, 0.0), 1.0);
  EXPECT_EQ(reference_density(ReferenceKind::wigner_dyson, 0.0), 0.0);
  EXPECT_THROW(reference_density(ReferenceKind::poisson, -1.0), ParameterError);
  for (auto kind : {ReferenceKind::wigner_dyson, ReferenceKind::poisson}) {
    double area = 0.0, mean = 0.0;
    const double h = 1e-3;
    for (int k = 0; k < 60000; ++k) {
      const double a = k * h, b = a + h, m = a + h / 2;
      const double fa = reference_density(kind, a), fb = reference_density(kind, b), fm = reference_density(kind, m);
      area += h / 6 * (fa + 4 * fm + fb);
      mean += h / 6 * (a * fa + 4 * m * fm + b * fb);
    }
    EXPECT_NEAR(area, 1.0, 1e-6);
    EXPECT_NEAR(mean, 1.0, 1e-6);
    EXPECT_NEAR(reference_cdf(kind, 60.0), 1.0, 1e-12);
  }
}

TEST(Distance, BinnedReferenceIsZeroAndSpikeIsFar) {
  auto h = histogram({}, 30, 0.0, 4.0);
  for (std::size_t b = 0; b < h.bins(); ++b)
    h.density[b] = (reference_cdf(ReferenceKind::poisson, h.edges[b + 1]) - reference_cdf(ReferenceKind::poisson, h.edges[b])) /
                   (h.edges[b + 1] - h.edges[b]);
  EXPECT_NEAR(distribution_distance(h, ReferenceKind::poisson), 0.0, 1e-9);
  EXPECT_GT(distribution_distance(histogram({1.0, 1.0, 1.0}), ReferenceKind::poisson), 0.5);
}

TEST(ChainLsd, LinearCloserToWignerDysonSineCloserToPoisson) {
  const auto h5 = lsd(unfold(chain_levels(FrequencyProfile::linear())));
  EXPECT_LT(distribution_distance(h5, ReferenceKind::wigner_dyson), distribution_distance(h5, ReferenceKind::poisson));
  EXPECT_NEAR(h5.area(), 1.0, 1e-12);
  const auto h6 = lsd(unfold(chain_levels(FrequencyProfile::sine())));
  EXPECT_LT(distribution_distance(h6, ReferenceKind::poisson), distribution_distance(h6, ReferenceKind::wigner_dyson));
}

TEST(ChainLsd, EqualFrequenciesCollapseToFewLevels) {
  const auto s = eigenvalues(build_hamiltonian(ChainParams::make(12, 3, 1.0, 1.46, FrequencyProfile::uniform(1.0))));
  const auto distinct = remove_degeneracies(s, default_degeneracy_tolerance(s));
  EXPECT_LT(distinct.size() * 10, s.size());
}

TEST(ReadSpectrum, ParsesAndReportsLine) {
  std::istringstream ok("# levels\n3.0\n\n1.5\n  -2\n");
  EXPECT_EQ(read_spectrum(ok), (std::vector<double>{-2.0, 1.5, 3.0}));
  std::istringstream bad("1.0\n2.0 3.0\n");
  try {
    read_spectrum(bad);
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream nan_line("1.0\nnan\n");
  EXPECT_THROW(read_spectrum(nan_line), IngestionError);
  EXPECT_THROW(read_spectrum_file("/nonexistent/levels.txt"), IngestionError);
}
