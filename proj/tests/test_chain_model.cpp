#include "qchimera/chain_model.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace qchimera;

namespace {

ChainParams fig2() { return ChainParams::make(12, 3, 1.0, std::numbers::pi / 2, FrequencyProfile::uniform(1.0)); }

ChainParams small(double alpha = 1.46, double nu = 1.0, FrequencyProfile f = FrequencyProfile::linear()) {
  return ChainParams::make(6, 2, nu, alpha, f);
}

} // namespace

TEST(ChainParams, RangeValidation) {
  EXPECT_THROW(ChainParams::make(4, 1, 1.0, 1.0, FrequencyProfile::uniform(1.0)), ParameterError);
  EXPECT_THROW(ChainParams::make(4, 2, 1.0, 1.0, FrequencyProfile::uniform(1.0)), ParameterError);
  EXPECT_THROW(ChainParams::make(12, 6, 1.0, 1.0, FrequencyProfile::uniform(1.0)), ParameterError);
  EXPECT_NO_THROW(ChainParams::make(12, 5, 1.0, 1.0, FrequencyProfile::uniform(1.0)));
  EXPECT_THROW(ChainParams::make(6, 2, 1.0, 1.0, FrequencyProfile::list({1, 2, 3})), ParameterError);
  EXPECT_THROW(ChainParams::make(6, 2, std::nan(""), 1.0, FrequencyProfile::uniform(1.0)), ParameterError);
}

TEST(FrequencyProfile, Generators) {
  const auto lin = FrequencyProfile::linear().generate(12);
  ASSERT_EQ(lin.size(), 12u);
  EXPECT_DOUBLE_EQ(lin.front(), 0.2 + 0.4 / 12);
  EXPECT_DOUBLE_EQ(lin.back(), 0.6);
  const auto sine = FrequencyProfile::sine().generate(12);
  EXPECT_DOUBLE_EQ(sine.back(), 0.6);
  EXPECT_NEAR(sine.front(), 0.2 + 0.4 * std::sin(std::numbers::pi / 288), 1e-15);
  EXPECT_EQ(FrequencyProfile::uniform(0.7).generate(5), std::vector<double>(5, 0.7));
}

TEST(CouplingWindow, ExcludesSelfAndWraps) {
  const auto p = fig2();
  const auto w = coupling_window(p, 1);
  EXPECT_EQ(std::set<int>(w.begin(), w.end()), (std::set<int>{10, 11, 12, 2, 3, 4}));
}

TEST(SiteObservable, DiagonalWithoutCoupling) {
  const auto p = small(1.46, 0.0);
  for (int i = 1; i <= p.sites; ++i) {
    const auto ii = build_site_observable(p, i);
    const auto expected = 0.5 * p.omega(i) * embed_single(pauli::z(), i, p.sites);
    EXPECT_LE(max_abs_difference(ii, expected), 1e-15);
  }
  EXPECT_THROW(build_site_observable(p, 0), ParameterError);
}

TEST(SiteObservable, CoherentExpectationMatchesClosedForm) {
  const auto p = ChainParams::make(7, 2, 0.8, 1.1, FrequencyProfile::linear());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, std::numbers::pi);
  std::vector<SparseOperator> ops;
  for (int i = 1; i <= p.sites; ++i) ops.push_back(build_site_observable(p, i));
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> th(7);
    for (double& t : th) t = u(rng);
    const StateVector v = coherent_product_state(th);
    for (int i = 1; i <= p.sites; ++i) {
      const Complex e = v.dot(qchimera::apply(ops[static_cast<std::size_t>(i - 1)], v));
      EXPECT_NEAR(e.real(), coherent_site_expectation_closed_form(p, th, i), 1e-10);
      EXPECT_NEAR(e.imag(), 0.0, 1e-10);
    }
  }
}

TEST(Hamiltonian, MatchesSumOfSiteObservables) {
  for (double alpha : {0.3, 1.46, std::numbers::pi / 2}) {
    const auto p = ChainParams::make(8, 3, 1.3, alpha, FrequencyProfile::sine());
    EXPECT_LE(max_abs_difference(build_hamiltonian(p), build_hamiltonian_from_observables(p)), 1e-12);
  }
}

TEST(Hamiltonian, CosineCouplingsCancel) {
  const auto p = ChainParams::make(8, 3, 1.0, 0.4, FrequencyProfile::linear());
  SparseOperator sum(p.sites);
  for (int i = 1; i <= p.sites; ++i) sum += site_observable_terms(p, i).antisymmetric;
  EXPECT_LE(sum.pruned(0.0).norm_inf(), 1e-13);
}

TEST(Hamiltonian, DependsOnAlphaThroughSine) {
  const auto a = build_hamiltonian(small(1.0)), b = build_hamiltonian(small(std::numbers::pi - 1.0));
  EXPECT_LE(max_abs_difference(a, b), 1e-15);
}

TEST(Hamiltonian, AllUpDiagonal) {
  const auto h = build_hamiltonian(fig2());
  const auto up = BasisIndex::all_up(12).value();
  EXPECT_NEAR(h.coeff(up, up).real(), 20.0, 1e-12);
}

TEST(Hamiltonian, RaisesUpCountByZeroOrTwo) {
  const auto h = build_hamiltonian(ChainParams::make(10, 3, 1.0, 1.46, FrequencyProfile::linear()));
  EXPECT_TRUE(h.is_real());
  for (const auto& e : h.entries()) {
    const int d = up_count(e.row) - up_count(e.col);
    EXPECT_TRUE(d == 0 || d == 2);
    if (d == 0) {
      EXPECT_EQ(e.row, e.col);
    }
  }
}

TEST(CoherentState, Limits) {
  const std::vector<double> zeros(5, 0.0), pis(5, std::numbers::pi);
  EXPECT_TRUE(coherent_product_state(zeros).isApprox(basis_state(BasisIndex::all_up(5))));
  EXPECT_LE((coherent_product_state(pis) - basis_state(BasisIndex::all_down(5))).norm(), 1e-15);
  for (double t : {0.0, 0.4, 1.7, 3.0})
    EXPECT_NEAR((CoherentState{t, 0.9}).expectation(pauli::z()).real(), std::cos(t), 1e-15);
  EXPECT_TRUE(is_normalized(coherent_product_state(std::vector<double>{0.3, 1.2, 2.2})));
}

TEST(QuasiHermiticity, ResidualVanishesWithoutField) {
  EXPECT_LE(quasi_hermiticity_residual(ChainParams::make(8, 3, 1.0, 1.46, FrequencyProfile::uniform(0.0))), 1e-12);
  EXPECT_LE(quasi_hermiticity_residual(ChainParams::make(8, 3, 0.0, 1.46, FrequencyProfile::uniform(0.0))), 0.0);
  EXPECT_GT(quasi_hermiticity_residual(ChainParams::make(8, 3, 1.0, std::numbers::pi / 2, FrequencyProfile::uniform(1.0))),
            0.1);
}

TEST(IsingZ, DiagonalWithLevelsByUpCount) {
  const auto p = ChainParams::make(8, 2, 1.0, 1.46, FrequencyProfile::uniform(0.5));
  const auto h = build_ising_z(p, 0.0);
  std::set<long long> levels;
  for (const auto& e : h.entries()) {
    EXPECT_EQ(e.row, e.col);
    levels.insert(std::llround(e.value.real() * 1e9));
  }
  EXPECT_EQ(levels.size(), 9u);
  EXPECT_DOUBLE_EQ(default_ising_coupling(p), 0.25);
}
