#pragma once

// Per-spin diagnostics of a chain state: single-spin reduced density
// matrices, Husimi distributions, populations, coherences and linear
// entropies, plus the chain averages <S> and D.

#include "qchimera/errors.hpp"
#include "qchimera/spin_ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace qchimera {

// 2x2 reduced state of one spin, (|up>, |down>) ordering.
struct SingleSpinDensity {
  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  bool renormalized = false; // input state did not have unit norm

  double population_up() const { return rho(0, 0).real(); }
  double coherence() const { return std::abs(rho(0, 1)); }
  double purity() const { return (rho * rho).trace().real(); }
  double linear_entropy() const { return 1.0 - purity(); }
};

// rho_i = tr_{all but i} |psi><psi|
inline SingleSpinDensity reduced_density(const StateVector& state, int site) {
  const auto dim = static_cast<std::uint64_t>(state.size());
  if (dim < 2 || (dim & (dim - 1)) != 0) throw ParameterError("state length must be a power of two");
  const int sites = std::countr_zero(dim);
  if (site < 1 || site > sites)
    throw ParameterError("site " + std::to_string(site) + " outside [1, " + std::to_string(sites) + "]");
  SingleSpinDensity out;
  const double norm2 = state.squaredNorm();
  if (norm2 == 0.0) throw ParameterError("cannot form a density matrix from the zero vector");
  out.renormalized = std::abs(norm2 - 1.0) > 1e-12;
  const std::uint64_t mask = std::uint64_t{1} << (site - 1);
  double uu = 0.0, dd = 0.0;
  Complex ud{0};
  for (std::uint64_t s = 0; s < dim; ++s) {
    if (!(s & mask)) continue;
    const Complex up = state(static_cast<Eigen::Index>(s));
    const Complex down = state(static_cast<Eigen::Index>(s ^ mask));
    uu += std::norm(up);
    dd += std::norm(down);
    ud += up * std::conj(down);
  }
  out.rho << uu, ud, std::conj(ud), dd;
  out.rho /= norm2;
  return out;
}

// |<theta,phi| rho |theta,phi>|
inline double husimi(const SingleSpinDensity& d, double theta, double phi) {
  const Complex a{std::cos(theta / 2.0)};
  const Complex b = std::polar(std::sin(theta / 2.0), phi);
  const Complex v = std::conj(a) * (d.rho(0, 0) * a + d.rho(0, 1) * b) +
                    std::conj(b) * (d.rho(1, 0) * a + d.rho(1, 1) * b);
  return std::abs(v);
}

// Regular (theta, phi) sampling, endpoints included.
struct HusimiGrid {
  int theta_steps = 64;
  int phi_steps = 128;

  double theta(int k) const { return theta_steps > 1 ? std::numbers::pi * k / (theta_steps - 1) : 0.0; }
  double phi(int k) const { return phi_steps > 1 ? 2.0 * std::numbers::pi * k / (phi_steps - 1) : 0.0; }
};

struct SpinProfile {
  std::vector<SingleSpinDensity> densities;
  std::vector<double> population;
  std::vector<double> coherence;
  std::vector<double> entropy;
  HusimiGrid grid;
  // husimi[i][t * phi_steps + p]; empty when not requested
  std::vector<std::vector<double>> husimi;

  int sites() const { return static_cast<int>(population.size()); }
};

inline SpinProfile chain_profile(const StateVector& state, const HusimiGrid& grid = {}, bool with_husimi = true) {
  const auto dim = static_cast<std::uint64_t>(state.size());
  if (dim < 2 || (dim & (dim - 1)) != 0) throw ParameterError("state length must be a power of two");
  const int sites = std::countr_zero(dim);
  SpinProfile p;
  p.grid = grid;
  for (int i = 1; i <= sites; ++i) {
    SingleSpinDensity d = reduced_density(state, i);
    p.population.push_back(d.population_up());
    p.coherence.push_back(d.coherence());
    p.entropy.push_back(d.linear_entropy());
    if (with_husimi) {
      std::vector<double> h(static_cast<std::size_t>(grid.theta_steps * grid.phi_steps));
      for (int t = 0; t < grid.theta_steps; ++t)
        for (int f = 0; f < grid.phi_steps; ++f)
          h[static_cast<std::size_t>(t * grid.phi_steps + f)] = husimi(d, grid.theta(t), grid.phi(f));
      p.husimi.push_back(std::move(h));
    }
    p.densities.push_back(std::move(d));
  }
  return p;
}

struct DisorderPoint {
  double mean_entropy = 0.0; // <S> = (1/N) sum_i S_i
  double disorder = 0.0;     // D = 1 - tr<rho>^2 - <S>
};

inline DisorderPoint disorder_entanglement(const StateVector& state) {
  const auto dim = static_cast<std::uint64_t>(state.size());
  if (dim < 2 || (dim & (dim - 1)) != 0) throw ParameterError("state length must be a power of two");
  const int sites = std::countr_zero(dim);
  Eigen::Matrix2cd mean = Eigen::Matrix2cd::Zero();
  double s_sum = 0.0;
  for (int i = 1; i <= sites; ++i) {
    const SingleSpinDensity d = reduced_density(state, i);
    mean += d.rho;
    s_sum += d.linear_entropy();
  }
  mean /= double(sites);
  DisorderPoint out;
  out.mean_entropy = s_sum / sites;
  out.disorder = 1.0 - (mean * mean).trace().real() - out.mean_entropy;
  return out;
}

enum class SpinLabel { entangled, regular, indeterminate };

struct RegionThresholds {
  double high = 0.3;
  double low = 0.05;

  void validate() const {
    if (!(0.0 <= low && low < high && high <= 0.5))
      throw ParameterError("region thresholds need 0 <= low < high <= 1/2");
  }
};

inline std::vector<SpinLabel> classify_regions(const SpinProfile& profile, const RegionThresholds& th = {}) {
  th.validate();
  std::vector<SpinLabel> out;
  out.reserve(profile.entropy.size());
  for (double s : profile.entropy)
    out.push_back(s >= th.high ? SpinLabel::entangled : (s <= th.low ? SpinLabel::regular : SpinLabel::indeterminate));
  return out;
}

// Number of maximal runs of `label` on the closed chain.
inline int circular_runs(const std::vector<SpinLabel>& labels, SpinLabel label) {
  const auto n = labels.size();
  if (n == 0) return 0;
  const auto count = std::count(labels.begin(), labels.end(), label);
  if (count == 0) return 0;
  if (static_cast<std::size_t>(count) == n) return 1;
  int runs = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] == label && labels[(i + n - 1) % n] != label) ++runs;
  return runs;
}

// Every spin labelled, and both entangled and regular spins present.
inline bool is_chimera_pattern(const std::vector<SpinLabel>& labels) {
  return circular_runs(labels, SpinLabel::indeterminate) == 0 && circular_runs(labels, SpinLabel::entangled) > 0 &&
         circular_runs(labels, SpinLabel::regular) > 0;
}

inline char label_char(SpinLabel l) {
  switch (l) {
  case SpinLabel::entangled: return '*';
  case SpinLabel::regular: return '.';
  case SpinLabel::indeterminate: return '?';
  }
  return '?';
}

} // namespace qchimera
