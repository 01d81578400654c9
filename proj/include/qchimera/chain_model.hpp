#pragma once

// The long-range quasi-hermitian spin chain: site observables I_i, the
// Hamiltonian H = sum_i I_i, spin coherent product states and the
// nearest-neighbour Ising-Z reference chain. hbar = 1 throughout.

#include "qchimera/errors.hpp"
#include "qchimera/spin_ops.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace qchimera {

// Larmor frequency profile omega_i, i = 1..N.
struct FrequencyProfile {
  enum class Kind { uniform, linear, sine, explicit_list };

  Kind kind = Kind::uniform;
  double value = 1.0;                 // uniform only
  std::vector<double> explicit_values; // explicit_list only

  static FrequencyProfile uniform(double omega) { return {Kind::uniform, omega, {}}; }
  // omega_i = 0.2 + i * 0.4 / N
  static FrequencyProfile linear() { return {Kind::linear, 0.0, {}}; }
  // omega_i = 0.2 + 0.4 sin(i^2 / N^2 * pi / 2)
  static FrequencyProfile sine() { return {Kind::sine, 0.0, {}}; }
  static FrequencyProfile list(std::vector<double> values) {
    return {Kind::explicit_list, 0.0, std::move(values)};
  }

  std::vector<double> generate(int sites) const {
    std::vector<double> out(static_cast<std::size_t>(sites));
    const double n = sites;
    for (int i = 1; i <= sites; ++i) {
      double w = 0.0;
      switch (kind) {
      case Kind::uniform: w = value; break;
      case Kind::linear: w = 0.2 + i * 0.4 / n; break;
      case Kind::sine: w = 0.2 + 0.4 * std::sin(double(i) * i / (n * n) * std::numbers::pi / 2.0); break;
      case Kind::explicit_list:
        if (explicit_values.size() != static_cast<std::size_t>(sites))
          throw ParameterError("explicit frequency list has " + std::to_string(explicit_values.size()) +
                               " entries for " + std::to_string(sites) + " sites");
        w = explicit_values[static_cast<std::size_t>(i - 1)];
        break;
      }
      out[static_cast<std::size_t>(i - 1)] = w;
    }
    return out;
  }

  static const char* name(Kind k) {
    switch (k) {
    case Kind::uniform: return "uniform";
    case Kind::linear: return "linear";
    case Kind::sine: return "sine";
    case Kind::explicit_list: return "file";
    }
    return "?";
  }
};

struct ChainParams {
  int sites = 12;
  int range = 3;       // M
  double nu = 1.0;
  double alpha = 1.46;
  std::vector<double> omegas;
  // Admits 1 <= M with 2M < N, below the model's nominal M >= 2 (small oracle chains).
  bool relaxed_range = false;

  static ChainParams make(int sites, int range, double nu, double alpha, const FrequencyProfile& profile) {
    ChainParams p{sites, range, nu, alpha, profile.generate(sites), false};
    p.validate();
    return p;
  }

  // Coupling prefactor nu / (2M).
  double coupling() const { return nu / (2.0 * range); }

  void validate() const {
    check_site_count(sites);
    if (relaxed_range) {
      if (range < 1 || 2 * range >= sites)
        throw ParameterError("coupling range M=" + std::to_string(range) + " needs 1 <= M and 2M < N");
    } else if (range < 2 || 2 * range > sites - 2) {
      throw ParameterError("coupling range M=" + std::to_string(range) + " outside {2, ..., N/2-1} for N=" +
                           std::to_string(sites));
    }
    if (omegas.size() != static_cast<std::size_t>(sites))
      throw ParameterError("expected " + std::to_string(sites) + " Larmor frequencies, got " +
                           std::to_string(omegas.size()));
    for (double w : omegas)
      if (!std::isfinite(w)) throw ParameterError("Larmor frequencies must be finite");
    if (!std::isfinite(nu) || !std::isfinite(alpha)) throw ParameterError("nu and alpha must be finite");
  }

  double omega(int site) const { return omegas[static_cast<std::size_t>(site - 1)]; }
};

// Coupling window of site i: j = i-M..i+M (mod N), j != i.
inline std::vector<int> coupling_window(const ChainParams& p, int i) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(2 * p.range));
  for (int d = -p.range; d <= p.range; ++d)
    if (d != 0) out.push_back(wrap_site(i + d, p.sites));
  return out;
}

// The four groups of terms making up I_i, kept apart so that sums of
// individual groups can be inspected.
struct SiteObservableTerms {
  SparseOperator field;         // omega_i/2 sigma_z,i
  SparseOperator constant;      // nu/(2M) sin(alpha) * identity
  SparseOperator antisymmetric; // nu/(2M) cos(alpha) sum_j (s+_i sz_j - sz_i s+_j)
  SparseOperator symmetric;     // nu/(2M) sin(alpha) sum_j (s+_i s+_j + sz_i sz_j)

  SparseOperator total() const { return field + constant + antisymmetric + symmetric; }
};

inline SiteObservableTerms site_observable_terms(const ChainParams& p, int i) {
  p.validate();
  if (i < 1 || i > p.sites)
    throw ParameterError("site " + std::to_string(i) + " outside [1, " + std::to_string(p.sites) + "]");
  const int n = p.sites;
  const double g = p.coupling();
  SiteObservableTerms t{0.5 * p.omega(i) * embed_single(pauli::z(), i, n),
                        g * std::sin(p.alpha) * SparseOperator::identity(n), SparseOperator(n),
                        SparseOperator(n)};
  for (int j : coupling_window(p, i)) {
    t.antisymmetric += embed_pair(pauli::plus(), i, pauli::z(), j, n);
    t.antisymmetric += Complex{-1} * embed_pair(pauli::z(), i, pauli::plus(), j, n);
    t.symmetric += embed_pair(pauli::plus(), i, pauli::plus(), j, n);
    t.symmetric += embed_pair(pauli::z(), i, pauli::z(), j, n);
  }
  t.antisymmetric = (g * std::cos(p.alpha)) * t.antisymmetric;
  t.symmetric = (g * std::sin(p.alpha)) * t.symmetric;
  return t;
}

// Site observable I_i by tensor embedding of its Pauli terms.
inline SparseOperator build_site_observable(const ChainParams& p, int i) {
  return site_observable_terms(p, i).total();
}

// H = sum_i I_i, assembled directly in the computational basis. The
// antisymmetric cos(alpha) couplings cancel pairwise in the sum, leaving
//   H = sum_i omega_i/2 sz_i + N nu sin(alpha)/(2M)
//       + nu sin(alpha)/(2M) sum_i sum_{j in W(i)} (s+_i s+_j + sz_i sz_j).
// Only matrix elements that keep or raise the up-count by 2 occur.
inline SparseOperator build_hamiltonian(const ChainParams& p) {
  p.validate();
  const int n = p.sites;
  const std::uint64_t dim = basis_dimension(n);
  const double gs = p.coupling() * std::sin(p.alpha);

  std::vector<std::pair<int, int>> pairs; // ordered (i, j), j in W(i)
  for (int i = 1; i <= n; ++i)
    for (int j : coupling_window(p, i)) pairs.emplace_back(i, j);

  std::vector<SparseOperator::Entry> entries;
  entries.reserve(dim * (1 + pairs.size() / 2));
  for (std::uint64_t s = 0; s < dim; ++s) {
    double diag = n * gs;
    for (int i = 1; i <= n; ++i) diag += 0.5 * p.omega(i) * (is_up(s, i) ? 1.0 : -1.0);
    for (auto [i, j] : pairs) {
      diag += gs * ((is_up(s, i) == is_up(s, j)) ? 1.0 : -1.0);
      // s+_i s+_j |..down_i..down_j..> = 4 |..up_i..up_j..>
      if (!is_up(s, i) && !is_up(s, j)) {
        const std::uint64_t raised = s | (std::uint64_t{1} << (i - 1)) | (std::uint64_t{1} << (j - 1));
        entries.push_back({raised, s, Complex{4.0 * gs}});
      }
    }
    entries.push_back({s, s, Complex{diag}});
  }
  return SparseOperator::from_entries(n, entries);
}

// H as the explicit sum of the embedded site observables (independent route).
inline SparseOperator build_hamiltonian_from_observables(const ChainParams& p) {
  SparseOperator h(p.sites);
  for (int i = 1; i <= p.sites; ++i) h += build_site_observable(p, i);
  return h.pruned(1e-300);
}

struct CoherentState {
  double theta = 0.0;
  double phi = 0.0;

  // (amplitude on |up>, amplitude on |down>)
  std::array<Complex, 2> amplitudes() const {
    return {Complex{std::cos(theta / 2.0)}, std::polar(std::sin(theta / 2.0), phi)};
  }

  // <theta,phi| A |theta,phi>
  Complex expectation(const LocalOperator& a) const {
    const auto v = amplitudes();
    Complex acc{0};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) acc += std::conj(v[r]) * a(r, c) * v[c];
    return acc;
  }
};

// |theta_1, 0> x ... x |theta_N, 0>
inline StateVector coherent_product_state(std::span<const double> thetas) {
  const int n = static_cast<int>(thetas.size());
  const std::uint64_t dim = basis_dimension(n);
  for (double t : thetas)
    if (!std::isfinite(t)) throw ParameterError("coherent-state angles must be finite");
  StateVector v(static_cast<Eigen::Index>(dim));
  for (std::uint64_t s = 0; s < dim; ++s) {
    double a = 1.0;
    for (int i = 1; i <= n; ++i) {
      const double half = thetas[static_cast<std::size_t>(i - 1)] / 2.0;
      a *= is_up(s, i) ? std::cos(half) : std::sin(half);
    }
    v(static_cast<Eigen::Index>(s)) = a;
  }
  return v;
}

// omega_i cos(theta_i)/2 + nu/(2M) sum_{j=i-M}^{i+M} sin(theta_i - theta_j + alpha),
// the j = i term included.
inline double coherent_site_expectation_closed_form(const ChainParams& p, std::span<const double> thetas,
                                                    int i) {
  const auto th = [&](int k) { return thetas[static_cast<std::size_t>(k - 1)]; };
  double acc = 0.0;
  for (int d = -p.range; d <= p.range; ++d)
    acc += std::sin(th(i) - th(wrap_site(i + d, p.sites)) + p.alpha);
  return 0.5 * p.omega(i) * std::cos(th(i)) + p.coupling() * acc;
}

// eta = sigma_x on every site, as the bit-complement permutation.
inline SparseOperator global_spin_flip(int sites) {
  const std::uint64_t dim = basis_dimension(sites);
  std::vector<SparseOperator::Entry> entries;
  entries.reserve(dim);
  for (std::uint64_t s = 0; s < dim; ++s) entries.push_back({s ^ (dim - 1), s, Complex{1}});
  return SparseOperator::from_entries(sites, entries);
}

// Max-entry magnitude of H^dagger - eta H eta^{-1}. Vanishes when all omega_i = 0.
inline double quasi_hermiticity_residual(const ChainParams& p) {
  const SparseOperator h = build_hamiltonian(p);
  const SparseOperator eta = global_spin_flip(p.sites); // self-inverse
  return max_abs_difference(h.adjoint(), eta * h * eta);
}

// Regular reference: sum_i omega_i/2 sz_i + J sum_i sz_i sz_{i+1}, closed chain.
inline SparseOperator build_ising_z(const ChainParams& p, double coupling_j) {
  p.validate();
  const int n = p.sites;
  const std::uint64_t dim = basis_dimension(n);
  std::vector<SparseOperator::Entry> entries;
  entries.reserve(dim);
  for (std::uint64_t s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double zi = is_up(s, i) ? 1.0 : -1.0;
      const double zj = is_up(s, wrap_site(i + 1, n)) ? 1.0 : -1.0;
      diag += 0.5 * p.omega(i) * zi + coupling_j * zi * zj;
    }
    entries.push_back({s, s, Complex{diag}});
  }
  return SparseOperator::from_entries(n, entries);
}

inline double default_ising_coupling(const ChainParams& p) { return p.nu / 4.0; }

} // namespace qchimera
