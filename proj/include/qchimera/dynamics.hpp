#pragma once

// Time evolution under a non-hermitian H: spectral expansion over a
// biorthogonal system, a direct RK4 stepper, and survival probabilities.

#include "qchimera/eigensystem.hpp"
#include "qchimera/errors.hpp"
#include "qchimera/observables.hpp"
#include "qchimera/spin_ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace qchimera {

// sum_j phi_j psi_j, no conjugation.
inline Complex c_product(const StateVector& phi, const StateVector& psi) {
  if (phi.size() != psi.size()) throw ParameterError("c-product of vectors with different lengths");
  return (phi.array() * psi.array()).sum();
}

struct TimeGrid {
  double t_end = 200.0;
  int samples = 4001; // including t = 0

  void validate() const {
    if (samples < 2 || !(t_end > 0.0) || !std::isfinite(t_end))
      throw ParameterError("time grid needs t_end > 0 and at least two samples");
  }
  double step() const { return t_end / (samples - 1); }
  double time(int k) const { return k == samples - 1 ? t_end : k * step(); }
  std::vector<double> times() const {
    std::vector<double> t(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) t[static_cast<std::size_t>(k)] = time(k);
    return t;
  }
};

enum class PropagationPath { spectral, direct };

inline const char* path_name(PropagationPath p) { return p == PropagationPath::spectral ? "spectral" : "direct"; }

// How the survival amplitude pairs psi0 with psi(t).
//   transpose:     c(psi0, psi(t)) / c(psi0, psi0)
//   biorthogonal:  <psi0#|psi(t)> / <psi0#|psi0>, psi0# = G psi0 with the
//                  metric G = sum_n |chi_n#><chi_n#| of the system
enum class Pairing { transpose, biorthogonal };

inline const char* pairing_name(Pairing p) { return p == Pairing::transpose ? "transpose" : "biorthogonal"; }

struct PropagationInfo {
  PropagationPath path = PropagationPath::spectral;
  bool fell_back = false;     // spectral requested but the system is defective or absent
  double dt = 0.0;            // direct path: accepted step
  int refinements = 0;        // direct path: step halvings performed
  double refinement_change = 0.0;
  std::string note;
};

// Upper bound on the spectral norm: sqrt(||H||_1 ||H||_inf).
inline double operator_norm_bound(const SparseOperator& h) {
  return std::sqrt(h.norm_inf() * h.adjoint().norm_inf());
}

namespace detail {

// Real matrix times complex vector without forming a complex copy of the matrix.
template <class M>
Eigen::VectorXcd real_times(const M& m, const Eigen::VectorXcd& v) {
  const Eigen::VectorXd re = m * v.real();
  const Eigen::VectorXd im = m * v.imag();
  Eigen::VectorXcd out(re.size());
  out.real() = re;
  out.imag() = im;
  return out;
}

inline void rk4_step(const SparseOperator::Matrix& m, StateVector& psi, double dt, StateVector& k1, StateVector& k2,
                     StateVector& k3, StateVector& k4) {
  const Complex mi{0.0, -1.0};
  k1.noalias() = mi * (m * psi);
  k2.noalias() = mi * (m * (psi + (0.5 * dt) * k1));
  k3.noalias() = mi * (m * (psi + (0.5 * dt) * k2));
  k4.noalias() = mi * (m * (psi + dt * k3));
  psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// States at every grid time with `sub` RK4 steps per grid interval.
// `each` is called as each(k, psi) for every sample index.
template <class F>
void rk4_sweep(const SparseOperator& h, const StateVector& psi0, const TimeGrid& grid, int sub, double sign, F&& each) {
  StateVector psi = psi0, k1(psi0.size()), k2(psi0.size()), k3(psi0.size()), k4(psi0.size());
  each(0, psi);
  for (int k = 1; k < grid.samples; ++k) {
    const double dt = sign * (grid.time(k) - grid.time(k - 1)) / sub;
    for (int s = 0; s < sub; ++s) rk4_step(h.matrix(), psi, dt, k1, k2, k3, k4);
    each(k, psi);
  }
}

} // namespace detail

// Direct propagation with ||H|| dt <= 0.1, halving until two successive
// refinements differ by less than tol (relative) at t_end.
struct DirectPropagator {
  const SparseOperator& h;
  double tol = 1e-9;
  int max_refinements = 8;

  // Steps per grid interval that pass the halving check.
  int substeps(const StateVector& psi0, const TimeGrid& grid, PropagationInfo& info, double sign = 1.0) const {
    grid.validate();
    const double hn = std::max(operator_norm_bound(h), 1e-300);
    int sub = std::max(1, static_cast<int>(std::ceil(grid.step() * hn / 0.1)));
    auto final_state = [&](int s) {
      StateVector out;
      detail::rk4_sweep(h, psi0, grid, s, sign, [&](int k, const StateVector& v) {
        if (k == grid.samples - 1) out = v;
      });
      return out;
    };
    StateVector prev = final_state(sub);
    for (int r = 1; r <= max_refinements; ++r) {
      StateVector next = final_state(2 * sub);
      const double change = (next - prev).norm() / std::max(next.norm(), 1e-300);
      sub *= 2;
      info.refinements = r;
      info.refinement_change = change;
      if (change < tol) {
        info.dt = grid.step() / sub;
        return sub;
      }
      prev = std::move(next);
    }
    throw NumericalError("direct propagation did not converge after " + std::to_string(max_refinements) +
                         " step halvings (last change " + std::to_string(info.refinement_change) + ")");
  }

  template <class F>
  PropagationInfo run(const StateVector& psi0, const TimeGrid& grid, F&& each, double sign = 1.0) const {
    if (psi0.size() != h.dimension()) throw ParameterError("initial state dimension does not match the operator");
    PropagationInfo info;
    info.path = PropagationPath::direct;
    const int sub = substeps(psi0, grid, info, sign);
    detail::rk4_sweep(h, psi0, grid, sub, sign, each);
    return info;
  }
};

// psi(t) = sum_n e^{-i chi_n t} |chi_n> <chi_n#|psi0>
struct SpectralPropagator {
  const BiorthogonalSystem& sys;

  bool available() const { return !sys.defective(); }

  Eigen::VectorXcd coefficients(const StateVector& psi0) const {
    if (psi0.size() != sys.dimension()) throw ParameterError("initial state dimension does not match the system");
    return detail::real_times(sys.left.transpose(), psi0);
  }

  StateVector at(const Eigen::VectorXcd& coeff, double t) const {
    Eigen::VectorXcd ph(coeff.size());
    for (Eigen::Index n = 0; n < coeff.size(); ++n)
      ph(n) = std::polar(1.0, -sys.eigenvalue(static_cast<std::size_t>(n)) * t) * coeff(n);
    return detail::real_times(sys.right, ph);
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> states;
  PropagationInfo info;
};

// Spectral path when a non-defective system is given, direct path otherwise.
inline Trajectory propagate(const SparseOperator& h, const BiorthogonalSystem* sys, const StateVector& psi0,
                            const TimeGrid& grid, bool prefer_spectral = true) {
  grid.validate();
  Trajectory tr;
  tr.times = grid.times();
  if (prefer_spectral && sys && !sys->defective()) {
    const SpectralPropagator sp{*sys};
    const Eigen::VectorXcd a = sp.coefficients(psi0);
    for (double t : tr.times) tr.states.push_back(sp.at(a, t));
    tr.info.path = PropagationPath::spectral;
    return tr;
  }
  tr.states.resize(tr.times.size());
  tr.info = DirectPropagator{h}.run(psi0, grid, [&](int k, const StateVector& v) {
    tr.states[static_cast<std::size_t>(k)] = v;
  });
  if (prefer_spectral) {
    tr.info.fell_back = true;
    tr.info.note = sys ? "system has defective clusters" : "no eigensystem supplied";
  }
  return tr;
}

struct SurvivalSeries {
  std::vector<double> times;
  std::vector<double> p_surv;
  std::vector<double> p_cum;
  Pairing pairing = Pairing::transpose;
  PropagationInfo info;
  bool self_orthogonal = false; // pairing norm of psi0 vanished; amplitudes left unnormalized
  Complex norm{1.0};            // pairing of psi0 with itself
};

inline std::vector<double> cumulative_trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t k = 1; k < y.size(); ++k) out[k] = out[k - 1] + 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
  return out;
}

// psi0# = G psi0 over paired columns.
inline StateVector metric_dual(const BiorthogonalSystem& sys, const StateVector& psi0) {
  const Eigen::VectorXcd a = detail::real_times(sys.left.transpose(), psi0);
  return detail::real_times(sys.left, a);
}

inline SurvivalSeries survival(const SparseOperator& h, const BiorthogonalSystem* sys, const StateVector& psi0,
                               const TimeGrid& grid, Pairing pairing = Pairing::biorthogonal,
                               bool prefer_spectral = true) {
  grid.validate();
  if (psi0.size() != h.dimension()) throw ParameterError("initial state dimension does not match the operator");
  if (pairing == Pairing::biorthogonal && (!sys || sys->defective()))
    throw NumericalError("biorthogonal pairing needs a non-defective eigensystem");
  SurvivalSeries out;
  out.pairing = pairing;
  out.times = grid.times();
  out.p_surv.resize(out.times.size());

  const StateVector dual = pairing == Pairing::transpose ? StateVector(psi0) : metric_dual(*sys, psi0);
  auto pair = [&](const StateVector& v) {
    return pairing == Pairing::transpose ? c_product(dual, v) : dual.dot(v);
  };
  out.norm = pair(psi0);
  out.self_orthogonal = std::abs(out.norm) < 1e-14 * std::max(1.0, psi0.squaredNorm());
  const Complex scale = out.self_orthogonal ? Complex{1.0} : out.norm;

  if (prefer_spectral && sys && !sys->defective()) {
    // A(t) = sum_n e^{-i chi_n t} w_n, w_n = pair(psi0, chi_n) <chi_n#|psi0>
    const Eigen::VectorXcd a = detail::real_times(sys->left.transpose(), psi0);
    Eigen::VectorXcd b = pairing == Pairing::transpose ? detail::real_times(sys->right.transpose(), psi0)
                                                       : Eigen::VectorXcd(a.conjugate());
    const Eigen::VectorXcd w = (a.array() * b.array()).matrix();
    for (std::size_t k = 0; k < out.times.size(); ++k) {
      Complex amp{0.0};
      for (Eigen::Index n = 0; n < w.size(); ++n)
        amp += std::polar(1.0, -sys->eigenvalue(static_cast<std::size_t>(n)) * out.times[k]) * w(n);
      out.p_surv[k] = std::norm(amp / scale);
    }
    out.info.path = PropagationPath::spectral;
  } else {
    out.info = DirectPropagator{h}.run(psi0, grid, [&](int k, const StateVector& v) {
      out.p_surv[static_cast<std::size_t>(k)] = std::norm(pair(v) / scale);
    });
    if (prefer_spectral) {
      out.info.fell_back = true;
      out.info.note = sys ? "system has defective clusters" : "no eigensystem supplied";
    }
  }
  out.p_cum = cumulative_trapezoid(out.times, out.p_surv);
  return out;
}

// Pattern over {u, d}, site 1 first.
inline StateVector build_product_state(const std::string& pattern) {
  const int n = static_cast<int>(pattern.size());
  check_site_count(n);
  std::uint64_t value = 0;
  for (int i = 0; i < n; ++i) {
    const char c = pattern[static_cast<std::size_t>(i)];
    if (c == 'u') value |= std::uint64_t{1} << i;
    else if (c != 'd') throw ParameterError(std::string("invalid spin symbol '") + c + "', expected u or d");
  }
  return basis_state(BasisIndex(value, n));
}

struct ChimeraCandidate {
  std::size_t index = 0; // column in the system
  double eigenvalue = 0.0;
  double score = 0.0;    // sum_i (S_i - target_i)^2, target 1/2 for '*', 0 otherwise
  bool matches = false;
  std::string labels;
};

struct ChimeraSelection {
  bool found = false;
  ChimeraCandidate best;
  StateVector state;                   // unit standard norm
  std::vector<ChimeraCandidate> ranked; // up to three lowest scores
};

// Scans right or left eigenvectors for the u/d/* pattern.
inline ChimeraSelection select_chimera_initial(const BiorthogonalSystem& sys, bool left_side, const std::string& pattern,
                                               const RegionThresholds& th = {}) {
  th.validate();
  if (static_cast<int>(pattern.size()) != sys.sites())
    throw ParameterError("pattern length " + std::to_string(pattern.size()) + " does not match N=" +
                         std::to_string(sys.sites()));
  for (char c : pattern)
    if (c != 'u' && c != 'd' && c != '*') throw ParameterError(std::string("invalid pattern symbol '") + c + "'");

  ChimeraSelection sel;
  std::vector<ChimeraCandidate> all;
  for (std::size_t n = 0; n < sys.size(); ++n) {
    if (!(left_side ? sys.has_left[n] : sys.has_right[n])) continue;
    if (sys.spectrum.clusters.size() && sys.cluster_defective[sys.spectrum.cluster_of[n]]) continue;
    const StateVector v = left_side ? sys.left_vector(n) : sys.right_vector(n);
    if (v.norm() == 0.0) continue;
    const SpinProfile prof = chain_profile(v / v.norm(), {}, false);
    const auto labels = classify_regions(prof, th);
    ChimeraCandidate c;
    c.index = n;
    c.eigenvalue = sys.eigenvalue(n);
    c.matches = true;
    for (int i = 0; i < sys.sites(); ++i) {
      const auto si = static_cast<std::size_t>(i);
      const char want = pattern[si];
      const double target = want == '*' ? 0.5 : 0.0;
      c.score += (prof.entropy[si] - target) * (prof.entropy[si] - target);
      c.labels += label_char(labels[si]);
      if (want == '*') c.matches &= labels[si] == SpinLabel::entangled;
      else c.matches &= labels[si] == SpinLabel::regular && ((want == 'u') == (prof.population[si] > 0.5));
    }
    all.push_back(std::move(c));
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  for (const auto& c : all) {
    if (c.matches && !sel.found) {
      sel.found = true;
      sel.best = c;
    }
  }
  for (std::size_t k = 0; k < std::min<std::size_t>(3, all.size()); ++k) sel.ranked.push_back(all[k]);
  if (sel.found) {
    const StateVector v = left_side ? sys.left_vector(sel.best.index) : sys.right_vector(sel.best.index);
    sel.state = v / v.norm();
  }
  return sel;
}

} // namespace qchimera
