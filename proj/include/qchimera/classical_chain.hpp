#pragma once

// Closed chain of phase oscillators with long-range coupling:
//
//   dtheta_i/dt = w - nu/(2M) sum_{j=i-M}^{i+M} sin(theta_i - theta_j + alpha)
//
// and the local classical entropy of the phase distribution around each site.

#include "qchimera/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace qchimera {

struct OscillatorParams {
  int sites = 150;
  int range = 45;      // M
  double omega = 0.0;  // natural frequency
  double nu = 1.0;
  double alpha = 1.46;

  void validate() const {
    if (sites < 6) throw ParameterError("classical chain needs at least 6 oscillators");
    if (range < 2 || 2 * range > sites - 2)
      throw ParameterError("coupling range M=" + std::to_string(range) + " outside {2, ..., N/2-1}");
    if (!std::isfinite(omega) || !std::isfinite(nu) || !std::isfinite(alpha))
      throw ParameterError("oscillator parameters must be finite");
  }
};

// Maps to [-pi, pi).
inline double wrap_phase(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double y = std::fmod(x + std::numbers::pi, two_pi);
  if (y < 0.0) y += two_pi;
  y -= std::numbers::pi;
  return y >= std::numbers::pi ? -std::numbers::pi : y;
}

// Smallest signed difference a - b on the circle.
inline double phase_distance(double a, double b) { return std::abs(wrap_phase(a - b)); }

struct OscillatorChain {
  OscillatorParams params;
  std::vector<double> phases;

  OscillatorChain(OscillatorParams p, std::vector<double> ph) : params(p), phases(std::move(ph)) {
    params.validate();
    if (phases.size() != static_cast<std::size_t>(params.sites))
      throw ParameterError("expected " + std::to_string(params.sites) + " phases");
    for (double& x : phases) x = wrap_phase(x);
  }
};

// Window includes j = i. Uses sum_j sin(a_i - t_j) = Im(e^{i a_i} sum_j e^{-i t_j}).
inline std::vector<double> phase_derivative(const OscillatorParams& p, const std::vector<double>& theta) {
  const int n = p.sites;
  const double k = p.nu / (2.0 * p.range);
  std::vector<double> c(static_cast<std::size_t>(n)), s(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < c.size(); ++j) {
    c[j] = std::cos(theta[j]);
    s[j] = std::sin(theta[j]);
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  auto at = [n](int j) { return static_cast<std::size_t>((j % n + n) % n); };
  double wc = 0.0, ws = 0.0;
  for (int d = -p.range; d <= p.range; ++d) {
    wc += c[at(d)];
    ws += s[at(d)];
  }
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      wc += c[at(i + p.range)] - c[at(i - p.range - 1)];
      ws += s[at(i + p.range)] - s[at(i - p.range - 1)];
    }
    const double a = theta[static_cast<std::size_t>(i)] + p.alpha;
    out[static_cast<std::size_t>(i)] = p.omega - k * (std::sin(a) * wc - std::cos(a) * ws);
  }
  return out;
}

inline std::vector<double> phase_derivative(const OscillatorChain& c) { return phase_derivative(c.params, c.phases); }

// RK4 with the phases wrapped after every step.
inline void integrate(OscillatorChain& c, double dt, long steps) {
  if (!(dt > 0.0)) throw ParameterError("time step must be positive");
  const auto n = c.phases.size();
  std::vector<double> y(n), tmp(n);
  for (long s = 0; s < steps; ++s) {
    y = c.phases;
    const auto k1 = phase_derivative(c.params, y);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    const auto k2 = phase_derivative(c.params, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    const auto k3 = phase_derivative(c.params, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
    const auto k4 = phase_derivative(c.params, tmp);
    for (std::size_t i = 0; i < n; ++i)
      c.phases[i] = wrap_phase(y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
  }
}

// Shannon entropy of the bin occupation of the 2R+1 phases around each site.
// Bin n covers [-pi + (n-1) 2pi/n_res, -pi + n 2pi/n_res].
inline std::vector<double> local_entropy(const std::vector<double>& phases, int n_res = 20, int radius = 5) {
  if (n_res < 1 || radius < 0) throw ParameterError("n_res must be positive and R nonnegative");
  const int n = static_cast<int>(phases.size());
  std::vector<int> bin(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double x = wrap_phase(phases[i]);
    const int b = static_cast<int>(std::floor((x + std::numbers::pi) / (2.0 * std::numbers::pi) * n_res));
    bin[i] = std::clamp(b, 0, n_res - 1);
  }
  const int window = 2 * radius + 1;
  std::vector<double> out(phases.size(), 0.0);
  std::vector<int> count(static_cast<std::size_t>(n_res));
  for (int i = 0; i < n; ++i) {
    std::fill(count.begin(), count.end(), 0);
    for (int d = -radius; d <= radius; ++d) ++count[static_cast<std::size_t>(bin[static_cast<std::size_t>(((i + d) % n + n) % n)])];
    double s = 0.0;
    for (int c : count)
      if (c > 0) {
        const double p = double(c) / window;
        s -= p * std::log(p);
      }
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

// Phases drawn uniformly from [0, 2pi] with a seeded 64-bit Mersenne twister.
inline std::vector<double> random_phases(int sites, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  std::vector<double> out(static_cast<std::size_t>(sites));
  for (double& x : out) x = u(rng);
  return out;
}

struct ChimeraSnapshot {
  OscillatorParams params;
  std::uint64_t seed = 0;
  double t_end = 100.0;
  double dt = 0.01;
  std::vector<double> phases;
  std::vector<double> entropy;
};

inline ChimeraSnapshot chimera_snapshot(const OscillatorParams& p, std::uint64_t seed, double t_end_over_nu = 100.0,
                                        double dt_times_nu = 0.01, int n_res = 20, int radius = 5) {
  p.validate();
  const double scale = p.nu != 0.0 ? 1.0 / std::abs(p.nu) : 1.0;
  ChimeraSnapshot s;
  s.params = p;
  s.seed = seed;
  s.t_end = t_end_over_nu * scale;
  s.dt = dt_times_nu * scale;
  OscillatorChain c(p, random_phases(p.sites, seed));
  integrate(c, s.dt, std::lround(s.t_end / s.dt));
  s.phases = c.phases;
  s.entropy = local_entropy(s.phases, n_res, radius);
  return s;
}

// Largest circular run of sites satisfying pred; returns {start, length}.
template <class P>
std::pair<int, int> longest_circular_run(const std::vector<double>& v, P pred) {
  const int n = static_cast<int>(v.size());
  int best = 0, best_start = 0;
  if (n == 0) return {0, 0};
  if (std::all_of(v.begin(), v.end(), pred)) return {0, n};
  for (int i = 0; i < n; ++i) {
    if (!pred(v[static_cast<std::size_t>(i)]) || pred(v[static_cast<std::size_t>((i + n - 1) % n)])) continue;
    int len = 0;
    while (len < n && pred(v[static_cast<std::size_t>((i + len) % n)])) ++len;
    if (len > best) {
      best = len;
      best_start = i;
    }
  }
  return {best_start, best};
}

// A coherent block (S < low) and a disjoint incoherent block (S > high), each
// at least min_len sites long.
inline bool has_chimera_blocks(const std::vector<double>& entropy, int min_len = 15, double low = 0.3,
                               double high = 1.5) {
  const auto lo = longest_circular_run(entropy, [&](double s) { return s < low; });
  const auto hi = longest_circular_run(entropy, [&](double s) { return s > high; });
  return lo.second >= min_len && hi.second >= min_len; // predicates exclude each other, so runs are disjoint
}

} // namespace qchimera
