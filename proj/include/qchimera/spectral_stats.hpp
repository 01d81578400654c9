#pragma once

// Level-spacing statistics: degeneracy removal, spline unfolding of the
// counting function, spacing histograms and reference distributions.

#include "qchimera/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace qchimera {

// One representative (the first) per run of values closer than tol to their neighbour.
inline std::vector<double> remove_degeneracies(const std::vector<double>& sorted, double tol) {
  if (tol < 0.0) throw ParameterError("degeneracy tolerance must be nonnegative");
  std::vector<double> out;
  for (std::size_t k = 0; k < sorted.size(); ++k)
    if (k == 0 || sorted[k] - sorted[k - 1] > tol) out.push_back(sorted[k]);
  return out;
}

// tol_rel * max(1, spectral radius)
inline double default_degeneracy_tolerance(const std::vector<double>& sorted, double tol_rel = 1e-9) {
  if (sorted.empty()) return tol_rel;
  return tol_rel * std::max({1.0, std::abs(sorted.front()), std::abs(sorted.back())});
}

// Natural cubic spline through (x_k, y_k), x strictly increasing.
class NaturalSpline {
public:
  NaturalSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ParameterError("spline needs at least two knots");
    for (std::size_t k = 1; k < n; ++k)
      if (!(x_[k] > x_[k - 1])) throw ParameterError("spline knots must be strictly increasing");
    m_.assign(n, 0.0);
    if (n == 2) return;
    // tridiagonal system for interior second derivatives (Thomas algorithm)
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double h0 = x_[k] - x_[k - 1], h1 = x_[k + 1] - x_[k];
      diag[k] = 2.0 * (h0 + h1);
      upper[k] = h1;
      rhs[k] = 6.0 * ((y_[k + 1] - y_[k]) / h1 - (y_[k] - y_[k - 1]) / h0);
      if (k > 1) {
        const double w = h0 / diag[k - 1];
        diag[k] -= w * upper[k - 1];
        rhs[k] -= w * rhs[k - 1];
      }
    }
    for (std::size_t k = n - 2; k >= 1; --k) m_[k] = (rhs[k] - upper[k] * m_[k + 1]) / diag[k];
  }

  std::size_t knots() const { return x_.size(); }
  const std::vector<double>& x() const { return x_; }

  double operator()(double t) const {
    const std::size_t k = segment(t);
    const double h = x_[k + 1] - x_[k];
    const double a = (x_[k + 1] - t) / h, b = (t - x_[k]) / h;
    return a * y_[k] + b * y_[k + 1] + ((a * a * a - a) * m_[k] + (b * b * b - b) * m_[k + 1]) * h * h / 6.0;
  }

  double derivative(double t) const {
    const std::size_t k = segment(t);
    const double h = x_[k + 1] - x_[k];
    const double a = (x_[k + 1] - t) / h, b = (t - x_[k]) / h;
    return (y_[k + 1] - y_[k]) / h + ((1.0 - 3.0 * a * a) * m_[k] + (3.0 * b * b - 1.0) * m_[k + 1]) * h / 6.0;
  }

  // Smallest derivative on segment k (the derivative is quadratic in t).
  double min_derivative(std::size_t k) const {
    const double h = x_[k + 1] - x_[k];
    double best = std::min(derivative(x_[k]), derivative(x_[k + 1]));
    const double curv = (m_[k + 1] - m_[k]) / h;
    if (curv != 0.0) {
      const double t = x_[k] - m_[k] / curv; // f'' vanishes
      if (t > x_[k] && t < x_[k + 1]) best = std::min(best, derivative(t));
    }
    return best;
  }

private:
  std::size_t segment(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(k, x_.size() - 2);
  }

  std::vector<double> x_, y_, m_;
};

// Monotone piecewise cubic Hermite interpolant (Fritsch-Butland slopes,
// three-point end slopes). Increasing data give an increasing interpolant.
class MonotoneSpline {
public:
  MonotoneSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ParameterError("spline needs at least two knots");
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = x_[k + 1] - x_[k];
      if (!(h[k] > 0.0)) throw ParameterError("spline knots must be strictly increasing");
      delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    d_.assign(n, delta[0]);
    if (n == 2) return;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] <= 0.0) {
        d_[k] = 0.0;
      } else {
        const double w1 = 2.0 * h[k] + h[k - 1], w2 = h[k] + 2.0 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (d * d0 <= 0.0) d = 0.0;
      else if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) d = 3.0 * d0;
      return d;
    };
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  std::size_t knots() const { return x_.size(); }

  double operator()(double t) const {
    const std::size_t k = segment(t);
    const double h = x_[k + 1] - x_[k];
    const double u = (t - x_[k]) / h;
    const double u2 = u * u, u3 = u2 * u;
    return (2.0 * u3 - 3.0 * u2 + 1.0) * y_[k] + (u3 - 2.0 * u2 + u) * h * d_[k] + (-2.0 * u3 + 3.0 * u2) * y_[k + 1] +
           (u3 - u2) * h * d_[k + 1];
  }

private:
  std::size_t segment(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(k, x_.size() - 2);
  }

  std::vector<double> x_, y_, d_;
};

enum class SplineKind { monotone, natural };

inline const char* spline_name(SplineKind k) { return k == SplineKind::monotone ? "monotone_cubic" : "natural_cubic"; }

struct UnfoldedSpectrum {
  std::vector<double> values; // f(chi_n)
  int stride = 10;
  SplineKind spline = SplineKind::monotone;

  std::vector<double> spacings() const {
    std::vector<double> s;
    for (std::size_t k = 1; k < values.size(); ++k) s.push_back(values[k] - values[k - 1]);
    return s;
  }
  double mean_spacing() const {
    return values.size() < 2 ? 0.0 : (values.back() - values.front()) / double(values.size() - 1);
  }
};

class UnfoldingError : public NumericalError {
public:
  UnfoldingError(const std::string& what, double lo, double hi) : NumericalError(what), lo_(lo), hi_(hi) {}
  double interval_begin() const { return lo_; }
  double interval_end() const { return hi_; }

private:
  double lo_, hi_;
};

// Spline through the counting-function points (chi_{jp+1}, jp+1), plus the
// last level, evaluated at every level. The natural spline can overshoot
// where levels are sparse; it then throws with the offending knot interval.
inline UnfoldedSpectrum unfold(const std::vector<double>& spectrum, int stride = 10,
                               SplineKind spline = SplineKind::monotone) {
  if (stride < 1) throw ParameterError("knot stride must be positive");
  const std::size_t n = spectrum.size();
  if (n < 2 * static_cast<std::size_t>(stride) || n < 3)
    throw ParameterError("unfolding needs at least 2p levels, got " + std::to_string(n));
  for (std::size_t k = 1; k < n; ++k)
    if (!(spectrum[k] > spectrum[k - 1])) throw ParameterError("unfolding needs a strictly increasing spectrum");
  std::vector<double> kx, ky;
  for (std::size_t k = 0; k < n; k += static_cast<std::size_t>(stride)) {
    kx.push_back(spectrum[k]);
    ky.push_back(double(k + 1));
  }
  if (kx.back() != spectrum.back()) {
    kx.push_back(spectrum.back());
    ky.push_back(double(n));
  }
  UnfoldedSpectrum u;
  u.stride = stride;
  u.spline = spline;
  u.values.reserve(n);
  if (spline == SplineKind::natural) {
    const NaturalSpline f(kx, ky);
    for (std::size_t k = 0; k + 1 < f.knots(); ++k)
      if (f.min_derivative(k) <= 0.0)
        throw UnfoldingError("unfolded counting function is not increasing on [" + std::to_string(kx[k]) + ", " +
                                 std::to_string(kx[k + 1]) + "]",
                             kx[k], kx[k + 1]);
    for (double x : spectrum) u.values.push_back(f(x));
  } else {
    const MonotoneSpline f(kx, ky);
    for (double x : spectrum) u.values.push_back(f(x));
  }
  for (std::size_t k = 1; k < n; ++k)
    if (!(u.values[k] > u.values[k - 1]))
      throw UnfoldingError("unfolded levels are not increasing between " + std::to_string(spectrum[k - 1]) + " and " +
                               std::to_string(spectrum[k]),
                           spectrum[k - 1], spectrum[k]);
  return u;
}

struct SpacingHistogram {
  std::vector<double> edges;   // bins + 1
  std::vector<double> density; // unit area over the binned samples
  std::size_t samples = 0;     // spacings inside [edges.front(), edges.back()]
  std::size_t outside = 0;

  std::size_t bins() const { return density.size(); }
  double area() const {
    double a = 0.0;
    for (std::size_t b = 0; b < density.size(); ++b) a += density[b] * (edges[b + 1] - edges[b]);
    return a;
  }
};

inline SpacingHistogram histogram(const std::vector<double>& values, int bins = 30, double lo = 0.0,
                                  double hi = 4.0) {
  if (bins < 1 || !(hi > lo)) throw ParameterError("histogram needs bins >= 1 and hi > lo");
  SpacingHistogram h;
  const double width = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + b * width);
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double s : values) {
    if (s < lo || s > hi) {
      ++h.outside;
      continue;
    }
    const auto b = std::min(static_cast<std::size_t>((s - lo) / width), static_cast<std::size_t>(bins - 1));
    counts[b] += 1.0;
    ++h.samples;
  }
  h.density.resize(counts.size(), 0.0);
  if (h.samples)
    for (std::size_t b = 0; b < counts.size(); ++b) h.density[b] = counts[b] / (double(h.samples) * width);
  return h;
}

inline SpacingHistogram lsd(const UnfoldedSpectrum& u, int bins = 30, double lo = 0.0, double hi = 4.0) {
  if (u.values.size() < 2) throw ParameterError("level spacing needs at least two levels");
  return histogram(u.spacings(), bins, lo, hi);
}

enum class ReferenceKind { wigner_dyson, poisson };

inline const char* reference_name(ReferenceKind k) { return k == ReferenceKind::wigner_dyson ? "wigner_dyson" : "poisson"; }

inline double reference_density(ReferenceKind kind, double s) {
  if (s < 0.0) throw ParameterError("spacing must be nonnegative");
  constexpr double pi = std::numbers::pi;
  return kind == ReferenceKind::wigner_dyson ? pi * s / 2.0 * std::exp(-pi * s * s / 4.0) : std::exp(-s);
}

inline double reference_cdf(ReferenceKind kind, double s) {
  if (s < 0.0) throw ParameterError("spacing must be nonnegative");
  return kind == ReferenceKind::wigner_dyson ? 1.0 - std::exp(-std::numbers::pi * s * s / 4.0) : 1.0 - std::exp(-s);
}

// sum_b |density_b - mean reference density on b| * width_b
inline double distribution_distance(const SpacingHistogram& h, ReferenceKind kind) {
  double d = 0.0;
  for (std::size_t b = 0; b < h.bins(); ++b) {
    const double w = h.edges[b + 1] - h.edges[b];
    const double ref = reference_cdf(kind, h.edges[b + 1]) - reference_cdf(kind, h.edges[b]);
    d += std::abs(h.density[b] * w - ref);
  }
  return d;
}

// One decimal value per line; blank lines and '#' comments skipped.
inline std::vector<double> read_spectrum(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double v;
    std::string rest;
    if (!(ss >> v) || (ss >> rest) || !std::isfinite(v)) throw IngestionError("expected one finite number", no);
    out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<double> read_spectrum_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open spectrum file " + path, 0);
  return read_spectrum(in);
}

} // namespace qchimera
