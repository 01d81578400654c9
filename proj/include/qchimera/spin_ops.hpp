#pragma once

// Computational basis bookkeeping and sparse operator algebra for chains of
// N spin-1/2 sites.
//
// Basis convention: bit (i-1) of a basis integer holds spin i (sites are
// 1-based), 1 = up, 0 = down. Local 2x2 operators are written in the
// (|up>, |down>) ordering, so sigma_z = diag(+1, -1).
//
// Ladder convention: sigma_plus = sigma_x + i sigma_y = [[0, 2], [0, 0]].
// It maps |down> to 2|up> and annihilates |up>. Much of the literature uses
// (sigma_x + i sigma_y) / 2 instead; every coupling constant in this library
// assumes the factor-2 form.

#include "qchimera/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace qchimera {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;

inline constexpr int kMaxSites = 24;

inline void check_site_count(int sites) {
  if (sites < 1 || sites > kMaxSites)
    throw ParameterError("site count must lie in [1, " + std::to_string(kMaxSites) +
                         "], got " + std::to_string(sites));
}

inline std::size_t basis_dimension(int sites) {
  check_site_count(sites);
  return std::size_t{1} << sites;
}

inline constexpr int up_count(std::uint64_t basis_value) noexcept {
  return std::popcount(basis_value);
}

inline constexpr bool is_up(std::uint64_t basis_value, int site) noexcept {
  return (basis_value >> (site - 1)) & 1u;
}

// Maps any integer site label onto 1..sites (closed chain).
inline int wrap_site(int site, int sites) noexcept {
  int r = (site - 1) % sites;
  if (r < 0) r += sites;
  return r + 1;
}

// A basis state of an N-site chain.
class BasisIndex {
public:
  BasisIndex(std::uint64_t value, int sites) : value_(value), sites_(sites) {
    check_site_count(sites);
    if (value >= (std::uint64_t{1} << sites))
      throw ParameterError("basis index " + std::to_string(value) + " out of range for " +
                           std::to_string(sites) + " sites");
  }

  static BasisIndex all_down(int sites) { return {0, sites}; }
  static BasisIndex all_up(int sites) { return {(std::uint64_t{1} << sites) - 1, sites}; }

  std::uint64_t value() const noexcept { return value_; }
  int sites() const noexcept { return sites_; }
  int up_count() const noexcept { return qchimera::up_count(value_); }
  bool up(int site) const noexcept { return is_up(value_, site); }

  friend bool operator==(const BasisIndex&, const BasisIndex&) = default;

private:
  std::uint64_t value_;
  int sites_;
};

inline int up_count(const BasisIndex& b) noexcept { return b.up_count(); }

// 2x2 single-site operator in (|up>, |down>) ordering.
struct LocalOperator {
  std::array<Complex, 4> m{};

  Complex operator()(int row, int col) const { return m[static_cast<std::size_t>(2 * row + col)]; }
  Complex& operator()(int row, int col) { return m[static_cast<std::size_t>(2 * row + col)]; }

  friend LocalOperator operator*(const LocalOperator& a, const LocalOperator& b) {
    LocalOperator r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j);
    return r;
  }
  friend LocalOperator operator+(const LocalOperator& a, const LocalOperator& b) {
    LocalOperator r;
    for (std::size_t k = 0; k < 4; ++k) r.m[k] = a.m[k] + b.m[k];
    return r;
  }
  friend LocalOperator operator*(Complex s, const LocalOperator& a) {
    LocalOperator r;
    for (std::size_t k = 0; k < 4; ++k) r.m[k] = s * a.m[k];
    return r;
  }
  friend bool operator==(const LocalOperator&, const LocalOperator&) = default;
};

namespace pauli {
inline LocalOperator identity() { return {{Complex{1}, Complex{0}, Complex{0}, Complex{1}}}; }
inline LocalOperator x() { return {{Complex{0}, Complex{1}, Complex{1}, Complex{0}}}; }
inline LocalOperator y() { return {{Complex{0}, Complex{0, -1}, Complex{0, 1}, Complex{0}}}; }
inline LocalOperator z() { return {{Complex{1}, Complex{0}, Complex{0}, Complex{-1}}}; }
// sigma_x + i sigma_y
inline LocalOperator plus() { return x() + Complex{0, 1} * y(); }
// sigma_x - i sigma_y
inline LocalOperator minus() { return x() + Complex{0, -1} * y(); }
} // namespace pauli

// Complex operator on the 2^N-dimensional chain space. Entries are kept in
// canonical form: duplicates merged, row-major order, so two operators are
// equal iff their entry lists agree.
class SparseOperator {
public:
  using Matrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

  struct Entry {
    std::uint64_t row;
    std::uint64_t col;
    Complex value;
  };

  explicit SparseOperator(int sites) : sites_(sites), mat_(dim_of(sites), dim_of(sites)) {}

  SparseOperator(int sites, Matrix m) : sites_(sites), mat_(std::move(m)) {
    if (mat_.rows() != dim_of(sites) || mat_.cols() != dim_of(sites))
      throw ParameterError("operator shape does not match 2^N");
    mat_.makeCompressed();
  }

  static SparseOperator from_entries(int sites, const std::vector<Entry>& entries) {
    const auto dim = dim_of(sites);
    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(entries.size());
    for (const auto& e : entries) {
      if (e.row >= static_cast<std::uint64_t>(dim) || e.col >= static_cast<std::uint64_t>(dim))
        throw ParameterError("operator entry index out of range");
      trips.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
    }
    Matrix m(dim, dim);
    m.setFromTriplets(trips.begin(), trips.end());
    return {sites, std::move(m)};
  }

  static SparseOperator identity(int sites) {
    Matrix m(dim_of(sites), dim_of(sites));
    m.setIdentity();
    return {sites, std::move(m)};
  }

  int sites() const noexcept { return sites_; }
  Eigen::Index dimension() const noexcept { return mat_.rows(); }
  Eigen::Index nonzeros() const noexcept { return mat_.nonZeros(); }
  const Matrix& matrix() const noexcept { return mat_; }

  Complex coeff(std::uint64_t row, std::uint64_t col) const {
    return mat_.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }

  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    out.reserve(static_cast<std::size_t>(mat_.nonZeros()));
    for (Eigen::Index r = 0; r < mat_.outerSize(); ++r)
      for (Matrix::InnerIterator it(mat_, r); it; ++it)
        out.push_back({static_cast<std::uint64_t>(it.row()), static_cast<std::uint64_t>(it.col()),
                       it.value()});
    return out;
  }

  // Drops stored entries with magnitude <= tol.
  SparseOperator pruned(double tol = 0.0) const {
    Matrix m = mat_;
    m.prune([tol](Eigen::Index, Eigen::Index, const Complex& v) { return std::abs(v) > tol; });
    return {sites_, std::move(m)};
  }

  SparseOperator adjoint() const { return {sites_, Matrix(mat_.adjoint())}; }

  bool is_real(double tol = 0.0) const {
    for (Eigen::Index k = 0; k < mat_.nonZeros(); ++k)
      if (std::abs(mat_.valuePtr()[k].imag()) > tol) return false;
    return true;
  }

  // Maximum absolute row sum (induced infinity norm).
  double norm_inf() const {
    double best = 0.0;
    for (Eigen::Index r = 0; r < mat_.outerSize(); ++r) {
      double s = 0.0;
      for (Matrix::InnerIterator it(mat_, r); it; ++it) s += std::abs(it.value());
      best = std::max(best, s);
    }
    return best;
  }

  Eigen::MatrixXcd to_dense() const { return Eigen::MatrixXcd(mat_); }

  friend SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
    check_same(a, b);
    return {a.sites_, Matrix(a.mat_ + b.mat_)};
  }
  friend SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
    check_same(a, b);
    return {a.sites_, Matrix(a.mat_ - b.mat_)};
  }
  friend SparseOperator operator*(Complex s, const SparseOperator& a) {
    return {a.sites_, Matrix(s * a.mat_)};
  }
  friend SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
    check_same(a, b);
    return {a.sites_, Matrix(a.mat_ * b.mat_)};
  }
  SparseOperator& operator+=(const SparseOperator& b) {
    check_same(*this, b);
    mat_ += b.mat_;
    return *this;
  }

private:
  static Eigen::Index dim_of(int sites) { return static_cast<Eigen::Index>(basis_dimension(sites)); }

  static void check_same(const SparseOperator& a, const SparseOperator& b) {
    if (a.sites_ != b.sites_) throw ParameterError("operators act on chains of different length");
  }

  int sites_;
  Matrix mat_;
};

// Largest entrywise magnitude of a - b.
inline double max_abs_difference(const SparseOperator& a, const SparseOperator& b) {
  const SparseOperator d = a - b;
  double best = 0.0;
  for (Eigen::Index k = 0; k < d.matrix().nonZeros(); ++k)
    best = std::max(best, std::abs(d.matrix().valuePtr()[k]));
  return best;
}

inline StateVector apply(const SparseOperator& op, const StateVector& v) {
  if (v.size() != op.dimension())
    throw ParameterError("state dimension " + std::to_string(v.size()) +
                         " does not match operator dimension " + std::to_string(op.dimension()));
  return op.matrix() * v;
}

inline StateVector basis_state(const BasisIndex& b) {
  StateVector v = StateVector::Zero(static_cast<Eigen::Index>(basis_dimension(b.sites())));
  v(static_cast<Eigen::Index>(b.value())) = 1.0;
  return v;
}

inline bool is_normalized(const StateVector& v, double tol = 1e-12) {
  return std::abs(v.norm() - 1.0) <= tol;
}

namespace detail {
inline int local_index(std::uint64_t basis_value, int site) { return is_up(basis_value, site) ? 0 : 1; }
inline std::uint64_t with_local(std::uint64_t basis_value, int site, int local) {
  const std::uint64_t mask = std::uint64_t{1} << (site - 1);
  return local == 0 ? (basis_value | mask) : (basis_value & ~mask);
}
inline void check_site(int site, int sites) {
  if (site < 1 || site > sites)
    throw ParameterError("site " + std::to_string(site) + " outside [1, " + std::to_string(sites) + "]");
}
} // namespace detail

// op acting on `site`, identity elsewhere.
inline SparseOperator embed_single(const LocalOperator& op, int site, int sites) {
  check_site_count(sites);
  detail::check_site(site, sites);
  const std::uint64_t dim = basis_dimension(sites);
  std::vector<SparseOperator::Entry> entries;
  entries.reserve(2 * dim);
  for (std::uint64_t s = 0; s < dim; ++s) {
    const int b = detail::local_index(s, site);
    for (int a = 0; a < 2; ++a) {
      const Complex v = op(a, b);
      if (v != Complex{0}) entries.push_back({detail::with_local(s, site, a), s, v});
    }
  }
  return SparseOperator::from_entries(sites, entries);
}

// opA on siteA times opB on siteB.
inline SparseOperator embed_pair(const LocalOperator& op_a, int site_a, const LocalOperator& op_b,
                                 int site_b, int sites) {
  check_site_count(sites);
  detail::check_site(site_a, sites);
  detail::check_site(site_b, sites);
  if (site_a == site_b) throw ParameterError("embed_pair requires two distinct sites");
  const std::uint64_t dim = basis_dimension(sites);
  std::vector<SparseOperator::Entry> entries;
  entries.reserve(dim);
  for (std::uint64_t s = 0; s < dim; ++s) {
    const int ba = detail::local_index(s, site_a);
    const int bb = detail::local_index(s, site_b);
    for (int aa = 0; aa < 2; ++aa) {
      const Complex va = op_a(aa, ba);
      if (va == Complex{0}) continue;
      for (int ab = 0; ab < 2; ++ab) {
        const Complex vb = op_b(ab, bb);
        if (vb == Complex{0}) continue;
        entries.push_back({detail::with_local(detail::with_local(s, site_a, aa), site_b, ab), s, va * vb});
      }
    }
  }
  return SparseOperator::from_entries(sites, entries);
}

} // namespace qchimera
