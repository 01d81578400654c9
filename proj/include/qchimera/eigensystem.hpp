#pragma once

// Biorthogonal eigensystems of operators that are triangular under the
// up-count grading of the computational basis.
//
// Ordering basis states by up-count makes H = D + U with D diagonal and U
// strictly moving between grades in one direction. The spectrum is then D,
// and eigenvectors follow from substitution through the grades:
//
//   (D_s - lambda) v_s = -(U v)_s
//
// For a cluster of (numerically) degenerate diagonal entries the states of
// the cluster are free variables. Seeding each free state k gives a trial
// vector w_k; the constraints (U w)_r = 0 at the cluster states r collect
// into a small resonance matrix C[r, k]. The eigenspace is W * null(C), and
// the cluster is defective when rank(C) > 0 (geometric < algebraic
// multiplicity). This is the nullspace of (H - lambda) restricted to the
// reachable sectors, reduced by eliminating the non-resonant unknowns first.

#include "qchimera/errors.hpp"
#include "qchimera/spin_ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace qchimera {

// Direction in which off-diagonal entries move the up-count grade
// (row grade relative to column grade).
enum class Orientation { raising, lowering, diagonal };

inline const char* orientation_name(Orientation o) {
  switch (o) {
  case Orientation::raising: return "raising";
  case Orientation::lowering: return "lowering";
  case Orientation::diagonal: return "diagonal";
  }
  return "?";
}

// Basis states sorted by up-count, ties broken by integer value.
struct GradedOrdering {
  int sites = 0;
  std::vector<std::uint32_t> order;
  std::vector<std::size_t> grade_begin; // order[grade_begin[g] .. grade_begin[g+1]) has up-count g

  static GradedOrdering make(int sites) {
    const std::uint64_t dim = basis_dimension(sites);
    GradedOrdering g;
    g.sites = sites;
    g.order.resize(dim);
    std::iota(g.order.begin(), g.order.end(), 0u);
    std::stable_sort(g.order.begin(), g.order.end(),
                     [](std::uint32_t a, std::uint32_t b) { return up_count(a) < up_count(b); });
    g.grade_begin.assign(static_cast<std::size_t>(sites) + 2, 0);
    for (std::uint32_t s : g.order) ++g.grade_begin[static_cast<std::size_t>(up_count(s)) + 1];
    for (std::size_t k = 1; k < g.grade_begin.size(); ++k) g.grade_begin[k] += g.grade_begin[k - 1];
    return g;
  }
};

namespace detail {

// Real CSR copy of the strictly off-diagonal part, row-indexed.
struct OffDiagonalRows {
  std::vector<std::size_t> ptr;
  std::vector<std::uint32_t> col;
  std::vector<double> val;
  double norm_inf = 0.0;
};

struct TriangularForm {
  int sites = 0;
  Orientation orientation = Orientation::diagonal;
  Eigen::VectorXd diagonal;
  OffDiagonalRows rows;      // rows of H
  OffDiagonalRows rows_adj;  // rows of H^T (= H^dagger, H real)
};

inline OffDiagonalRows build_rows(const SparseOperator::Matrix& m, bool transpose) {
  const auto dim = static_cast<std::size_t>(m.rows());
  std::vector<std::vector<std::pair<std::uint32_t, double>>> tmp(dim);
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it) {
      if (it.row() == it.col() || it.value() == Complex{0}) continue;
      const auto row = static_cast<std::size_t>(transpose ? it.col() : it.row());
      const auto col = static_cast<std::uint32_t>(transpose ? it.row() : it.col());
      tmp[row].emplace_back(col, it.value().real());
    }
  OffDiagonalRows out;
  out.ptr.assign(dim + 1, 0);
  for (std::size_t r = 0; r < dim; ++r) {
    double s = 0.0;
    for (auto& [c, v] : tmp[r]) {
      out.col.push_back(c);
      out.val.push_back(v);
      s += std::abs(v);
    }
    out.ptr[r + 1] = out.col.size();
    out.norm_inf = std::max(out.norm_inf, s);
  }
  return out;
}

inline TriangularForm analyze(const SparseOperator& h) {
  if (!h.is_real())
    throw StructuralError("graded eigensolver requires a real-valued operator");
  TriangularForm t;
  t.sites = h.sites();
  const auto& m = h.matrix();
  t.diagonal = Eigen::VectorXd::Zero(h.dimension());
  bool up = false, down = false;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it) {
      if (it.row() == it.col()) {
        t.diagonal(it.row()) = it.value().real();
        continue;
      }
      if (it.value() == Complex{0}) continue;
      const int gr = up_count(static_cast<std::uint64_t>(it.row()));
      const int gc = up_count(static_cast<std::uint64_t>(it.col()));
      if (gr == gc)
        throw StructuralError("operator couples basis states " + std::to_string(it.col()) + " and " +
                              std::to_string(it.row()) + " of equal up-count; not graded-triangular");
      (gr > gc ? up : down) = true;
    }
  if (up && down) throw StructuralError("operator both raises and lowers the up-count; not triangular");
  t.orientation = up ? Orientation::raising : (down ? Orientation::lowering : Orientation::diagonal);
  t.rows = build_rows(m, false);
  t.rows_adj = build_rows(m, true);
  return t;
}

} // namespace detail

// Eigenvalue clusters of the graded diagonal.
struct GradedSpectrum {
  struct Cluster {
    std::size_t begin = 0; // [begin, end) into values
    std::size_t end = 0;
    double value = 0.0;    // mean of the members
    std::size_t multiplicity() const { return end - begin; }
  };

  int sites = 0;
  Orientation orientation = Orientation::diagonal;
  std::vector<double> values;        // ascending, with multiplicity
  std::vector<std::uint32_t> seed;   // basis state whose diagonal entry is values[n]
  std::vector<std::size_t> cluster_of;
  std::vector<Cluster> clusters;
  double tolerance = 0.0;

  std::size_t size() const { return values.size(); }

  // Index of the cluster nearest to x, if within tol.
  std::optional<std::size_t> find_cluster(double x, double tol) const {
    std::optional<std::size_t> best;
    double best_d = tol;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const double d = std::abs(clusters[c].value - x);
      if (d <= best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  }

  // Distinct eigenvalues closest to x, nearest first.
  std::vector<double> nearest_values(double x, std::size_t count) const {
    std::vector<double> v;
    for (const auto& c : clusters) v.push_back(c.value);
    std::sort(v.begin(), v.end(), [x](double a, double b) { return std::abs(a - x) < std::abs(b - x); });
    if (v.size() > count) v.resize(count);
    return v;
  }
};

inline GradedSpectrum graded_spectrum(const detail::TriangularForm& t, double relative_tol) {
  GradedSpectrum sp;
  sp.sites = t.sites;
  sp.orientation = t.orientation;
  const auto dim = static_cast<std::size_t>(t.diagonal.size());
  sp.seed.resize(dim);
  std::iota(sp.seed.begin(), sp.seed.end(), 0u);
  std::stable_sort(sp.seed.begin(), sp.seed.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return t.diagonal(a) < t.diagonal(b); });
  sp.values.resize(dim);
  for (std::size_t n = 0; n < dim; ++n) sp.values[n] = t.diagonal(sp.seed[n]);
  const double radius = dim ? std::max(std::abs(sp.values.front()), std::abs(sp.values.back())) : 0.0;
  sp.tolerance = relative_tol * std::max(1.0, radius);
  sp.cluster_of.resize(dim);
  for (std::size_t n = 0; n < dim;) {
    std::size_t e = n + 1;
    while (e < dim && sp.values[e] - sp.values[e - 1] <= sp.tolerance) ++e;
    double mean = 0.0;
    for (std::size_t k = n; k < e; ++k) {
      mean += sp.values[k];
      sp.cluster_of[k] = sp.clusters.size();
    }
    sp.clusters.push_back({n, e, mean / double(e - n)});
    n = e;
  }
  return sp;
}

// Diagonal entries under the graded ordering, clustered with tolerance
// relative_tol * max(1, spectral radius).
inline GradedSpectrum graded_spectrum(const SparseOperator& h, double relative_tol = 1e-9) {
  return graded_spectrum(detail::analyze(h), relative_tol);
}

// Sorted spectrum of a graded-triangular operator.
inline std::vector<double> eigenvalues(const SparseOperator& h) { return graded_spectrum(h).values; }

// Eigenvectors aligned with a GradedSpectrum: column n belongs to values[n].
struct EigenvectorBasis {
  Eigen::MatrixXd vectors;
  std::vector<bool> present;            // per column
  std::vector<std::size_t> achieved;    // per cluster: nullspace dimension found
  std::vector<bool> defective;          // per cluster: achieved < multiplicity
  std::vector<double> resonance_norm;   // per cluster: max |C|
};

namespace detail {

// Substitution through the grades for every cluster. `rows` are the rows of
// the operator whose eigenvectors are wanted; `raising` tells whether its
// off-diagonal entries raise the grade.
inline EigenvectorBasis graded_eigenvectors(const TriangularForm& t, const OffDiagonalRows& rows, bool raising,
                                            const GradedSpectrum& sp, double rank_tol) {
  const GradedOrdering ord = GradedOrdering::make(t.sites);
  const auto dim = static_cast<Eigen::Index>(t.diagonal.size());
  const std::size_t n_grades = static_cast<std::size_t>(t.sites) + 1;

  std::vector<std::size_t> cluster_of_state(static_cast<std::size_t>(dim));
  for (std::size_t n = 0; n < sp.size(); ++n) cluster_of_state[sp.seed[n]] = sp.cluster_of[n];

  EigenvectorBasis out;
  out.vectors = Eigen::MatrixXd::Zero(dim, dim);
  out.present.assign(static_cast<std::size_t>(dim), false);
  out.achieved.assign(sp.clusters.size(), 0);
  out.defective.assign(sp.clusters.size(), false);
  out.resonance_norm.assign(sp.clusters.size(), 0.0);

  for (std::size_t c = 0; c < sp.clusters.size(); ++c) {
    const auto& cl = sp.clusters[c];
    const std::size_t m = cl.multiplicity();
    // position of each cluster member inside the cluster
    std::vector<std::pair<std::uint32_t, std::size_t>> members;
    for (std::size_t n = cl.begin; n < cl.end; ++n) members.emplace_back(sp.seed[n], n - cl.begin);
    std::sort(members.begin(), members.end());
    auto member_slot = [&](std::uint32_t s) -> std::size_t {
      auto it = std::lower_bound(members.begin(), members.end(), std::make_pair(s, std::size_t{0}));
      return it->second;
    };

    Eigen::MatrixXd resonance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    double w_max = 0.0;

    for (std::size_t n = cl.begin; n < cl.end; ++n) {
      const std::uint32_t k = sp.seed[n];
      const double lambda = t.diagonal(k);
      auto w = out.vectors.col(static_cast<Eigen::Index>(n));
      w(k) = 1.0;
      const auto gk = static_cast<std::size_t>(up_count(k));
      auto visit = [&](std::uint32_t s) {
        double acc = 0.0;
        for (std::size_t e = rows.ptr[s]; e < rows.ptr[s + 1]; ++e) acc += rows.val[e] * w(rows.col[e]);
        if (acc == 0.0) return;
        if (cluster_of_state[s] == c) {
          resonance(static_cast<Eigen::Index>(member_slot(s)), static_cast<Eigen::Index>(n - cl.begin)) = acc;
        } else {
          w(s) = -acc / (t.diagonal(s) - lambda);
        }
      };
      if (raising) {
        for (std::size_t g = gk + 1; g < n_grades; ++g)
          for (std::size_t p = ord.grade_begin[g]; p < ord.grade_begin[g + 1]; ++p) visit(ord.order[p]);
      } else {
        for (std::size_t g = gk; g-- > 0;)
          for (std::size_t p = ord.grade_begin[g]; p < ord.grade_begin[g + 1]; ++p) visit(ord.order[p]);
      }
      w_max = std::max(w_max, w.cwiseAbs().maxCoeff());
    }

    const double c_norm = resonance.cwiseAbs().maxCoeff();
    out.resonance_norm[c] = c_norm;
    const double scale = std::max(rows.norm_inf, 1.0) * std::max(w_max, 1.0);
    if (c_norm <= rank_tol * scale) {
      out.achieved[c] = m;
      for (std::size_t n = cl.begin; n < cl.end; ++n) out.present[n] = true;
      continue;
    }

    // Resonant cluster: eigenspace is W * null(C).
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(resonance, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > rank_tol * scale) ++rank;
    const std::size_t null_dim = m - rank;
    const Eigen::MatrixXd kernel = svd.matrixV().rightCols(static_cast<Eigen::Index>(null_dim));
    const Eigen::MatrixXd combined =
        out.vectors.middleCols(static_cast<Eigen::Index>(cl.begin), static_cast<Eigen::Index>(m)) * kernel;
    out.vectors.middleCols(static_cast<Eigen::Index>(cl.begin), static_cast<Eigen::Index>(m)).setZero();
    out.vectors.middleCols(static_cast<Eigen::Index>(cl.begin), static_cast<Eigen::Index>(null_dim)) = combined;
    for (std::size_t j = 0; j < null_dim; ++j) out.present[cl.begin + j] = true;
    out.achieved[c] = null_dim;
    out.defective[c] = null_dim < m;
  }
  return out;
}

} // namespace detail

// Right eigenvectors H v = lambda v, unnormalized (seed component 1 for
// non-resonant clusters).
inline EigenvectorBasis right_eigenvectors(const SparseOperator& h, const GradedSpectrum& sp,
                                           double rank_tol = 1e-10) {
  const auto t = detail::analyze(h);
  return detail::graded_eigenvectors(t, t.rows, t.orientation != Orientation::lowering, sp, rank_tol);
}

// Left eigenvectors H^dagger v = lambda v.
inline EigenvectorBasis left_eigenvectors(const SparseOperator& h, const GradedSpectrum& sp,
                                          double rank_tol = 1e-10) {
  const auto t = detail::analyze(h);
  return detail::graded_eigenvectors(t, t.rows_adj, t.orientation == Orientation::lowering, sp, rank_tol);
}

// Eigenvalues chi_n with paired right |chi_n> and left |chi_n#> vectors,
// <chi_m#|chi_n> = delta_mn over paired columns. Right vectors have unit norm.
class BiorthogonalSystem {
public:
  GradedSpectrum spectrum;
  Eigen::MatrixXd right;
  Eigen::MatrixXd left;
  std::vector<bool> has_right;
  std::vector<bool> has_left;
  std::vector<bool> paired;            // column n has a biorthonormal partner
  std::vector<bool> cluster_defective; // per cluster
  std::vector<double> pairing_condition; // per cluster: condition number of the pairing matrix

  std::size_t size() const { return spectrum.size(); }
  Eigen::Index dimension() const { return right.rows(); }
  int sites() const { return spectrum.sites; }
  double eigenvalue(std::size_t n) const { return spectrum.values[n]; }

  bool defective() const {
    return std::any_of(cluster_defective.begin(), cluster_defective.end(), [](bool b) { return b; });
  }
  std::size_t defective_cluster_count() const {
    return static_cast<std::size_t>(std::count(cluster_defective.begin(), cluster_defective.end(), true));
  }

  StateVector right_vector(std::size_t n) const { return right.col(static_cast<Eigen::Index>(n)).cast<Complex>(); }
  StateVector left_vector(std::size_t n) const { return left.col(static_cast<Eigen::Index>(n)).cast<Complex>(); }

  // Columns of the cluster that carry a right (or left) eigenvector.
  std::vector<std::size_t> cluster_columns(std::size_t cluster, bool left_side = false) const {
    std::vector<std::size_t> out;
    const auto& cl = spectrum.clusters[cluster];
    for (std::size_t n = cl.begin; n < cl.end; ++n)
      if (left_side ? has_left[n] : has_right[n]) out.push_back(n);
    return out;
  }
};

// Recombines left vectors inside each cluster so the pairing with the right
// vectors is the identity. Clusters whose bases are incomplete, or whose
// pairing matrix has condition number above max_condition, are flagged.
inline BiorthogonalSystem biorthonormalize(GradedSpectrum sp, EigenvectorBasis right, EigenvectorBasis left,
                                           double max_condition = 1e12) {
  BiorthogonalSystem sys;
  const auto dim = right.vectors.rows();
  sys.has_right = right.present;
  sys.has_left = left.present;
  sys.paired.assign(sp.size(), false);
  sys.cluster_defective.assign(sp.clusters.size(), false);
  sys.pairing_condition.assign(sp.clusters.size(), 0.0);
  sys.right = std::move(right.vectors);
  sys.left = std::move(left.vectors);

  for (Eigen::Index n = 0; n < dim; ++n) {
    const double r = sys.right.col(n).norm();
    if (r > 0.0) sys.right.col(n) /= r;
  }

  for (std::size_t c = 0; c < sp.clusters.size(); ++c) {
    const auto& cl = sp.clusters[c];
    const auto m = static_cast<Eigen::Index>(cl.multiplicity());
    const auto b = static_cast<Eigen::Index>(cl.begin);
    if (right.defective[c] || left.defective[c] || right.achieved[c] != left.achieved[c]) {
      sys.cluster_defective[c] = true;
      continue;
    }
    const Eigen::MatrixXd pairing = sys.left.middleCols(b, m).transpose() * sys.right.middleCols(b, m);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(pairing);
    const auto& s = svd.singularValues();
    const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
    sys.pairing_condition[c] = cond;
    if (!(cond <= max_condition)) {
      sys.cluster_defective[c] = true;
      continue;
    }
    // L <- L P^{-T}
    const Eigen::MatrixXd lt = pairing.partialPivLu().solve(sys.left.middleCols(b, m).transpose());
    sys.left.middleCols(b, m) = lt.transpose();
    for (std::size_t n = cl.begin; n < cl.end; ++n) sys.paired[n] = true;
  }
  sys.spectrum = std::move(sp);
  return sys;
}

inline BiorthogonalSystem solve_biorthogonal(const SparseOperator& h, double cluster_tol = 1e-9,
                                             double rank_tol = 1e-10) {
  const auto t = detail::analyze(h);
  GradedSpectrum sp = graded_spectrum(t, cluster_tol);
  const bool raising = t.orientation != Orientation::lowering;
  EigenvectorBasis r = detail::graded_eigenvectors(t, t.rows, raising, sp, rank_tol);
  EigenvectorBasis l = detail::graded_eigenvectors(t, t.rows_adj, !raising, sp, rank_tol);
  return biorthonormalize(std::move(sp), std::move(r), std::move(l));
}

// Extremal basis states (all-down, all-up) that are exact right
// eigenvectors of h, i.e. whose column has no off-diagonal entries.
inline std::vector<std::uint64_t> extremal_right_eigenstates(const SparseOperator& h) {
  const std::uint64_t dim = static_cast<std::uint64_t>(h.dimension());
  std::vector<std::uint64_t> out;
  for (std::uint64_t s : {std::uint64_t{0}, dim - 1}) {
    bool exact = true;
    for (std::uint64_t r = 0; r < dim && exact; ++r)
      if (r != s && h.coeff(r, s) != Complex{0}) exact = false;
    if (exact && (out.empty() || out.back() != s)) out.push_back(s);
  }
  return out;
}

// max |<chi_m#|chi_n> - delta_mn| over paired columns.
inline double biorthogonality_error(const BiorthogonalSystem& sys) {
  std::vector<Eigen::Index> idx;
  for (std::size_t n = 0; n < sys.size(); ++n)
    if (sys.paired[n]) idx.push_back(static_cast<Eigen::Index>(n));
  if (idx.empty()) return 0.0;
  const Eigen::MatrixXd l = sys.left(Eigen::all, idx);
  const Eigen::MatrixXd r = sys.right(Eigen::all, idx);
  Eigen::MatrixXd g = l.transpose() * r;
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

// max-entry norm of sum_n |chi_n><chi_n#| - 1. Meaningful when non-defective.
inline double completeness_error(const BiorthogonalSystem& sys) {
  Eigen::MatrixXd g = sys.right * sys.left.transpose();
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

// max_n ||H v_n - chi_n v_n|| / (||H|| ||v_n||) over present right (or left) vectors.
inline double max_eigen_residual(const SparseOperator& h, const BiorthogonalSystem& sys, bool left_side = false) {
  const SparseOperator op = left_side ? h.adjoint() : h;
  const double hn = std::max(op.norm_inf(), 1e-300);
  double worst = 0.0;
  for (std::size_t n = 0; n < sys.size(); ++n) {
    if (!(left_side ? sys.has_left[n] : sys.has_right[n])) continue;
    const StateVector v = left_side ? sys.left_vector(n) : sys.right_vector(n);
    const double vn = v.norm();
    if (vn == 0.0) continue;
    const StateVector r = apply(op, v) - sys.eigenvalue(n) * v;
    worst = std::max(worst, r.norm() / (hn * vn));
  }
  return worst;
}

} // namespace qchimera
