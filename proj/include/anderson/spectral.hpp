#pragma once

// Eigendecomposition (full and energy-windowed), localization centers and
// eigenvalue counting.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anderson/hamiltonian.hpp"
#include "anderson/sparse.hpp"
#include "anderson/tridiagonal.hpp"

namespace anderson {

/// Half-open interval [lo, hi).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval around(double center, double halfwidth) {
    return {center - halfwidth, center + halfwidth};
  }
  static Interval everything() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  bool contains(double x) const { return x >= lo && x < hi; }
  bool empty() const { return !(hi > lo); }
  double length() const { return empty() ? 0.0 : hi - lo; }
  bool operator==(const Interval&) const = default;
};

struct DenseCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CenterSet {
  std::vector<std::size_t> sites;  // X(psi), ascending site indices
  std::size_t canonical = 0;       // lexicographic minimum of X(psi)
};

/// X(psi) = argmax |psi| with relative tie tolerance 1e-12.
inline CenterSet localization_center(std::span<const double> psi, double rel_tol = 1e-12) {
  double mx = 0.0;
  for (double v : psi) mx = std::max(mx, std::abs(v));
  if (!(mx > 0.0)) throw std::invalid_argument("localization_center: zero vector");
  CenterSet c;
  const double cut = mx * (1.0 - rel_tol);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (std::abs(psi[i]) >= cut) c.sites.push_back(i);
  }
  c.canonical = c.sites.front();
  return c;
}

inline CenterSet localization_center(const Eigen::VectorXd& psi) {
  return localization_center(std::span<const double>(psi.data(), static_cast<std::size_t>(psi.size())));
}

struct SpectralData {
  std::size_t dimension = 0;
  std::vector<double> eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;     // dimension x eigenvalues.size(), empty when values only
  std::vector<CenterSet> centers;
  double residual_bound = 0.0;

  bool has_vectors() const { return eigenvectors.cols() > 0 || eigenvalues.empty(); }
  std::size_t size() const { return eigenvalues.size(); }
  std::size_t center(std::size_t j) const { return centers.at(j).canonical; }
  Eigen::VectorXd vector(std::size_t j) const { return eigenvectors.col(static_cast<Eigen::Index>(j)); }
};

struct SolveOptions {
  bool vectors = true;
  std::size_t dense_cap = 4096;
};

namespace detail {

inline double degeneracy_tol(double norm) { return 1e-12 * std::max(1.0, norm); }

/// Orders eigenpairs by eigenvalue, then by canonical center inside runs of
/// numerically equal eigenvalues, and fills centers and residual_bound.
inline void finish(SpectralData& s, const SymmetricSparse& h) {
  const std::size_t m = s.eigenvalues.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return s.eigenvalues[a] < s.eigenvalues[b]; });
  if (s.eigenvectors.cols() > 0) {
    s.centers.resize(m);
    for (std::size_t j = 0; j < m; ++j) s.centers[j] = localization_center(s.vector(j));
    const double tol = degeneracy_tol(h.norm_bound());
    std::size_t start = 0;
    while (start < m) {
      std::size_t end = start + 1;
      while (end < m && s.eigenvalues[order[end]] - s.eigenvalues[order[end - 1]] <= tol) ++end;
      std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(end), [&](auto a, auto b) {
                         return s.centers[a].canonical < s.centers[b].canonical;
                       });
      start = end;
    }
  }
  std::vector<double> vals(m);
  for (std::size_t j = 0; j < m; ++j) vals[j] = s.eigenvalues[order[j]];
  // Keep the eigenvalue list non-decreasing after the center reordering.
  std::sort(vals.begin(), vals.end());
  s.eigenvalues = std::move(vals);
  if (s.eigenvectors.cols() > 0) {
    Eigen::MatrixXd v(s.eigenvectors.rows(), s.eigenvectors.cols());
    std::vector<CenterSet> c(m);
    for (std::size_t j = 0; j < m; ++j) {
      v.col(static_cast<Eigen::Index>(j)) = s.eigenvectors.col(static_cast<Eigen::Index>(order[j]));
      c[j] = std::move(s.centers[order[j]]);
    }
    s.eigenvectors = std::move(v);
    s.centers = std::move(c);
    double worst = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const Eigen::VectorXd psi = s.vector(j);
      worst = std::max(worst, (h.multiply(psi) - s.eigenvalues[j] * psi).norm());
    }
    s.residual_bound = worst;
  }
}

/// Solves one connected component; returns values (and vectors, local
/// indexing) for eigenvalues in `window` (closed), or all when not given.
inline void solve_component(const SymmetricSparse& h, std::optional<std::pair<double, double>> window,
                            bool vectors, std::size_t dense_cap, std::vector<double>& values,
                            Eigen::MatrixXd& vecs) {
  const std::size_t n = h.size();
  auto keep = [&](double e) { return !window || (e >= window->first && e <= window->second); };
  if (auto t = h.as_cyclic_tridiagonal()) {
    if (t->corner() == 0.0 && !window) {
      std::vector<double> d = t->diag;
      if (vectors) {
        if (n > dense_cap) throw DenseCapExceeded("eigendecompose: size exceeds dense cap, use eigen_window");
        Eigen::MatrixXd z;
        tridiagonal_ql(d, std::span<const double>(t->off.data(), n - 1), &z);
        vecs = std::move(z);
      } else {
        tridiagonal_ql(d, std::span<const double>(t->off.data(), n == 0 ? 0 : n - 1), nullptr);
      }
      values = std::move(d);
      return;
    }
    if (window) {
      values = bisect_eigenvalues(*t, window->first,
                                  std::nextafter(window->second, std::numeric_limits<double>::infinity()));
    } else {
      auto r = reduce_to_tridiagonal(*t);
      values = r.diag;
      tridiagonal_ql(values, std::span<const double>(r.off.data(), n - 1), nullptr);
    }
    if (vectors) {
      if (!window && n > dense_cap) {
        throw DenseCapExceeded("eigendecompose: size exceeds dense cap, use eigen_window");
      }
      vecs = inverse_iteration(*t, values);
    }
    return;
  }
  if (n > dense_cap) throw DenseCapExceeded("dense eigensolve: size exceeds dense cap");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      h.dense(), vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolve failed");
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
    if (keep(es.eigenvalues()[j])) idx.push_back(j);
  }
  values.resize(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) values[k] = es.eigenvalues()[idx[k]];
  if (vectors) {
    vecs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) vecs.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(idx[k]);
  }
}

inline SpectralData solve(const SymmetricSparse& h, std::optional<std::pair<double, double>> window,
                          const SolveOptions& opt) {
  SpectralData s;
  s.dimension = h.size();
  const auto comps = h.components();
  std::vector<std::vector<double>> vals(comps.size());
  std::vector<Eigen::MatrixXd> vecs(comps.size());
  std::size_t total = 0;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (comps.size() == 1) {
      solve_component(h, window, opt.vectors, opt.dense_cap, vals[c], vecs[c]);
    } else {
      solve_component(h.restricted(comps[c]), window, opt.vectors, opt.dense_cap, vals[c], vecs[c]);
    }
    total += vals[c].size();
  }
  s.eigenvalues.reserve(total);
  if (opt.vectors) {
    s.eigenvectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(h.size()), static_cast<Eigen::Index>(total));
  }
  Eigen::Index col = 0;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (std::size_t j = 0; j < vals[c].size(); ++j, ++col) {
      s.eigenvalues.push_back(vals[c][j]);
      if (opt.vectors) {
        for (std::size_t k = 0; k < comps[c].size(); ++k) {
          s.eigenvectors(static_cast<Eigen::Index>(comps[c][k]), col) =
              vecs[c](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
        }
      }
    }
  }
  finish(s, h);
  return s;
}

}  // namespace detail

/// Full spectrum; d=1 paths use implicit QL, rings QL on the reduced band plus inverse
/// iteration, everything else a dense symmetric solve.
inline SpectralData eigendecompose(const SymmetricSparse& h, const SolveOptions& opt = {}) {
  if (opt.vectors && h.size() > opt.dense_cap && !h.as_cyclic_tridiagonal()) {
    throw DenseCapExceeded("eigendecompose: |Lambda| = " + std::to_string(h.size()) +
                           " exceeds the dense cap " + std::to_string(opt.dense_cap) +
                           "; use eigen_window");
  }
  return detail::solve(h, std::nullopt, opt);
}

inline SpectralData eigendecompose(const Hamiltonian& h, const SolveOptions& opt = {}) {
  return eigendecompose(h.matrix(), opt);
}

/// Eigenvalue counting by Sturm sequences (paths, reduced rings) or LDL^T
/// inertia (other components). Reductions are done once per operator.
class SpectrumCounter {
 public:
  explicit SpectrumCounter(const SymmetricSparse& h) {
    const auto comps = h.components();
    for (const auto& c : comps) {
      const auto sub = comps.size() == 1 ? h : h.restricted(c);
      if (auto t = sub.as_cyclic_tridiagonal()) {
        auto r = reduce_to_tridiagonal(*t);
        const double pivmin = detail::sturm_pivmin(r);
        chains_.push_back({std::move(r), pivmin});
      } else {
        dense_.push_back(sub.dense());
      }
    }
  }

  /// Number of eigenvalues strictly below sigma.
  std::size_t below(double sigma) const {
    std::size_t n = 0;
    for (const auto& [t, pivmin] : chains_) n += detail::sturm_count(t, sigma, pivmin);
    for (const auto& m : dense_) {
      Eigen::MatrixXd a = m;
      a.diagonal().array() -= sigma;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
      const auto d = ldlt.vectorD();
      for (Eigen::Index i = 0; i < d.size(); ++i) n += d[i] < 0;
    }
    return n;
  }

  /// N(H, [a,b)).
  std::size_t in(Interval j) const {
    if (j.empty()) return 0;
    const auto b = below(j.hi);
    const auto a = below(j.lo);
    return b > a ? b - a : 0;
  }

 private:
  std::vector<std::pair<CyclicTridiagonal, double>> chains_;
  std::vector<Eigen::MatrixXd> dense_;
};

inline std::size_t count_below(const SymmetricSparse& h, double sigma) { return SpectrumCounter(h).below(sigma); }

/// N(H, [a,b)) from inertia, without eigenvalues.
inline std::size_t count_in(const SymmetricSparse& h, Interval j) {
  if (j.empty()) return 0;
  return SpectrumCounter(h).in(j);
}

inline std::size_t count_in(const Hamiltonian& h, Interval j) { return count_in(h.matrix(), j); }

struct EnergyWindowResult {
  double center = 0.0;
  double radius = 0.0;
  SpectralData data;
  std::size_t inertia_count = 0;
  bool complete = false;
  bool boundary_ambiguous = false;
};

/// All eigenpairs with |E - E0| <= radius.
inline EnergyWindowResult eigen_window(const SymmetricSparse& h, double E0, double radius,
                                       const SolveOptions& opt = {}) {
  if (!(radius > 0.0)) throw std::invalid_argument("eigen_window: radius must be positive");
  const double lo = E0 - radius;
  const double hi = E0 + radius;
  EnergyWindowResult r;
  r.center = E0;
  r.radius = radius;
  SolveOptions o = opt;
  o.dense_cap = std::max(opt.dense_cap, h.size());
  r.data = detail::solve(h, std::make_pair(lo, hi), o);
  const SpectrumCounter counter(h);
  const double hi_next = std::nextafter(hi, std::numeric_limits<double>::infinity());
  r.inertia_count = counter.below(hi_next) - counter.below(lo);
  r.complete = r.inertia_count == r.data.size();
  const double delta = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  r.boundary_ambiguous = counter.below(lo - delta) != counter.below(lo + delta) ||
                         counter.below(hi - delta) != counter.below(hi + delta);
  return r;
}

inline EnergyWindowResult eigen_window(const Hamiltonian& h, double E0, double radius,
                                       const SolveOptions& opt = {}) {
  return eigen_window(h.matrix(), E0, radius, opt);
}

namespace detail {
inline bool in_half_open(double e, Interval j) {
  if (std::isfinite(j.lo) && std::abs(e - j.lo) <= 1e-12 * std::max(1.0, std::abs(j.lo))) e = j.lo;
  if (std::isfinite(j.hi) && std::abs(e - j.hi) <= 1e-12 * std::max(1.0, std::abs(j.hi))) e = j.hi;
  return j.contains(e);
}
}  // namespace detail

/// N(H, J), J = [a, b). Eigenvalues within 1e-12 (relative) of an endpoint
/// are snapped onto it.
inline std::size_t count_eigenvalues(const SpectralData& s, Interval j) {
  if (j.empty()) return 0;
  std::size_t n = 0;
  for (double e : s.eigenvalues) n += detail::in_half_open(e, j) ? 1 : 0;
  return n;
}

/// N(H, J, sub): eigenvalues in J whose canonical center lies in `sub`
/// (a membership mask over sites).
inline std::size_t count_localized(const SpectralData& s, Interval j, const std::vector<char>& sub) {
  if (!s.has_vectors()) throw std::invalid_argument("count_localized: eigenvectors required");
  if (j.empty()) return 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (detail::in_half_open(s.eigenvalues[k], j) && sub.at(s.center(k))) ++n;
  }
  return n;
}

inline std::vector<char> site_mask(std::size_t n, std::span<const std::size_t> sites) {
  std::vector<char> m(n, 0);
  for (auto s : sites) m.at(s) = 1;
  return m;
}

struct Truncation {
  Eigen::VectorXd restricted;  // psi on `sub`, local ordering
  double norm = 0.0;
  double outside_norm = 0.0;   // ||(1 - chi_sub) psi||
  double residual = 0.0;       // ||(H_sub - E) psi_sub||
};

/// chi_sub psi and the quasimode residual against the Dirichlet restriction
/// of `h` to `sub` (strictly increasing indices).
inline Truncation truncate_eigenfunction(const SymmetricSparse& h, const Eigen::VectorXd& psi, double E,
                                         std::span<const std::size_t> sub) {
  if (sub.empty()) throw std::invalid_argument("truncate_eigenfunction: empty site set");
  Truncation t;
  t.restricted.resize(static_cast<Eigen::Index>(sub.size()));
  for (std::size_t k = 0; k < sub.size(); ++k) t.restricted[static_cast<Eigen::Index>(k)] = psi[static_cast<Eigen::Index>(sub[k])];
  t.norm = t.restricted.norm();
  // Summed directly: 1 - ||chi psi||^2 would cancel catastrophically.
  double out2 = 0.0;
  const auto in = site_mask(h.size(), sub);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!in[i]) out2 += psi[static_cast<Eigen::Index>(i)] * psi[static_cast<Eigen::Index>(i)];
  }
  t.outside_norm = std::sqrt(out2);
  const auto hs = h.restricted(sub);
  t.residual = (hs.multiply(t.restricted) - E * t.restricted).norm();
  return t;
}

}  // namespace anderson
