#pragma once

// One-dimensional fast paths: implicit QL for symmetric tridiagonal
// matrices, and Sturm counting / bisection / inverse iteration for
// tridiagonal matrices with an optional corner entry (periodic rings).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace anderson {

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Implicit QL with Wilkinson-type shifts (EISPACK tql1/tql2). `d` holds the
/// diagonal on entry and the ascending eigenvalues on exit; `e[i]` couples
/// i and i+1. When `z` is non-null it receives the eigenvectors as columns.
inline void tridiagonal_ql(std::vector<double>& d, std::span<const double> e,
                           Eigen::MatrixXd* z) {
  const std::size_t n = d.size();
  if (n == 0) {
    if (z) z->resize(0, 0);
    return;
  }
  if (e.size() + 1 < n) throw std::invalid_argument("tridiagonal_ql: off-diagonal too short");
  std::vector<double> sub(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) sub[i] = e[i];
  if (z) z->setIdentity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

  const double eps = std::numeric_limits<double>::epsilon();
  double f = 0.0;
  double tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(sub[l]));
    std::size_t m = l;
    while (m < n - 1 && std::abs(sub[m]) > eps * tst1) ++m;
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 60) throw ConvergenceError("tridiagonal_ql: no convergence");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * sub[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = sub[l] / (p + r);
        d[l + 1] = sub[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = sub[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * sub[ii];
          h = c * p;
          r = std::hypot(p, sub[ii]);
          sub[ii + 1] = s * r;
          s = sub[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          if (z) {
            auto a = z->col(static_cast<Eigen::Index>(ii));
            auto b = z->col(static_cast<Eigen::Index>(ii + 1));
            for (Eigen::Index k = 0; k < a.size(); ++k) {
              const double hk = b[k];
              b[k] = s * a[k] + c * hk;
              a[k] = c * a[k] - s * hk;
            }
          }
        }
        p = -s * s2 * c3 * el1 * sub[l] / dl1;
        sub[l] = s * p;
        d[l] = c * p;
      } while (std::abs(sub[l]) > eps * tst1);
    }
    d[l] += f;
    sub[l] = 0.0;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a] < d[b]; });
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = d[order[i]];
  d = std::move(sorted);
  if (z) {
    Eigen::MatrixXd v(z->rows(), z->cols());
    for (std::size_t i = 0; i < n; ++i) {
      v.col(static_cast<Eigen::Index>(i)) = z->col(static_cast<Eigen::Index>(order[i]));
    }
    *z = std::move(v);
  }
}

/// Symmetric tridiagonal matrix plus a corner coupling between the first
/// and last rows. off[i] couples i and i+1 for i < n-1; off[n-1] is the
/// corner (0 for an open path). For n == 2 the two entries add up.
struct CyclicTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const { return diag.size(); }
  double corner() const { return diag.size() >= 2 ? off[diag.size() - 1] : 0.0; }

  double norm_bound() const {
    const std::size_t n = size();
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = std::abs(diag[i]);
      if (n >= 2) {
        row += std::abs(off[i]) + std::abs(off[(i + n - 1) % n]);
      }
      m = std::max(m, row);
    }
    return m;
  }

  /// Gershgorin interval containing the spectrum.
  std::pair<double, double> spectrum_bounds() const {
    const std::size_t n = size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      if (n >= 2) r = std::abs(off[i]) + std::abs(off[(i + n - 1) % n]);
      lo = std::min(lo, diag[i] - r);
      hi = std::max(hi, diag[i] + r);
    }
    return {lo, hi};
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) y[i] = diag[i] * x[i];
    if (n < 2) return;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      y[i] += off[i] * x[i + 1];
      y[i + 1] += off[i] * x[i];
    }
    const double c = corner();
    if (c != 0.0) {
      y[0] += c * x[n - 1];
      y[n - 1] += c * x[0];
    }
  }
};

namespace detail {

/// Site order 0, n-1, 1, n-2, ...: a ring becomes a band of half-width 2.
inline std::size_t interleaved_position(std::size_t i, std::size_t n) {
  return (i <= (n - 1) / 2) ? 2 * i : 2 * (n - 1 - i) + 1;
}

}  // namespace detail

/// Orthogonally similar matrix without corner entry. A ring is permuted to
/// the interleaved band and reduced to tridiagonal form by Givens rotations
/// with bulge chasing; paths are returned unchanged.
inline CyclicTridiagonal reduce_to_tridiagonal(const CyclicTridiagonal& t) {
  const std::size_t n = t.size();
  if (n <= 2 || t.corner() == 0.0) {
    CyclicTridiagonal out = t;
    if (n == 2) {
      out.off[0] += out.off[1];
      out.off[1] = 0.0;
    } else if (n == 1) {
      out.off.assign(1, 0.0);
    }
    return out;
  }
  constexpr std::size_t w = 4;  // stored distances 0..3
  std::vector<double> band(n * w, 0.0);
  auto ref = [&](std::size_t i, std::size_t j) -> double& {
    if (i < j) std::swap(i, j);
    return band[i * w + (i - j)];
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto pi = detail::interleaved_position(i, n);
    ref(pi, pi) = t.diag[i];
    const std::size_t j = (i + 1) % n;
    ref(pi, detail::interleaved_position(j, n)) += t.off[i];
  }

  for (std::size_t k = 0; k + 2 < n; ++k) {
    std::size_t row = k + 2;
    std::size_t col = k;
    while (row < n) {
      const double x = ref(row - 1, col);
      const double y = ref(row, col);
      if (y == 0.0) break;
      const double r = std::hypot(x, y);
      const double c = x / r;
      const double s = y / r;
      const std::size_t p = row - 1, q = row;
      const std::size_t jlo = p >= 2 ? p - 2 : 0;
      const std::size_t jhi = std::min(n - 1, p + 3);
      for (std::size_t j = jlo; j <= jhi; ++j) {
        if (j == p || j == q) continue;
        const double ap = ref(p, j);
        const double aq = ref(q, j);
        ref(p, j) = c * ap + s * aq;
        ref(q, j) = -s * ap + c * aq;
      }
      const double app = ref(p, p), aqq = ref(q, q), apq = ref(p, q);
      ref(p, p) = c * c * app + 2.0 * c * s * apq + s * s * aqq;
      ref(q, q) = s * s * app - 2.0 * c * s * apq + c * c * aqq;
      ref(p, q) = c * s * (aqq - app) + (c * c - s * s) * apq;
      ref(q, col) = 0.0;
      col = row - 1;
      row += 2;
    }
  }
  CyclicTridiagonal out{std::vector<double>(n), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) out.diag[i] = ref(i, i);
  for (std::size_t i = 0; i + 1 < n; ++i) out.off[i] = ref(i + 1, i);
  return out;
}

namespace detail {

/// Sturm count for a matrix already without corner entry.
inline std::size_t sturm_count(const CyclicTridiagonal& t, double sigma, double pivmin) {
  const std::size_t n = t.size();
  std::size_t count = 0;
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    q = t.diag[i] - sigma - (i == 0 ? 0.0 : t.off[i - 1] * t.off[i - 1] / q);
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++count;
  }
  return count;
}

inline double sturm_pivmin(const CyclicTridiagonal& t) {
  double m = 1.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) m = std::max(m, t.off[i] * t.off[i]);
  return std::numeric_limits<double>::min() * m;
}

}  // namespace detail

/// Number of eigenvalues strictly below sigma. Rings are reduced first, which
/// costs O(n^2); repeated queries should reduce once and count on the result.
inline std::size_t count_below(const CyclicTridiagonal& t, double sigma) {
  const auto r = reduce_to_tridiagonal(t);
  return detail::sturm_count(r, sigma, detail::sturm_pivmin(r));
}

/// Eigenvalues in [lo, hi) by interval bisection on Sturm counts, ascending,
/// with multiplicity. Each value is accurate to about 4 eps ||T||.
inline std::vector<double> bisect_eigenvalues(const CyclicTridiagonal& t, double lo, double hi) {
  std::vector<double> out;
  if (!(hi > lo) || t.size() == 0) return out;
  const auto r = reduce_to_tridiagonal(t);
  const double pivmin = detail::sturm_pivmin(r);
  auto count = [&](double s) { return detail::sturm_count(r, s, pivmin); };
  const double norm = std::max(1.0, t.norm_bound());
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * norm;
  struct Piece {
    double a, b;
    std::size_t ca, cb;
  };
  const auto c_lo = count(lo);
  const auto c_hi = std::max(c_lo, count(hi));
  std::vector<Piece> stack{{lo, hi, c_lo, c_hi}};
  while (!stack.empty()) {
    const Piece p = stack.back();
    stack.pop_back();
    if (p.cb <= p.ca) continue;
    const double mid = 0.5 * (p.a + p.b);
    if (p.b - p.a <= tol || mid <= p.a || mid >= p.b) {
      out.insert(out.end(), p.cb - p.ca, mid);
      continue;
    }
    const auto cm = std::clamp(count(mid), p.ca, p.cb);
    stack.push_back({mid, p.b, cm, p.cb});
    stack.push_back({p.a, mid, p.ca, cm});
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// LU factorization with partial pivoting of T - sigma in the interleaved
/// order 0, n-1, 1, n-2, ..., which turns the corner coupling into a band of
/// half-width 2. Tiny pivots are replaced so that solves near an eigenvalue
/// stay finite (that is what inverse iteration wants).
class ShiftedBandSolver {
 public:
  ShiftedBandSolver(const CyclicTridiagonal& t, double sigma, double tiny)
      : n_(t.size()), perm_(n_), pos_(n_), band_(n_ * kWidth, 0.0), mult_(n_ * 2, 0.0),
        piv_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      pos_[i] = detail::interleaved_position(i, n_);
      perm_[pos_[i]] = i;
    }
    for (std::size_t i = 0; i < n_; ++i) at(pos_[i], pos_[i]) = t.diag[i] - sigma;
    auto couple = [&](std::size_t i, std::size_t j, double v) {
      if (v == 0.0) return;
      at(pos_[i], pos_[j]) += v;
      at(pos_[j], pos_[i]) += v;
    };
    for (std::size_t i = 0; i + 1 < n_; ++i) couple(i, i + 1, t.off[i]);
    if (n_ >= 3) couple(n_ - 1, 0, t.corner());
    if (n_ == 2) couple(0, 1, t.corner());
    factor(tiny);
  }

  /// Overwrites x (natural site order) with (T - sigma)^{-1} x.
  void solve(std::span<double> x) const {
    std::vector<double> y(n_);
    for (std::size_t p = 0; p < n_; ++p) y[p] = x[perm_[p]];
    for (std::size_t k = 0; k < n_; ++k) {
      if (piv_[k] != k) std::swap(y[k], y[piv_[k]]);
      for (std::size_t r = k + 1; r <= std::min(k + 2, n_ - 1); ++r) {
        y[r] -= mult_[k * 2 + (r - k - 1)] * y[k];
      }
    }
    for (std::size_t k = n_; k-- > 0;) {
      double s = y[k];
      for (std::size_t c = k + 1; c <= std::min(k + 4, n_ - 1); ++c) s -= get(k, c) * y[c];
      y[k] = s / get(k, k);
    }
    for (std::size_t p = 0; p < n_; ++p) x[perm_[p]] = y[p];
  }

 private:
  static constexpr std::size_t kWidth = 7;  // columns r-2 .. r+4

  double& at(std::size_t r, std::size_t c) { return band_[r * kWidth + (c + 2 - r)]; }
  double get(std::size_t r, std::size_t c) const { return band_[r * kWidth + (c + 2 - r)]; }

  void factor(double tiny) {
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t last = std::min(k + 2, n_ - 1);
      std::size_t p = k;
      for (std::size_t r = k + 1; r <= last; ++r) {
        if (std::abs(get(r, k)) > std::abs(get(p, k))) p = r;
      }
      piv_[k] = p;
      const std::size_t cmax = std::min(k + 4, n_ - 1);
      if (p != k) {
        for (std::size_t c = k; c <= cmax; ++c) std::swap(at(k, c), at(p, c));
      }
      double& pivot = at(k, k);
      if (std::abs(pivot) < tiny) pivot = pivot < 0 ? -tiny : tiny;
      for (std::size_t r = k + 1; r <= last; ++r) {
        const double mlt = get(r, k) / pivot;
        mult_[k * 2 + (r - k - 1)] = mlt;
        at(r, k) = 0.0;
        if (mlt == 0.0) continue;
        for (std::size_t c = k + 1; c <= cmax; ++c) at(r, c) -= mlt * get(k, c);
      }
    }
  }

  std::size_t n_;
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> pos_;
  std::vector<double> band_;
  std::vector<double> mult_;
  std::vector<std::size_t> piv_;
};

/// Eigenvectors for the given (ascending) eigenvalues by inverse iteration.
/// Vectors whose eigenvalues lie within a cluster gap are
/// reorthogonalized against each other.
inline Eigen::MatrixXd inverse_iteration(const CyclicTridiagonal& t,
                                         std::span<const double> eigenvalues) {
  const std::size_t n = t.size();
  const std::size_t m = eigenvalues.size();
  Eigen::MatrixXd vecs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  if (n == 0 || m == 0) return vecs;
  const double eps = std::numeric_limits<double>::epsilon();
  const double norm = std::max(1.0, t.norm_bound());
  const double tiny = eps * norm;
  const double cluster_gap = 1e-7 * norm;
  const double shift_step = 10.0 * eps * norm;
  const double res_tol = 1e-11 * norm;

  std::vector<double> x(n), tx(n);
  std::size_t cluster_start = 0;
  double prev_sigma = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double sigma = eigenvalues[j];
    if (j > 0 && eigenvalues[j] - eigenvalues[j - 1] > cluster_gap) {
      cluster_start = j;
    } else if (j > 0 && sigma <= prev_sigma) {
      sigma = prev_sigma + shift_step;
    }
    prev_sigma = sigma;
    ShiftedBandSolver solver(t, sigma, tiny);

    std::uint64_t state = 0x853c49e6748fea9bULL ^ (j * 0x9e3779b97f4a7c15ULL);
    for (auto& v : x) {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      v = static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
    }
    for (int it = 0; it < 8; ++it) {
      solver.solve(x);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = cluster_start; k < j; ++k) {
          const auto col = vecs.col(static_cast<Eigen::Index>(k));
          double dot = 0.0;
          for (std::size_t i = 0; i < n; ++i) dot += col[static_cast<Eigen::Index>(i)] * x[i];
          for (std::size_t i = 0; i < n; ++i) x[i] -= dot * col[static_cast<Eigen::Index>(i)];
        }
      }
      double nrm = 0.0;
      for (double v : x) nrm += v * v;
      nrm = std::sqrt(nrm);
      if (!(nrm > 0.0) || !std::isfinite(nrm)) {
        throw ConvergenceError("inverse_iteration: breakdown");
      }
      for (auto& v : x) v /= nrm;
      if (it >= 2) {
        t.multiply(x, tx);
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double r = tx[i] - eigenvalues[j] * x[i];
          res += r * r;
        }
        if (std::sqrt(res) <= res_tol) break;
      }
    }
    // Sign convention: the entry of largest magnitude is positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(x[i]) > std::abs(x[arg])) arg = i;
    }
    const double sign = x[arg] < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) vecs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sign * x[i];
  }
  return vecs;
}

}  // namespace anderson
