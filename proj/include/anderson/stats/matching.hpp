#pragma once

// Eigenvalue correspondence between the parent operator H_{k+1} (eigenvalues
// in J localized in C_p) and the block operators H_{k,p} (eigenvalues in
// J + I(0, eps)), the discrepancy |xi^(1)(f) - eta(f)|, the terms bounding
// the unmatched block eigenvalues, and the split by N(H_{k,p}, J') = 1 / >= 2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "anderson/pointprocess.hpp"
#include "anderson/spectral.hpp"
#include "anderson/stats/common.hpp"

namespace anderson::stats {

/// Minimum-cost assignment of every row to a distinct column (rows <= cols).
/// Returns the column of each row.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  const std::size_t m = cost[0].size();
  if (m < n) throw std::invalid_argument("hungarian: more rows than columns");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) col[p[j] - 1] = j - 1;
  }
  return col;
}

struct Level {
  double E0 = 0.0;
  double a = 2.0;           // J = [E0 - a / |Lambda_{k+1}|, E0 + a / |Lambda_{k+1}|)
  double epsilon = 0.0;     // eps_{k-1}
  double volume = 0.0;      // |Lambda_{k+1}|
  double block_volume = 0;  // |Lambda_k| = |D_p|

  Interval J() const { return {E0 - a / volume, E0 + a / volume}; }
  Interval widened(double multiple) const {
    const auto j = J();
    return {j.lo - multiple * epsilon, j.hi + multiple * epsilon};
  }
};

struct LevelEigen {
  double E = 0.0;
  std::vector<double> u;  // scaled center in the parent frame
};

/// Per block p of one realization.
struct BlockData {
  std::vector<LevelEigen> parent_core;   // H_{k+1}, E in J + I(0, 2 eps), center in C_p
  std::vector<LevelEigen> block;         // H_{k,p}, E in J + I(0, eps)
  double parent_strip = 0;               // H_{k+1}, E in J, center in D_p \ C_p
  double block_strip = 0;                // H_{k,p}, E in J', center in D_p \ C_p
  double n_shell_S = 0;                  // N(H'_{k,p}, J + I(0, 3 eps)), H' = H_{k+1}|S_p
  double n_shell_T = 0;                  // N(H''_{k,p}, J + I(0, 2 eps)), H'' = H_{k,p}|T_p
};

struct LevelSample {
  std::vector<BlockData> blocks;
  double parent_total = 0;      // N(H_{k+1}, J)
  double parent_remainder = 0;  // N(H_{k+1}, J, remainder)
  bool regular_proxy = true;    // all decay checks of this realization passed
};

struct BlockOutcome {
  double n_parent = 0;   // N(H_{k+1}, J, C_p)
  double n_block = 0;    // N(H_{k,p}, J')
  double xi1 = 0;        // xi^(1)_{k+1,p}(f)
  double eta = 0;        // eta_{k+1,p}(f)
  double discrepancy = 0;
};

struct MatchingSample {
  std::vector<double> distances;
  std::size_t unmatched_parent = 0;
  std::size_t unmatched_block = 0;  // block eigenvalues in J' outside the range of the correspondence
  bool injective = true;
  double discrepancy_blocks = 0;    // sum_p |xi^(1)_p(f) - eta_p(f)|
  double discrepancy_total = 0;     // |xi^(1)(f) - eta(f)|
  double term_I = 0, term_II = 0, term_III = 0, term_IV = 0;
  double boundary_centers = 0;      // parent eigenvalues in J centered in D_p \ C_p
  std::vector<BlockOutcome> blocks;
  bool regular_proxy = true;
};

namespace detail {

inline double f_at(const TestFunction& f, const Level& lv, const LevelEigen& x) {
  return f(lv.volume * (x.E - lv.E0), x.u);
}

}  // namespace detail

/// f_sup is ||f||_inf.
inline MatchingSample match_level(const LevelSample& s, const Level& lv, const TestFunction& f, double f_sup) {
  MatchingSample out;
  out.regular_proxy = s.regular_proxy;
  const auto J = lv.J();
  const auto J1 = lv.widened(1.0);
  double xi_total = 0, eta_total = 0;
  for (const auto& b : s.blocks) {
    BlockOutcome bo;
    std::vector<LevelEigen> E;
    for (const auto& x : b.parent_core) {
      if (anderson::detail::in_half_open(x.E, J)) {
        E.push_back(x);
      } else {
        out.term_II += f_sup;  // (J + I(0, 2 eps)) \ J
      }
    }
    std::vector<LevelEigen> F;
    for (const auto& y : b.block) {
      if (anderson::detail::in_half_open(y.E, J1)) F.push_back(y);
    }
    std::sort(E.begin(), E.end(), [](const auto& x, const auto& y) { return x.E < y.E; });
    std::sort(F.begin(), F.end(), [](const auto& x, const auto& y) { return x.E < y.E; });
    bo.n_parent = static_cast<double>(E.size());
    bo.n_block = static_cast<double>(F.size());
    for (const auto& x : E) bo.xi1 += detail::f_at(f, lv, x);
    for (const auto& y : F) bo.eta += detail::f_at(f, lv, y);
    bo.discrepancy = std::abs(bo.xi1 - bo.eta);
    xi_total += bo.xi1;
    eta_total += bo.eta;

    std::vector<char> f_used(F.size(), 0);
    std::size_t start = 0;
    while (start < E.size()) {
      std::size_t end = start + 1;
      // Open intervals I(E, eps) overlap iff neighbours are closer than 2 eps.
      while (end < E.size() && E[end].E - E[end - 1].E < 2.0 * lv.epsilon) ++end;
      const double lo = E[start].E - lv.epsilon;
      const double hi = E[end - 1].E + lv.epsilon;
      std::vector<std::size_t> cand;
      for (std::size_t j = 0; j < F.size(); ++j) {
        if (F[j].E > lo && F[j].E < hi) cand.push_back(j);
      }
      const std::size_t rows = end - start;
      if (!cand.empty()) {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (parent, block)
        if (rows <= cand.size()) {
          std::vector<std::vector<double>> cost(rows, std::vector<double>(cand.size()));
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cand.size(); ++j) cost[i][j] = std::abs(E[start + i].E - F[cand[j]].E);
          }
          const auto col = hungarian(cost);
          for (std::size_t i = 0; i < rows; ++i) pairs.emplace_back(start + i, cand[col[i]]);
        } else {
          std::vector<std::vector<double>> cost(cand.size(), std::vector<double>(rows));
          for (std::size_t j = 0; j < cand.size(); ++j) {
            for (std::size_t i = 0; i < rows; ++i) cost[j][i] = std::abs(E[start + i].E - F[cand[j]].E);
          }
          const auto col = hungarian(cost);
          for (std::size_t j = 0; j < cand.size(); ++j) pairs.emplace_back(start + col[j], cand[j]);
        }
        for (const auto& [i, j] : pairs) {
          if (f_used[j]) out.injective = false;
          f_used[j] = 1;
          out.distances.push_back(std::abs(E[i].E - F[j].E));
          out.term_I += std::abs(detail::f_at(f, lv, E[i]) - detail::f_at(f, lv, F[j]));
        }
        out.unmatched_parent += rows - pairs.size();
      } else {
        out.unmatched_parent += rows;
      }
      start = end;
    }
    for (char u : f_used) out.unmatched_block += !u;
    out.discrepancy_blocks += bo.discrepancy;
    out.term_III += f_sup * b.n_shell_S;
    out.term_IV += f_sup * b.n_shell_T;
    out.boundary_centers += b.parent_strip;
    out.blocks.push_back(bo);
  }
  out.discrepancy_total = std::abs(xi_total - eta_total);
  return out;
}

struct MatchingReport {
  std::size_t n_realizations = 0;
  std::size_t pairs = 0;
  double distance_bound = 0.0;  // L_k^d eps_{k-1}
  std::size_t within_bound = 0;
  double fraction_within = 1.0;
  double max_distance = 0.0;
  std::size_t unmatched_parent = 0;
  std::size_t unmatched_block = 0;
  bool injective = true;
  MeanEstimate discrepancy;        // per realization sum_p |xi^(1)_p(f) - eta_p(f)|
  MeanEstimate discrepancy_total;  // per realization |xi^(1)(f) - eta(f)|
  MeanEstimate term_I, term_II, term_III, term_IV;
  MeanEstimate boundary_centers;
  std::size_t unmatched_within_terms = 0;  // realizations with unmatched_block <= (II + III + IV) / ||f||
};

inline MatchingReport matching_report(std::span<const MatchingSample> samples, double distance_bound,
                                      double f_sup) {
  MatchingReport r;
  r.n_realizations = samples.size();
  r.distance_bound = distance_bound;
  std::vector<double> d, dt, t1, t2, t3, t4, bc;
  for (const auto& s : samples) {
    for (double x : s.distances) {
      ++r.pairs;
      r.within_bound += x <= distance_bound;
      r.max_distance = std::max(r.max_distance, x);
    }
    r.unmatched_parent += s.unmatched_parent;
    r.unmatched_block += s.unmatched_block;
    r.injective = r.injective && s.injective;
    d.push_back(s.discrepancy_blocks);
    dt.push_back(s.discrepancy_total);
    t1.push_back(s.term_I);
    t2.push_back(s.term_II);
    t3.push_back(s.term_III);
    t4.push_back(s.term_IV);
    bc.push_back(s.boundary_centers);
    const double allowance = f_sup > 0 ? (s.term_II + s.term_III + s.term_IV) / f_sup : 0.0;
    r.unmatched_within_terms += static_cast<double>(s.unmatched_block) <= allowance + 1e-9;
  }
  r.fraction_within = r.pairs ? static_cast<double>(r.within_bound) / static_cast<double>(r.pairs) : 1.0;
  r.discrepancy = MeanEstimate::of(d);
  r.discrepancy_total = MeanEstimate::of(dt);
  r.term_I = MeanEstimate::of(t1);
  r.term_II = MeanEstimate::of(t2);
  r.term_III = MeanEstimate::of(t3);
  r.term_IV = MeanEstimate::of(t4);
  r.boundary_centers = MeanEstimate::of(bc);
  return r;
}

/// Split of sum_p |xi^(1)_p(f) - eta_p(f)| by the events N(H_{k,p}, J') = 1
/// (A = A1 + A2) and >= 2 (B).
struct MinamiVariantReport {
  MeanEstimate A1, A2, B;
  std::size_t events_single = 0, events_multi = 0, events_empty = 0;
  std::size_t empty_nonzero = 0;  // blocks with N(H_{k,p}, J') = 0 but nonzero discrepancy
  std::size_t proxy_blocks = 0;
  std::size_t upper_bound_holds = 0;  // N(H_{k+1}, J, C_p) <= N(H_{k,p}, J') on proxy realizations
  MeanEstimate factorial_moment_sum;  // per realization sum_p N_p (N_p - 1)
  double mechanism_bound = 0.0;       // 2 ||f|| E[sum_p N_p (N_p - 1)]
  double mechanism_bound_se = 0.0;
  double minami_bound = 0.0;          // 2 ||f|| C_M (|J'| |Lambda_k|)^2 N_k
  double b_fraction = 0.0;            // B / (A + B)
};

inline MinamiVariantReport minami_variant(std::span<const MatchingSample> samples, const Level& lv, double f_sup,
                                          double C_M) {
  MinamiVariantReport r;
  std::vector<double> a1, a2, b, fm;
  std::size_t n_blocks = 0;
  for (const auto& s : samples) {
    double x1 = 0, x2 = 0, xb = 0, xf = 0;
    n_blocks = std::max(n_blocks, s.blocks.size());
    for (const auto& o : s.blocks) {
      xf += o.n_block * (o.n_block - 1.0);
      if (o.n_block == 0) {
        ++r.events_empty;
        r.empty_nonzero += o.discrepancy != 0;
      } else if (o.n_block == 1) {
        ++r.events_single;
        if (o.n_parent == 1) x1 += o.discrepancy;
        if (o.n_parent == 0) x2 += o.discrepancy;
      } else {
        ++r.events_multi;
        xb += o.discrepancy;
      }
      if (s.regular_proxy) {
        ++r.proxy_blocks;
        r.upper_bound_holds += o.n_parent <= o.n_block;
      }
    }
    a1.push_back(x1);
    a2.push_back(x2);
    b.push_back(xb);
    fm.push_back(xf);
  }
  r.A1 = MeanEstimate::of(a1);
  r.A2 = MeanEstimate::of(a2);
  r.B = MeanEstimate::of(b);
  r.factorial_moment_sum = MeanEstimate::of(fm);
  r.mechanism_bound = 2.0 * f_sup * r.factorial_moment_sum.mean;
  r.mechanism_bound_se = 2.0 * f_sup * (r.factorial_moment_sum.infinite_ci() ? 0.0 : r.factorial_moment_sum.std_error);
  const double jprime = lv.widened(1.0).length();
  r.minami_bound = 2.0 * f_sup * C_M * std::pow(jprime * lv.block_volume, 2) * static_cast<double>(n_blocks);
  const double total = r.A1.mean + r.A2.mean + r.B.mean;
  r.b_fraction = total > 0 ? r.B.mean / total : 0.0;
  return r;
}

/// sup_p P_hat(eta_p(A) >= 1) and P_hat(sum_p eta_p(A) >= t); counts[r][p].
struct NullArrayRow {
  double sup_single = 0.0;
  std::vector<double> thresholds;
  std::vector<double> tail;
};

inline NullArrayRow null_array_check(const std::vector<std::vector<double>>& counts, std::span<const double> t_grid) {
  NullArrayRow row;
  row.thresholds.assign(t_grid.begin(), t_grid.end());
  row.tail.assign(t_grid.size(), 0.0);
  if (counts.empty()) return row;
  std::size_t blocks = 0;
  for (const auto& c : counts) blocks = std::max(blocks, c.size());
  std::vector<double> hit(blocks, 0.0);
  for (const auto& c : counts) {
    double total = 0;
    for (std::size_t p = 0; p < c.size(); ++p) {
      hit[p] += c[p] >= 1;
      total += c[p];
    }
    for (std::size_t t = 0; t < t_grid.size(); ++t) row.tail[t] += total >= t_grid[t];
  }
  const double n = static_cast<double>(counts.size());
  for (double h : hit) row.sup_single = std::max(row.sup_single, h / n);
  for (auto& x : row.tail) x /= n;
  return row;
}

}  // namespace anderson::stats
