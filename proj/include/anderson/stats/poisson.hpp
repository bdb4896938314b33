#pragma once

// Goodness-of-fit of the scaled eigenvalue process against a Poisson
// process with intensity n_hat de x du: gap law, counting law, spatial
// uniformity, energy/space independence and the block-sum conditions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "anderson/pointprocess.hpp"
#include "anderson/stats/common.hpp"

namespace anderson::stats {

/// One realization: parent atoms with e in [-(a + margin), a + margin) and,
/// optionally, block counts eta_p(A) per rectangle ([rect][p]).
struct PoissonSample {
  std::vector<Atom> atoms;
  std::vector<std::vector<double>> block_counts;
};

struct PoissonOptions {
  double a = 50.0;       // gaps, uniformity and n_hat use atoms with e in [-a, a)
  double n_hat = 0.0;    // <= 0: estimated from the atoms in [-a, a)
  std::vector<Rectangle> rectangles;
  int space_bins = 10;   // per axis
  int energy_bins = 5;   // for the independence table
  double alpha = 0.01;
  std::size_t min_realizations = 200;
  double dispersion_tolerance = 0.15;
  double multi_occupation_limit = 0.05;
};

struct CountingResult {
  Rectangle rectangle;
  double target_mean = 0.0;  // n_hat |A|
  MeanEstimate counts;
  double variance = 0.0;
  double variance_se = 0.0;
  double dispersion = 0.0;  // variance / mean
  double dispersion_se = 0.0;
  ChiSquareResult chi_square;
  bool dispersion_ok = false;
  bool rejected = false;
};

struct BlockSumResult {
  Rectangle rectangle;
  MeanEstimate at_least_two;  // per-realization sum_p 1[eta_p(A) >= 2]
  MeanEstimate at_least_one;  // per-realization sum_p 1[eta_p(A) >= 1]
  double target = 0.0;        // n_hat |A|
  double sigma = 0.0;         // combined SE of at_least_one and target
  double z = 0.0;
  bool multi_ok = false;
  bool single_ok = false;
};

struct PoissonReport {
  std::size_t n_realizations = 0;
  std::size_t n_atoms = 0;
  double n_hat = 0.0;
  double n_hat_se = 0.0;
  bool n_hat_estimated = false;
  bool underpowered = false;
  KsResult gaps;
  bool gaps_rejected = false;
  std::vector<CountingResult> counting;
  ChiSquareResult uniformity;
  bool uniformity_rejected = false;
  ChiSquareResult independence;
  bool independence_rejected = false;
  std::vector<BlockSumResult> blocks;
  bool accepted = false;
};

namespace detail {

inline int bin_of(double u, int m) {
  // u = x / L with x in {1..L}; the guard absorbs rounding in u * m.
  const int b = static_cast<int>(std::ceil(u * m - 1e-9)) - 1;
  return std::clamp(b, 0, m - 1);
}

inline std::size_t space_bin(std::span<const double> u, int m) {
  std::size_t idx = 0;
  for (double x : u) idx = idx * static_cast<std::size_t>(m) + static_cast<std::size_t>(bin_of(x, m));
  return idx;
}

/// Pearson chi-square of independence for a contingency table.
inline ChiSquareResult independence_test(const std::vector<std::vector<double>>& table) {
  ChiSquareResult r;
  const std::size_t rows = table.size();
  if (rows == 0) return r;
  const std::size_t cols = table[0].size();
  std::vector<double> rs(rows, 0.0), cs(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      rs[i] += table[i][j];
      cs[j] += table[i][j];
      total += table[i][j];
    }
  }
  if (total <= 0) return r;
  std::size_t used_rows = 0, used_cols = 0;
  for (double x : rs) used_rows += x > 0;
  for (double x : cs) used_cols += x > 0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = rs[i] * cs[j] / total;
      if (e > 0) r.statistic += (table[i][j] - e) * (table[i][j] - e) / e;
    }
  }
  r.cells = used_rows * used_cols;
  r.df = static_cast<double>((used_rows > 0 ? used_rows - 1 : 0) * (used_cols > 0 ? used_cols - 1 : 0));
  r.p_value = r.df > 0 ? chi_square_survival(r.statistic, r.df) : 1.0;
  return r;
}

}  // namespace detail

/// Forward gaps: for each atom with e in [-a, a) the distance to the next
/// atom of the same realization (which may lie in the margin). Atoms with no
/// successor are dropped.
inline std::vector<double> forward_gaps(std::span<const PoissonSample> samples, double a) {
  std::vector<double> gaps;
  for (const auto& s : samples) {
    std::vector<double> e;
    e.reserve(s.atoms.size());
    for (const auto& x : s.atoms) e.push_back(x.e);
    std::sort(e.begin(), e.end());
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
      if (e[i] >= -a && e[i] < a) gaps.push_back(e[i + 1] - e[i]);
    }
  }
  return gaps;
}

inline CountingResult counting_test(std::span<const double> counts, const Rectangle& rect, double n_hat,
                                    std::size_t fitted, const PoissonOptions& opt) {
  CountingResult c;
  c.rectangle = rect;
  c.target_mean = n_hat * rect.measure();
  c.counts = MeanEstimate::of(counts);
  const double n = static_cast<double>(counts.size());
  c.variance = c.counts.variance;
  if (counts.size() > 3) {
    double m4 = 0.0;
    for (double x : counts) m4 += std::pow(x - c.counts.mean, 4);
    m4 /= n;
    const double s2 = c.variance;
    c.variance_se = std::sqrt(std::max(0.0, (m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n));
  }
  if (c.counts.mean > 0) {
    c.dispersion = c.variance / c.counts.mean;
    // Delta method for s^2 / xbar, ignoring the covariance term.
    c.dispersion_se = std::hypot(c.variance_se / c.counts.mean,
                                 c.variance * c.counts.std_error / (c.counts.mean * c.counts.mean));
  }
  c.dispersion_ok = c.counts.mean > 0 && std::abs(c.dispersion - 1.0) <= opt.dispersion_tolerance;

  std::size_t kmax = 0;
  for (double x : counts) kmax = std::max(kmax, static_cast<std::size_t>(x));
  while (poisson_pmf(kmax + 1, c.target_mean) * n >= 1.0) ++kmax;
  std::vector<double> observed(kmax + 2, 0.0), expected(kmax + 2, 0.0);
  for (double x : counts) observed[static_cast<std::size_t>(x)] += 1.0;
  double cum = 0.0;
  for (std::size_t k = 0; k <= kmax; ++k) {
    expected[k] = n * poisson_pmf(k, c.target_mean);
    cum += expected[k];
  }
  expected[kmax + 1] = std::max(0.0, n - cum);
  c.chi_square = chi_square_gof(observed, expected, fitted);
  c.rejected = c.chi_square.df > 0 && c.chi_square.p_value < opt.alpha;
  return c;
}

inline PoissonReport poisson_suite(std::span<const PoissonSample> samples, int dim, const PoissonOptions& opt) {
  if (!(opt.a > 0)) throw std::invalid_argument("poisson_suite: a must be positive");
  for (const auto& r : opt.rectangles) {
    if (r.e_lo < -opt.a || r.e_hi > opt.a) {
      throw std::invalid_argument("poisson_suite: rectangles must lie inside [-a, a) x K");
    }
  }
  PoissonReport rep;
  rep.n_realizations = samples.size();

  std::vector<double> per_realization;
  for (const auto& s : samples) {
    double k = 0;
    for (const auto& x : s.atoms) k += x.e >= -opt.a && x.e < opt.a;
    per_realization.push_back(k);
    rep.n_atoms += static_cast<std::size_t>(k);
  }
  if (opt.n_hat > 0) {
    rep.n_hat = opt.n_hat;
  } else {
    rep.n_hat_estimated = true;
    const auto m = MeanEstimate::of(per_realization);
    rep.n_hat = samples.empty() ? 0.0 : m.mean / (2.0 * opt.a);
    rep.n_hat_se = m.infinite_ci() ? 0.0 : m.std_error / (2.0 * opt.a);
  }

  const auto gaps = forward_gaps(samples, opt.a);
  rep.underpowered = samples.size() < opt.min_realizations || rep.n_atoms <= 1 || gaps.size() < 2;
  if (!(rep.n_hat > 0)) {
    rep.underpowered = true;
    return rep;
  }

  const double rate = rep.n_hat;
  rep.gaps = ks_test(gaps, [rate](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-rate * x); });
  rep.gaps_rejected = gaps.size() >= 2 && rep.gaps.p_value < opt.alpha;

  const std::size_t fitted = rep.n_hat_estimated ? 1 : 0;
  for (std::size_t ri = 0; ri < opt.rectangles.size(); ++ri) {
    const auto& rect = opt.rectangles[ri];
    std::vector<double> counts;
    for (const auto& s : samples) {
      double k = 0;
      for (const auto& x : s.atoms) k += rect.contains(x);
      counts.push_back(k);
    }
    if (!counts.empty()) rep.counting.push_back(counting_test(counts, rect, rep.n_hat, fitted, opt));

    bool have_blocks = !samples.empty();
    for (const auto& s : samples) have_blocks = have_blocks && s.block_counts.size() > ri;
    if (have_blocks) {
      BlockSumResult b;
      b.rectangle = rect;
      std::vector<double> two, one;
      for (const auto& s : samples) {
        double t = 0, o = 0;
        for (double c : s.block_counts[ri]) {
          t += c >= 2;
          o += c >= 1;
        }
        two.push_back(t);
        one.push_back(o);
      }
      b.at_least_two = MeanEstimate::of(two);
      b.at_least_one = MeanEstimate::of(one);
      b.target = rep.n_hat * rect.measure();
      const double se1 = b.at_least_one.infinite_ci() ? 0.0 : b.at_least_one.std_error;
      b.sigma = std::hypot(se1, rep.n_hat_se * rect.measure());
      b.z = b.sigma > 0 ? std::abs(b.at_least_one.mean - b.target) / b.sigma : 0.0;
      b.multi_ok = b.at_least_two.mean <= opt.multi_occupation_limit;
      b.single_ok = b.sigma > 0 ? b.z <= 3.0 : b.at_least_one.mean == b.target;
      rep.blocks.push_back(b);
    }
  }

  const int m = std::max(1, opt.space_bins);
  std::size_t cells = 1;
  for (int a = 0; a < dim; ++a) cells *= static_cast<std::size_t>(m);
  const int eb = std::max(1, opt.energy_bins);
  std::vector<double> occupancy(cells, 0.0);
  std::vector<std::vector<double>> table(static_cast<std::size_t>(eb), std::vector<double>(cells, 0.0));
  for (const auto& s : samples) {
    for (const auto& x : s.atoms) {
      if (!(x.e >= -opt.a && x.e < opt.a)) continue;
      const auto sb = detail::space_bin(x.u, m);
      occupancy[sb] += 1.0;
      const int e_bin = std::clamp(static_cast<int>(std::floor((x.e + opt.a) / (2.0 * opt.a) * eb)), 0, eb - 1);
      table[static_cast<std::size_t>(e_bin)][sb] += 1.0;
    }
  }
  const double total = std::accumulate(occupancy.begin(), occupancy.end(), 0.0);
  std::vector<double> expected(cells, total / static_cast<double>(cells));
  rep.uniformity = chi_square_gof(occupancy, expected, 0, 0.0);
  rep.uniformity_rejected = total > 0 && rep.uniformity.p_value < opt.alpha;
  rep.independence = detail::independence_test(table);
  rep.independence_rejected = rep.independence.p_value < opt.alpha;

  rep.accepted = !rep.underpowered && !rep.gaps_rejected && !rep.uniformity_rejected && !rep.independence_rejected;
  for (const auto& c : rep.counting) rep.accepted = rep.accepted && c.dispersion_ok && !c.rejected;
  for (const auto& b : rep.blocks) rep.accepted = rep.accepted && b.multi_ok && b.single_ok;
  return rep;
}

}  // namespace anderson::stats
