#pragma once

// Small statistical helpers shared by the estimators.

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace anderson::stats {

struct MeanEstimate {
  double mean = 0.0;
  double std_error = std::numeric_limits<double>::infinity();
  double variance = 0.0;
  std::size_t n = 0;

  /// Samples are summed in the given order; callers sort by realization
  /// index so the result does not depend on scheduling.
  static MeanEstimate of(std::span<const double> xs) {
    MeanEstimate m;
    m.n = xs.size();
    if (xs.empty()) {
      m.mean = std::numeric_limits<double>::quiet_NaN();
      return m;
    }
    double s = 0.0;
    for (double x : xs) s += x;
    m.mean = s / static_cast<double>(m.n);
    if (m.n > 1) {
      double ss = 0.0;
      for (double x : xs) ss += (x - m.mean) * (x - m.mean);
      m.variance = ss / static_cast<double>(m.n - 1);
      m.std_error = std::sqrt(m.variance / static_cast<double>(m.n));
    }
    return m;
  }

  bool infinite_ci() const { return !std::isfinite(std_error); }
};

struct ProportionInterval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for k successes out of n.
inline ProportionInterval wilson(std::size_t k, std::size_t n, double z = 1.959963984540054) {
  if (n == 0) throw std::invalid_argument("wilson: n must be positive");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// Complementary Kolmogorov distribution P(K > x), K = sup|B(t)|.
inline double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  constexpr double pi = 3.14159265358979323846;
  if (x < 1.0) {
    // Jacobi-transformed series, accurate for small x.
    const double w = std::sqrt(2.0 * pi) / x;
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double t = (2.0 * k - 1.0) * pi / (2.0 * x);
      s += std::exp(-0.5 * t * t);
    }
    return std::clamp(1.0 - w * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// One-sample KS test; asymptotic p-value with Stephens' finite-n correction.
inline KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  KsResult r;
  r.n = samples.size();
  if (samples.empty()) return r;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  r.statistic = d;
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

inline double chi_square_survival(double stat, double df) {
  if (!(df > 0)) return 1.0;
  if (!(stat > 0)) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), stat));
}

struct ChiSquareResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  std::size_t cells = 0;
};

/// Pearson chi-square for observed vs expected cell counts; adjacent cells
/// are pooled (in order) until each pooled expectation reaches `min_expected`.
inline ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                                      std::size_t fitted_params = 0, double min_expected = 5.0) {
  if (observed.size() != expected.size()) throw std::invalid_argument("chi_square_gof: size mismatch");
  std::vector<double> o, e;
  double acc_o = 0.0, acc_e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    acc_o += observed[i];
    acc_e += expected[i];
    if (acc_e >= min_expected) {
      o.push_back(acc_o);
      e.push_back(acc_e);
      acc_o = acc_e = 0.0;
    }
  }
  if (acc_e > 0.0 || acc_o > 0.0) {
    if (e.empty()) {
      o.push_back(acc_o);
      e.push_back(acc_e);
    } else {
      o.back() += acc_o;
      e.back() += acc_e;
    }
  }
  ChiSquareResult r;
  r.cells = e.size();
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] > 0) r.statistic += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  }
  r.df = static_cast<double>(e.size()) - 1.0 - static_cast<double>(fitted_params);
  r.p_value = r.df > 0 ? chi_square_survival(r.statistic, r.df) : 1.0;
  return r;
}

inline double poisson_pmf(std::size_t k, double mean) {
  if (mean <= 0.0) return k == 0 ? 1.0 : 0.0;
  return boost::math::pdf(boost::math::poisson_distribution<double>(mean), static_cast<double>(k));
}

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// Least-squares slope of y on x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols_slope: need >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace anderson::stats
