#pragma once

// E[xi(g)] <= C_W int_{|x| < r|Lambda|} |g| + C_R / (r^2 |Lambda|) for g with
// |g(x)| <= C_R / x^2 outside [-R, R]; xi(g) = sum_j g(|Lambda| (E_j - E0)).

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "anderson/spectral.hpp"
#include "anderson/stats/common.hpp"

namespace anderson::stats {

struct TailFunction {
  std::function<double(double)> g;
  double C_R = 0.0;
  double R = 0.0;
  /// Closed form of int_{-t}^{t} |g|, empty to integrate numerically.
  std::function<double(double)> abs_integral;

  static TailFunction zero() {
    return {[](double) { return 0.0; }, 0.0, 0.0, [](double) { return 0.0; }};
  }

  /// f_zeta(x) = Im 1/(x - zeta) with zeta = sigma + i tau; C_R = 2, R = 2 for zeta = i.
  static TailFunction cauchy(double sigma, double tau, double C_R, double R) {
    if (!(tau > 0)) throw std::invalid_argument("cauchy: tau must be positive");
    return {[sigma, tau](double x) { return tau / ((x - sigma) * (x - sigma) + tau * tau); }, C_R, R,
            [sigma, tau](double t) { return std::atan((t - sigma) / tau) + std::atan((t + sigma) / tau); }};
  }

  double integral_abs(double t) const {
    if (abs_integral) return abs_integral(t);
    auto f = [this](double x) { return std::abs(g(x)); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -t, t, 15, 1e-12);
  }
};

struct AprioriReport {
  std::vector<double> xi;        // xi(g) per realization
  std::vector<double> outside;   // |II|, eigenvalues outside I
  MeanEstimate mean;
  double integral = 0.0;         // int_{|x| < r|Lambda|} |g|
  double tail_bound = 0.0;       // C_R / (r^2 |Lambda|)
  double rhs = 0.0;
  double confidence_z = 2.326347874040841;
  bool mean_ok = false;          // mean - z SE <= rhs
  std::size_t outside_ok = 0;    // realizations with |II| <= tail_bound
  double outside_fraction = 0.0;
  std::size_t pointwise_ok = 0;  // realizations with xi(g) <= rhs (diagnostic)
  double pointwise_fraction = 0.0;
  bool accepted = false;         // mean_ok and outside_fraction >= required
};

struct AprioriValue {
  double xi = 0.0;       // xi(g)
  double outside = 0.0;  // |II|, the part from eigenvalues outside I
};

/// One realization; `spectrum` holds every eigenvalue.
inline AprioriValue apriori_value(std::span<const double> spectrum, const TailFunction& g, double E0, Interval I,
                                  double volume) {
  AprioriValue v;
  double out = 0.0;
  for (double e : spectrum) {
    const double x = g.g(volume * (e - E0));
    v.xi += x;
    if (!(e > I.lo && e < I.hi)) out += x;
  }
  v.outside = std::abs(out);
  return v;
}

/// r = dist(E0, I^c).
inline AprioriReport apriori_summary(std::span<const AprioriValue> values, const TailFunction& g, double E0,
                                     Interval I, double volume, double C_W, double required_fraction = 0.99) {
  if (values.empty()) throw std::invalid_argument("apriori_tail_check: zero samples");
  const double r = std::min(E0 - I.lo, I.hi - E0);
  if (!(r > 0)) throw std::invalid_argument("apriori_tail_check: E0 must lie inside I");
  if (r * volume < g.R) throw std::invalid_argument("apriori_tail_check: need r |Lambda| >= R");
  AprioriReport rep;
  rep.integral = g.integral_abs(r * volume);
  rep.tail_bound = g.C_R / (r * r * volume);
  rep.rhs = C_W * rep.integral + rep.tail_bound;
  for (const auto& v : values) {
    rep.xi.push_back(v.xi);
    rep.outside.push_back(v.outside);
    rep.outside_ok += v.outside <= rep.tail_bound * (1.0 + 1e-12);
    rep.pointwise_ok += v.xi <= rep.rhs;
  }
  const double n = static_cast<double>(values.size());
  rep.mean = MeanEstimate::of(rep.xi);
  const double se = rep.mean.infinite_ci() ? 0.0 : rep.mean.std_error;
  rep.mean_ok = rep.mean.mean - rep.confidence_z * se <= rep.rhs;
  rep.outside_fraction = static_cast<double>(rep.outside_ok) / n;
  rep.pointwise_fraction = static_cast<double>(rep.pointwise_ok) / n;
  rep.accepted = rep.mean_ok && rep.outside_fraction >= required_fraction;
  return rep;
}

inline AprioriReport apriori_tail_check(const std::vector<std::vector<double>>& spectra, const TailFunction& g,
                                        double E0, Interval I, double volume, double C_W,
                                        double required_fraction = 0.99) {
  std::vector<AprioriValue> values;
  for (const auto& ev : spectra) values.push_back(apriori_value(ev, g, E0, I, volume));
  return apriori_summary(values, g, E0, I, volume, C_W, required_fraction);
}

}  // namespace anderson::stats
